#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace trajllm {

// FNV-1a, used for config hashes and file checksums.
inline uint64_t fnv1a(const void* bytes, size_t len, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
uint64_t file_checksum(const std::string& path);

std::string hex64(uint64_t v);

// locale-independent float formatting for CSV output
std::string fmt_float(double v);

// Little-endian binary writer/reader over std::fstream. The host is assumed
// little-endian; values are written raw.
class BinWriter {
 public:
  explicit BinWriter(const std::string& path);
  void bytes(const void* data, size_t len);
  void u8(uint8_t v) { bytes(&v, 1); }
  void u16(uint16_t v) { bytes(&v, 2); }
  void u32(uint32_t v) { bytes(&v, 4); }
  void u64(uint64_t v) { bytes(&v, 8); }
  void f32(float v) { bytes(&v, 4); }
  void str(const std::string& s) { bytes(s.data(), s.size()); }
  bool ok() const { return out_.good(); }

 private:
  std::ofstream out_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path);
  void bytes(void* data, size_t len);
  uint8_t u8();
  uint16_t u16();
  uint32_t u32();
  uint64_t u64();
  float f32();
  std::string str(size_t len);

 private:
  std::ifstream in_;
  std::string path_;
};

// Append-only CSV with `# key=value ...` provenance comment up top.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& provenance,
            const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);
  void flush();

 private:
  std::ofstream out_;
  size_t n_cols_;
};

}  // namespace trajllm
