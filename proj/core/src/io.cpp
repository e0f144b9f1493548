#include "trajllm/io.hpp"

#include <cstring>
#include <sstream>
#include <stdexcept>

namespace trajllm {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

uint64_t file_checksum(const std::string& path) {
  return fnv1a(read_file(path));
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt_float(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

BinWriter::BinWriter(const std::string& path) : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("cannot write file: " + path);
}

void BinWriter::bytes(const void* data, size_t len) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  if (!out_) throw std::runtime_error("binary write failed");
}

BinReader::BinReader(const std::string& path)
    : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw std::runtime_error("cannot open file: " + path);
}

void BinReader::bytes(void* data, size_t len) {
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
  if (in_.gcount() != static_cast<std::streamsize>(len)) {
    throw std::runtime_error("corrupt file (truncated): " + path_);
  }
}

uint8_t BinReader::u8() {
  uint8_t v;
  bytes(&v, 1);
  return v;
}
uint16_t BinReader::u16() {
  uint16_t v;
  bytes(&v, 2);
  return v;
}
uint32_t BinReader::u32() {
  uint32_t v;
  bytes(&v, 4);
  return v;
}
uint64_t BinReader::u64() {
  uint64_t v;
  bytes(&v, 8);
  return v;
}
float BinReader::f32() {
  float v;
  bytes(&v, 4);
  return v;
}
std::string BinReader::str(size_t len) {
  std::string s(len, '\0');
  bytes(s.data(), len);
  return s;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& provenance,
                     const std::vector<std::string>& columns)
    : out_(path, std::ios::binary), n_cols_(columns.size()) {
  if (!out_) throw std::runtime_error("cannot write file: " + path);
  if (!provenance.empty()) out_ << "# " << provenance << "\n";
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ",";
    out_ << columns[i];
  }
  out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != n_cols_) {
    throw std::invalid_argument("CsvWriter: expected " + std::to_string(n_cols_) +
                                " cells, got " + std::to_string(cells.size()));
  }
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ",";
    out_ << cells[i];
  }
  out_ << "\n";
}

void CsvWriter::flush() { out_.flush(); }

}  // namespace trajllm
