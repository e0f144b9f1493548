#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace trajllm {

// Fixed word+byte vocabulary. Words come from the built-in task prompt;
// anything else falls back to per-byte tokens, so every string tokenizes
// deterministically and detokenize(tokenize(s)) == s.
class Vocabulary {
 public:
  static const Vocabulary& standard();

  int pad_id() const { return kPad; }
  int bos_id() const { return kBos; }
  int traj_begin_id() const { return kTrajBegin; }
  int traj_end_id() const { return kTrajEnd; }
  int byte_id(unsigned char b) const { return kByteBase + b; }

  int size() const { return static_cast<int>(id_to_str_.size()); }

  std::vector<int> tokenize(const std::string& text) const;
  std::string detokenize(const std::vector<int>& ids) const;
  const std::string& token_text(int id) const;

  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kTrajBegin = 2;
  static constexpr int kTrajEnd = 3;
  static constexpr int kByteBase = 4;
  static constexpr int kWordBase = kByteBase + 256;

 private:
  Vocabulary();
  void append_plain(const std::string& text, std::vector<int>& out) const;

  std::vector<std::string> id_to_str_;
  std::unordered_map<std::string, int> word_to_id_;
};

}  // namespace trajllm
