#include "trajllm/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <stdexcept>

#include "trajllm/prompts.hpp"

namespace trajllm {

namespace {

const char* kBeginMarker = "<|traj_begin|>";
const char* kEndMarker = "<|traj_end|>";

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

}  // namespace

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary v;
  return v;
}

Vocabulary::Vocabulary() {
  id_to_str_.push_back("<pad>");
  id_to_str_.push_back("<bos>");
  id_to_str_.push_back(kBeginMarker);
  id_to_str_.push_back(kEndMarker);
  for (int b = 0; b < 256; ++b) id_to_str_.push_back(std::string(1, static_cast<char>(b)));

  // Word list: unique whitespace-delimited segments of the built-in prompt,
  // minus the placeholder markers.
  std::string prompt = kMazeTaskPrompt;
  const std::string begin = kBeginMarker, end = kEndMarker;
  size_t pos;
  while ((pos = prompt.find(begin)) != std::string::npos) prompt.replace(pos, begin.size(), " ");
  while ((pos = prompt.find(end)) != std::string::npos) prompt.replace(pos, end.size(), " ");
  std::set<std::string> words;
  std::istringstream is(prompt);
  std::string w;
  while (is >> w) {
    if (w.size() >= 2) words.insert(w);
  }
  for (const auto& word : words) {
    word_to_id_.emplace(word, static_cast<int>(id_to_str_.size()));
    id_to_str_.push_back(word);
  }
}

void Vocabulary::append_plain(const std::string& text, std::vector<int>& out) const {
  size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      out.push_back(byte_id(static_cast<unsigned char>(text[i])));
      ++i;
      continue;
    }
    size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    const std::string seg = text.substr(i, j - i);
    auto it = word_to_id_.find(seg);
    if (it != word_to_id_.end()) {
      out.push_back(it->second);
    } else {
      for (char c : seg) out.push_back(byte_id(static_cast<unsigned char>(c)));
    }
    i = j;
  }
}

std::vector<int> Vocabulary::tokenize(const std::string& text) const {
  std::vector<int> out;
  const std::string begin = kBeginMarker, end = kEndMarker;
  size_t i = 0;
  while (i < text.size()) {
    const size_t pb = text.find(begin, i);
    const size_t pe = text.find(end, i);
    size_t next = std::min(pb, pe);
    if (next == std::string::npos) {
      append_plain(text.substr(i), out);
      break;
    }
    if (next > i) append_plain(text.substr(i, next - i), out);
    if (next == pb) {
      out.push_back(kTrajBegin);
      i = next + begin.size();
    } else {
      out.push_back(kTrajEnd);
      i = next + end.size();
    }
  }
  return out;
}

std::string Vocabulary::detokenize(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) out += token_text(id);
  return out;
}

const std::string& Vocabulary::token_text(int id) const {
  if (id < 0 || id >= size()) {
    throw std::invalid_argument("token id " + std::to_string(id) +
                                " outside vocabulary of size " + std::to_string(size()));
  }
  return id_to_str_[static_cast<size_t>(id)];
}

}  // namespace trajllm
