#pragma once

#include <cctype>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "conreader/common.hpp"

namespace conreader {

// One surface token with provenance into the source text: [start, end).
struct RawToken {
  std::string text;  // lowercased
  int start = 0;
  int end = 0;
};

struct Tokenizer {
  virtual ~Tokenizer() = default;
  virtual std::vector<RawToken> tokenize(std::string_view text) const = 0;
};

// Deterministic default: alphanumeric runs plus single punctuation characters.
struct WhitespacePunctTokenizer final : Tokenizer {
  std::vector<RawToken> tokenize(std::string_view text) const override {
    std::vector<RawToken> out;
    const int n = static_cast<int>(text.size());
    int i = 0;
    while (i < n) {
      const unsigned char c = static_cast<unsigned char>(text[static_cast<size_t>(i)]);
      if (std::isspace(c)) {
        ++i;
        continue;
      }
      if (std::isalnum(c)) {
        int j = i;
        while (j < n && std::isalnum(static_cast<unsigned char>(text[static_cast<size_t>(j)])))
          ++j;
        out.push_back({to_lower(text.substr(static_cast<size_t>(i), static_cast<size_t>(j - i))),
                       i, j});
        i = j;
      } else {
        out.push_back({std::string(1, static_cast<char>(c)), i, i + 1});
        ++i;
      }
    }
    return out;
  }
};

class Vocab {
 public:
  static constexpr int kCls = 0;
  static constexpr int kSep = 1;
  static constexpr int kUnk = 2;
  static constexpr int kSlot = 3;

  Vocab() {
    for (const char* s : {"[CLS]", "[SEP]", "[UNK]", "[SLOT]"}) add(s);
  }

  int add(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(tokens_.size());
    tokens_.push_back(token);
    index_.emplace(token, id);
    return id;
  }

  int lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  const std::string& token(int id) const { return tokens_[static_cast<size_t>(id)]; }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void absorb(const Tokenizer& tok, std::string_view text) {
    for (const auto& t : tok.tokenize(text)) add(t.text);
  }

  std::vector<int> ids_of(const std::vector<RawToken>& toks) const {
    std::vector<int> ids;
    ids.reserve(toks.size());
    for (const auto& t : toks) ids.push_back(lookup(t.text));
    return ids;
  }

  static Vocab from_tokens(const std::vector<std::string>& tokens) {
    Vocab v;
    v.tokens_.clear();
    v.index_.clear();
    for (const auto& t : tokens) v.add(t);
    return v;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace conreader
