// Copyright 2026 The regionedit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "redit/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "redit/errors.hpp"

namespace redit::encoders {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isspace(c)) {
      flush();
    } else if (c < 128 && std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(c < 128 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  for (const auto& w : split_words(text)) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

Vocabulary::Vocabulary() : tokens_{"<pad>", "<unk>"}, index_{{"<pad>", kPad}, {"<unk>", kUnk}} {}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>") {
    throw ConfigError("vocabulary must start with <pad> and <unk>");
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.index_.clear();
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i)).second) {
      throw ConfigError("duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus) {
  std::set<std::string> words;
  for (const auto& text : corpus)
    for (auto& w : split_words(text)) words.insert(std::move(w));
  words.erase("<pad>");
  words.erase("<unk>");
  std::vector<std::string> tokens{"<pad>", "<unk>"};
  tokens.insert(tokens.end(), words.begin(), words.end());
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary " + path);
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) tokens.push_back(line);
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path);
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw IoError("failed writing vocabulary " + path);
}

int Vocabulary::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) throw RangeError(fmt::format("token id {} out of range", id));
  return tokens_[static_cast<std::size_t>(id)];
}

TextTokens tokenize(std::string_view text, const Vocabulary& vocab, std::size_t budget) {
  const auto words = split_words(text);
  TextTokens out;
  out.original_length = words.size();
  if (words.empty()) {
    out.ids.push_back(Vocabulary::kPad);
    return out;
  }
  const std::size_t keep = std::min(words.size(), budget);
  if (keep < words.size()) {
    spdlog::warn("text of {} tokens truncated to the {}-token budget", words.size(), budget);
  }
  out.ids.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.ids.push_back(vocab.id(words[i]));
  return out;
}

std::string detokenize(const TextTokens& tokens, const Vocabulary& vocab) {
  std::string out;
  for (int id : tokens.ids) {
    if (id == Vocabulary::kPad) continue;
    if (!out.empty()) out.push_back(' ');
    out += vocab.token(id);
  }
  return out;
}

}  // namespace redit::encoders
