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

#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace redit::encoders {

inline constexpr std::size_t kRegionTokenBudget = 77;
inline constexpr std::size_t kGlobalTokenBudget = 512;

// Lowercases ASCII letters and splits on whitespace; ASCII punctuation
// becomes its own token. Non-ASCII bytes stay inside words.
std::vector<std::string> split_words(std::string_view text);

// The whitespace-normalized, lowercased form that detokenize() reproduces.
std::string normalize_text(std::string_view text);

/// Token list with ids equal to (0-based) line numbers of the vocabulary
/// file. Ids 0 and 1 are reserved for padding and unknown words.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();
  // Sorted unique words of the corpus after the reserved tokens.
  static Vocabulary build(const std::vector<std::string>& corpus);
  static Vocabulary from_tokens(std::vector<std::string> tokens);
  static Vocabulary load(const std::string& path);
  void save(const std::string& path) const;

  int id(const std::string& word) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct TextTokens {
  std::vector<int> ids;
  std::size_t original_length = 0;  // word count before truncation

  bool truncated() const { return original_length > ids.size(); }
};

// Empty text yields the single padding token. Longer inputs are cut to
// `budget` ids with a logged warning.
TextTokens tokenize(std::string_view text, const Vocabulary& vocab, std::size_t budget);
std::string detokenize(const TextTokens& tokens, const Vocabulary& vocab);

}  // namespace redit::encoders
