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
#include <vector>

namespace redit::describe {

// Hard ceiling on the rendered prompt, in global-tokenizer tokens.
inline constexpr std::size_t kPromptTokenCeiling = 1024;
// Length the backend is asked to respect for the description itself.
inline constexpr std::size_t kDescriptionTokenBudget = 520;

struct PromptSection {
  std::string key;  // overview, objects, humans_animals, ...
  std::string text;
};

/// Scene-description prompt: ordered instruction blocks with a single
/// `{edit_prompt}` slot in the edited-region block.
class PromptTemplate {
 public:
  static const PromptTemplate& scene_description();

  PromptTemplate(std::vector<PromptSection> sections, std::size_t token_budget, std::size_t token_ceiling);

  // Throws ConfigError on an empty instruction and RangeError when the
  // rendered prompt exceeds the token ceiling.
  std::string render(std::string_view edit_prompt) const;

  const std::vector<PromptSection>& sections() const { return sections_; }
  std::size_t token_budget() const { return token_budget_; }
  std::size_t token_ceiling() const { return token_ceiling_; }

 private:
  std::vector<PromptSection> sections_;
  std::size_t token_budget_;
  std::size_t token_ceiling_;
};

// The section keys every scene prompt must contain, in order.
const std::vector<std::string>& required_sections();

std::string build_prompt(std::string_view edit_prompt);

// Occurrences of `needle` in `haystack` (non-overlapping).
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

}  // namespace redit::describe
