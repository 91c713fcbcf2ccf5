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

#include "redit/prompt.hpp"

#include <fmt/format.h>

#include "redit/errors.hpp"
#include "redit/tokenizer.hpp"

namespace redit::describe {

namespace {

constexpr std::string_view kSlot = "{edit_prompt}";

std::vector<PromptSection> scene_sections() {
  return {
      {"input", "Input: <image>"},
      {"instruction",
       "Instruction: You are a meticulous visual analyst. Carefully examine the given image and describe it in a "
       "single, flowing paragraph (maximum 520 tokens). Focus on every visually observable detail, such as color, "
       "texture, material, size, shape, and spatial relationships. Do not use bullet points or lists."},
      {"constraints",
       "Constraints: Avoid assumptions or inferences about unseen factors (e.g., time of day, season, emotions, "
       "story). Describe only what is directly visible in the image."},
      {"overview",
       "Your paragraph must naturally include:\n"
       "- A clear overview of the setting (e.g., indoor/outdoor, environment type, lighting conditions, background "
       "elements, overall mood)"},
      {"objects",
       "- Detailed description of each major object:\n"
       "  - Appearance, color, material (wood, metal, fabric, etc.)\n"
       "  - Texture (smooth, rough, shiny, soft, etc.)\n"
       "  - Size (relative to others)\n"
       "  - Spatial position (e.g., foreground, center-left)"},
      {"humans_animals",
       "- If humans or animals are present, describe each one in full detail:\n"
       "  - Hair, face, visible skin or fur, and accessories\n"
       "  - Clothing: color, texture, material, style, condition\n"
       "  - Pose: orientation and position of each body part (head, arms, legs, torso, hands, feet)\n"
       "  - Stance or motion, only if clearly visible and grounded in the image\n"
       "- Distinct, thorough description for multiple people or animals"},
      {"background", "- Supporting/background elements: furniture, walls, ground, vegetation, distant objects"},
      {"spatial_relations", "- Clear spatial relationships (e.g., in front of, behind, next to, overlapping, under)"},
      {"edited_region",
       "- Explicit description of the visual features of each object or region targeted in the editing "
       "instruction: \"{edit_prompt}\". For example, if the instruction is 'The girl bent and raised her two hands', "
       "then describe:\n"
       "  - Her posture (e.g., leaning forward, bent knees)\n"
       "  - The position and gesture of her hands (e.g., raised above shoulders, palms open)"},
      {"style",
       "Style Requirement: Use vivid, sensory-rich language. Every detail must be grounded in what can actually be "
       "seen. Avoid summarizing; immerse the reader in a scene constructed entirely from the image's visible content."},
  };
}

}  // namespace

const std::vector<std::string>& required_sections() {
  static const std::vector<std::string> keys = {"overview",          "objects",       "humans_animals", "background",
                                                "spatial_relations", "edited_region", "style"};
  return keys;
}

PromptTemplate::PromptTemplate(std::vector<PromptSection> sections, std::size_t token_budget, std::size_t token_ceiling)
    : sections_(std::move(sections)), token_budget_(token_budget), token_ceiling_(token_ceiling) {
  std::size_t slots = 0;
  for (const auto& s : sections_) slots += count_occurrences(s.text, kSlot);
  if (slots != 1) throw ConfigError(fmt::format("prompt template needs exactly one {} slot, found {}", kSlot, slots));
}

const PromptTemplate& PromptTemplate::scene_description() {
  static const PromptTemplate t(scene_sections(), kDescriptionTokenBudget, kPromptTokenCeiling);
  return t;
}

std::string PromptTemplate::render(std::string_view edit_prompt) const {
  if (encoders::split_words(edit_prompt).empty()) throw ConfigError("build_prompt: empty edit instruction");
  std::string out;
  for (const auto& s : sections_) {
    if (!out.empty()) out += '\n';
    const auto pos = s.text.find(kSlot);
    if (pos == std::string::npos) {
      out += s.text;
    } else {
      out.append(s.text, 0, pos);
      out += edit_prompt;
      out.append(s.text, pos + kSlot.size());
    }
  }
  const std::size_t tokens = encoders::split_words(out).size();
  if (tokens > token_ceiling_)
    throw RangeError(fmt::format("rendered prompt has {} tokens, over the {}-token ceiling", tokens, token_ceiling_));
  return out;
}

std::string build_prompt(std::string_view edit_prompt) { return PromptTemplate::scene_description().render(edit_prompt); }

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + needle.size())) ++n;
  return n;
}

}  // namespace redit::describe
