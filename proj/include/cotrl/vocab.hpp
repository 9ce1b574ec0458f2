// Copyright 2026 The cotrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cotrl {

using TokenId = std::int32_t;

class Vocabulary {
 public:
  // Index 0 is the pad symbol (also the begin-of-context filler) and index 1
  // is end-of-sequence. The default layout is listed in toy_vocab below.
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kEos = 1;

  explicit Vocabulary(std::vector<std::string> symbols);
  static const Vocabulary& Default();

  std::size_t size() const { return symbols_.size(); }
  const std::string& Symbol(TokenId id) const { return symbols_.at(id); }
  TokenId Id(std::string_view symbol) const;  // throws on unknown symbol
  bool Contains(std::string_view symbol) const;

  // Space-joined symbols; end-of-sequence and pad are not rendered.
  std::string Decode(std::span<const TokenId> tokens) const;
  // Whitespace split; every piece must be a known symbol.
  std::vector<TokenId> Encode(std::string_view text) const;

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, TokenId> index_;
};

// Fixed layout of the default 64-symbol vocabulary.
namespace toy_vocab {
inline constexpr TokenId kVideo = 2;
inline constexpr TokenId kThinkOpen = 3;
inline constexpr TokenId kThinkClose = 4;
inline constexpr TokenId kAnswerOpen = 5;
inline constexpr TokenId kAnswerClose = 6;
inline constexpr TokenId kReal = 7;
inline constexpr TokenId kFake = 8;
inline constexpr TokenId kLevelBase = 9;        // v00..v15
inline constexpr std::size_t kLevels = 16;
inline constexpr TokenId kFrameBase = 25;       // f1..f16
inline constexpr std::size_t kFrames = 16;
inline constexpr TokenId kRealWordBase = 41;    // evidence of authenticity
inline constexpr TokenId kFakeWordBase = 47;    // evidence of forgery
inline constexpr std::size_t kEvidenceWords = 6;
inline constexpr TokenId kNounBase = 53;        // verdict-neutral nouns
inline constexpr std::size_t kNouns = 11;
inline constexpr std::size_t kSize = 64;
}  // namespace toy_vocab

}  // namespace cotrl
