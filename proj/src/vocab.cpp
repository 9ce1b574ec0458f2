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

#include "cotrl/vocab.hpp"

#include <sstream>

#include "cotrl/common.hpp"

namespace cotrl {

Vocabulary::Vocabulary(std::vector<std::string> symbols)
    : symbols_(std::move(symbols)) {
  if (symbols_.size() < 16) {
    throw Error("bad_vocab", "vocabulary needs at least 16 symbols");
  }
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (!index_.emplace(symbols_[i], static_cast<TokenId>(i)).second) {
      throw Error("bad_vocab", "duplicate vocabulary symbol: " + symbols_[i]);
    }
  }
}

const Vocabulary& Vocabulary::Default() {
  static const Vocabulary vocab = [] {
    std::vector<std::string> s = {"<pad>",   "<eos>",   "<video>", "<think>",
                                  "</think>", "<answer>", "</answer>", "real",
                                  "fake"};
    for (int i = 0; i < 16; ++i) {
      s.push_back((i < 10 ? "v0" : "v") + std::to_string(i));
    }
    for (int i = 1; i <= 16; ++i) s.push_back("f" + std::to_string(i));
    for (const char* w : {"natural", "consistent", "smooth", "stable",
                          "coherent", "plausible"}) {
      s.emplace_back(w);
    }
    for (const char* w : {"warped", "flickering", "blurry", "distorted",
                          "mismatched", "synthetic"}) {
      s.emplace_back(w);
    }
    for (const char* w : {"face", "hands", "lighting", "shadows", "motion",
                          "texture", "edges", "background", "eyes", "skin",
                          "physics"}) {
      s.emplace_back(w);
    }
    return Vocabulary(std::move(s));
  }();
  return vocab;
}

TokenId Vocabulary::Id(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) {
    throw Error("unknown_symbol", "unknown vocabulary symbol: " + std::string(symbol));
  }
  return it->second;
}

bool Vocabulary::Contains(std::string_view symbol) const {
  return index_.count(std::string(symbol)) != 0;
}

std::string Vocabulary::Decode(std::span<const TokenId> tokens) const {
  std::string out;
  for (TokenId t : tokens) {
    if (t == kEos || t == kPad) continue;
    if (!out.empty()) out += ' ';
    out += symbols_.at(static_cast<std::size_t>(t));
  }
  return out;
}

std::vector<TokenId> Vocabulary::Encode(std::string_view text) const {
  std::vector<TokenId> out;
  std::istringstream in{std::string(text)};
  std::string piece;
  while (in >> piece) out.push_back(Id(piece));
  return out;
}

}  // namespace cotrl
