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

#include "cotrl/response_protocol.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace cotrl {

namespace {

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool AllSpace(std::string_view s) {
  return std::all_of(s.begin(), s.end(), IsSpace);
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && IsSpace(s.front())) s.remove_prefix(1);
  while (!s.empty() && IsSpace(s.back())) s.remove_suffix(1);
  return s;
}

std::size_t CountOccurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

const char* VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kReal:
      return "REAL";
    case Verdict::kFake:
      return "FAKE";
    case Verdict::kInvalid:
      return "INVALID";
  }
  return "INVALID";
}

Verdict VerdictFromName(const std::string& name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (up == "REAL") return Verdict::kReal;
  if (up == "FAKE") return Verdict::kFake;
  if (up == "INVALID") return Verdict::kInvalid;
  throw Error("bad_verdict", "unknown verdict name: " + name);
}

Verdict VerdictOf(std::string_view answer) {
  std::string_view s = Trim(answer);
  while (!s.empty() && std::ispunct(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
    s = Trim(s);
  }
  if (s.size() != 4) return Verdict::kInvalid;
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "real") return Verdict::kReal;
  if (lower == "fake") return Verdict::kFake;
  return Verdict::kInvalid;
}

ParsedResponse Parse(std::string_view text) {
  ParsedResponse out;
  constexpr std::array<std::string_view, 4> kTags = {kThinkOpen, kThinkClose,
                                                     kAnswerOpen, kAnswerClose};
  for (auto tag : kTags) {
    if (CountOccurrences(text, tag) != 1) return out;
  }
  const std::size_t think_open = text.find(kThinkOpen);
  const std::size_t think_close = text.find(kThinkClose);
  const std::size_t answer_open = text.find(kAnswerOpen);
  const std::size_t answer_close = text.find(kAnswerClose);
  if (!(think_open < think_close && think_close < answer_open &&
        answer_open < answer_close)) {
    return out;
  }
  if (!AllSpace(text.substr(0, think_open))) return out;
  const std::size_t gap_begin = think_close + kThinkClose.size();
  if (!AllSpace(text.substr(gap_begin, answer_open - gap_begin))) return out;
  if (!AllSpace(text.substr(answer_close + kAnswerClose.size()))) return out;

  const std::size_t think_begin = think_open + kThinkOpen.size();
  const std::size_t answer_begin = answer_open + kAnswerOpen.size();
  out.think = std::string(Trim(text.substr(think_begin, think_close - think_begin)));
  out.answer =
      std::string(Trim(text.substr(answer_begin, answer_close - answer_begin)));
  out.format_ok = true;
  out.verdict = VerdictOf(*out.answer);
  return out;
}

}  // namespace cotrl
