// Copyright 2026 The probesearch Authors.
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

#ifndef PROBESEARCH_SRC_LEXICON_HPP_
#define PROBESEARCH_SRC_LEXICON_HPP_

#include <array>
#include <string_view>

// Word groups of the synthetic language model. The vocabulary lists them in
// this order, so token ids are stable across builds.
namespace probesearch::lexicon {

inline constexpr std::array<std::string_view, 8> kSpecial = {
    "<eos>", "<unk>", "\n", "Question:", "Answer:", ".", ",", "?"};

inline constexpr std::array<std::string_view, 8> kNames = {
    "Tom", "Anna", "Ben", "Maya", "Sam", "Lily", "Omar", "Zoe"};
inline constexpr std::array<std::string_view, 8> kObjects = {
    "apples", "marbles", "coins", "stickers", "books", "cards", "shells", "pencils"};
inline constexpr std::array<std::string_view, 5> kGainVerbs = {
    "buys", "finds", "gets", "receives", "picks"};
inline constexpr std::array<std::string_view, 5> kLossVerbs = {
    "gives", "loses", "eats", "sells", "drops"};
inline constexpr std::array<std::string_view, 8> kNarrative = {
    "has", "more", "away", "How", "many", "does", "have", "now"};

// Opening words of a step-by-step response.
inline constexpr std::array<std::string_view, 6> kCotStarters = {
    "First", "Let's", "Step", "Begin", "Initially", "Start"};
// Words that abandon a direct answer and start reasoning instead.
inline constexpr std::array<std::string_view, 3> kCotSwitches = {
    "Wait", "Actually", "Hmm"};
// Words that can be inserted into reasoning without changing it.
inline constexpr std::array<std::string_view, 6> kCotFillers = {
    "also", "carefully", "right", "indeed", "again", "okay"};
// Openers of a short answer with no reasoning.
inline constexpr std::array<std::string_view, 10> kDirectLeads = {
    "Obviously", "Clearly", "Simply", "Just", "Quickly",
    "Surely", "Probably", "Basically", "Honestly", "Roughly"};

inline constexpr std::array<std::string_view, 11> kTemplate = {
    "starts", "with", "next", "plus", "minus", "equals",
    "so", "the", "answer", "is", "Therefore"};

}  // namespace probesearch::lexicon

#endif  // PROBESEARCH_SRC_LEXICON_HPP_
