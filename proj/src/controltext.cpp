// Copyright 2026 The DynView Authors.
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

#include "dynview/controltext.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "dynview/error.hpp"
#include "dynview/random.hpp"

namespace dynview {

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char raw : text) {
    const auto ch = static_cast<unsigned char>(raw);
    if (ch == '\'') continue;
    const bool space = std::isspace(ch) || (ch < 0x80 && std::ispunct(ch) && ch != '-');
    if (space) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(ch < 0x80 ? static_cast<char>(std::tolower(ch)) : raw);
  }
  return out;
}

TagVocab::TagVocab(std::span<const std::string> tags) {
  for (const auto& raw : tags) {
    std::string tag = normalize_text(raw);
    if (tag.empty() || lookup_.contains(tag)) continue;
    lookup_.insert(tag);
    tags_.push_back(std::move(tag));
  }
}

TagVocab TagVocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open vocabulary '{}'", path.string()));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return TagVocab(lines);
}

namespace {

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  for (std::string w; in >> w;) words.push_back(std::move(w));
  return words;
}

}  // namespace

std::vector<std::string> parse_tags(std::string_view caption, const TagVocab& vocab) {
  const auto words = split_words(normalize_text(caption));
  std::vector<std::string> found;
  std::size_t i = 0;
  while (i < words.size()) {
    std::size_t matched = 0;
    std::string phrase;
    for (std::size_t len = std::min(kMaxTagWords, words.size() - i); len >= 1; --len) {
      std::string candidate = words[i];
      for (std::size_t k = 1; k < len; ++k) candidate += " " + words[i + k];
      if (vocab.contains(candidate)) {
        matched = len;
        phrase = std::move(candidate);
        break;
      }
    }
    if (matched == 0) {
      ++i;
      continue;
    }
    if (std::find(found.begin(), found.end(), phrase) == found.end()) {
      found.push_back(std::move(phrase));
    }
    i += matched;
  }
  return found;
}

std::vector<std::string> drop_tags(std::span<const std::string> tags, double keep_prob,
                                   std::uint64_t seed) {
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) {
    throw DomainError(fmt::format("keep probability {} outside [0, 1]", keep_prob));
  }
  SeededRng rng(seed);
  std::vector<std::string> kept;
  for (const auto& tag : tags) {
    if (rng.bernoulli(keep_prob)) kept.push_back(tag);
  }
  return kept;
}

std::string build_control_sentence(std::span<const std::string> tags,
                                   std::optional<std::uint64_t> shuffle_seed) {
  std::vector<std::string> order(tags.begin(), tags.end());
  if (shuffle_seed) {
    SeededRng rng(*shuffle_seed);
    rng.shuffle(order);
  }
  return fmt::format("{}{}", fmt::join(order, ", "), kSepToken);
}

std::vector<std::string> format_queries(QueryKind kind, std::span<const std::string> names) {
  if (names.empty()) throw DomainError("format_queries needs at least one name");
  std::vector<std::string> out;
  out.reserve(names.size());
  for (const auto& name : names) {
    out.push_back(kind == QueryKind::category ? fmt::format("a photo of a {}", name)
                                              : fmt::format("the object has {}", name));
  }
  return out;
}

std::vector<std::string> threshold_tags(std::span<const std::pair<std::string, double>> scores,
                                        double tau) {
  std::vector<std::pair<std::string, double>> kept;
  for (const auto& [tag, conf] : scores) {
    if (!(conf >= 0.0 && conf <= 1.0)) {
      throw DomainError(fmt::format("confidence {} for '{}' outside [0, 1]", conf, tag));
    }
    if (conf > tau) kept.emplace_back(tag, conf);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  out.reserve(kept.size());
  for (auto& entry : kept) out.push_back(std::move(entry.first));
  return out;
}

}  // namespace dynview
