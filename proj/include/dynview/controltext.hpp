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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace dynview {

inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr double kDefaultKeepProb = 0.5;
inline constexpr std::size_t kMaxTagWords = 3;

/// Lowercases, removes apostrophes, maps other ASCII punctuation except '-'
/// to spaces and collapses whitespace runs.
std::string normalize_text(std::string_view text);

/// Ordered set of normalized tag phrases.
class TagVocab {
 public:
  TagVocab() = default;
  /// Normalizes every entry; blank entries and repeats are dropped.
  explicit TagVocab(std::span<const std::string> tags);

  /// One tag per line, UTF-8. Throws IoError if unreadable.
  static TagVocab load(const std::filesystem::path& path);

  bool contains(std::string_view phrase) const { return lookup_.contains(std::string(phrase)); }
  const std::vector<std::string>& tags() const { return tags_; }
  std::size_t size() const { return tags_.size(); }

 private:
  std::vector<std::string> tags_;
  std::unordered_set<std::string> lookup_;
};

/// Left-to-right longest match of vocabulary phrases of up to three words.
/// Matches never overlap; repeated tags are reported once, at first occurrence.
std::vector<std::string> parse_tags(std::string_view caption, const TagVocab& vocab);

/// Keeps each tag independently with probability keep_prob, order preserved.
std::vector<std::string> drop_tags(std::span<const std::string> tags, double keep_prob,
                                   std::uint64_t seed);

/// "tag1, tag2, ..., tagN[SEP]", shuffled first when a seed is given.
std::string build_control_sentence(std::span<const std::string> tags,
                                   std::optional<std::uint64_t> shuffle_seed = std::nullopt);

enum class QueryKind { category, attribute };

/// "a photo of a {name}" or "the object has {name}".
std::vector<std::string> format_queries(QueryKind kind, std::span<const std::string> names);

/// Tags whose confidence exceeds tau, highest confidence first.
std::vector<std::string> threshold_tags(std::span<const std::pair<std::string, double>> scores,
                                        double tau);

}  // namespace dynview
