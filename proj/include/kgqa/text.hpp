// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace kgqa::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Split on any character in `delims`, dropping empty pieces.
std::vector<std::string> split_any(std::string_view s, std::string_view delims);

/// Levenshtein distance over bytes.
std::size_t edit_distance(std::string_view a, std::string_view b);

/// Jaccard index of two token sets; 0 when both are empty.
double jaccard(std::vector<std::string> a, std::vector<std::string> b);

bool contains_icase(std::string_view haystack, std::string_view needle);

/// First `max_chars` bytes, cut back to a UTF-8 boundary.
std::string truncate_utf8(std::string_view s, std::size_t max_chars);

}  // namespace kgqa::text
