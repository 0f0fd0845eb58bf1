// Copyright 2026 The retrosem Authors.
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

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace retrosem::utf8 {

/// Decodes UTF-8 into code points. Malformed bytes decode as U+FFFD.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

/// Number of code points in `text`.
std::size_t length(std::string_view text);

/// Substring addressed in code points, the unit SQuAD-style offsets use.
std::string substr(std::string_view text, std::size_t cp_begin, std::size_t cp_count);

/// Simple case folding for ASCII and the Latin blocks used by Vietnamese.
char32_t to_lower(char32_t cp);
std::string to_lower(std::string_view text);

bool is_space(char32_t cp);
bool is_punct(char32_t cp);

}  // namespace retrosem::utf8
