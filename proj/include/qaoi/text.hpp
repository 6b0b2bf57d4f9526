#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qaoi {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
/// Strict full-string double parse; throws ConfigError.
double parse_double(std::string_view s);
/// Shortest round-trip representation (%.17g fallback).
std::string format_double(double v);
/// Fixed precision with `digits` significant digits.
std::string format_sig(double v, int digits);

}  // namespace qaoi
