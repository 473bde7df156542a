#pragma once

#include <span>
#include <string>
#include <string_view>

namespace auxlab {

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

// Strict parse of a full token; throws InvalidArgument.
double parse_double(std::string_view text);

std::string join_doubles(std::span<const double> values, std::string_view separator = ",");

}  // namespace auxlab
