#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace sanodep {

// Shortest round-trip decimal form, independent of the C locale.
std::string format_double(double v);
double parse_double(std::string_view s);
std::int64_t parse_int(std::string_view s);

// FNV-1a 64-bit hash, rendered as 16 hex digits.
std::string hash_hex(std::string_view data);

}  // namespace sanodep
