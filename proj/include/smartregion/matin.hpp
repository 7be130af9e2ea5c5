#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smartregion/error.hpp"

namespace smartregion::matin {

// The 32-character 5-bit alphabet (J, Q, U, V excluded). Row = bits 5..3,
// column = bits 2..1 of the 5-bit code.
inline constexpr std::string_view kAlphabet = "0123456789ABCDEFGHIKLMNOPRSTWXYZ";

char char_from_bits(std::uint8_t bits5);          // 0..31
std::uint8_t bits_from_char(char c);              // throws InvalidCharacter

// A 16-bit unit is three 5-bit characters (MSB first) plus one separator
// bit. The separator bit of a unit renders as '.' (1, vertical) or '-'
// (0, horizontal) after that unit's group in the name. Units are given low
// unit first; the name lists them in reverse, so the first unit's group is
// written last and its separator bit is unused (normalized to 0 on decode).
std::string address_to_name(std::span<const std::uint16_t> units);
std::vector<std::uint16_t> name_to_address(std::string_view name);

std::uint16_t make_unit(std::string_view group3, bool separator_bit);

}  // namespace smartregion::matin
