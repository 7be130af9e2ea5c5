#include "smartregion/matin.hpp"

#include <algorithm>

namespace smartregion::matin {

char char_from_bits(std::uint8_t bits5) {
    if (bits5 > 31) throw Error(Errc::invalid_character, "5-bit code out of range");
    return kAlphabet[bits5];
}

std::uint8_t bits_from_char(char c) {
    auto pos = kAlphabet.find(c);
    if (pos == std::string_view::npos)
        throw Error(Errc::invalid_character, std::string("'") + c + "' not in Matin alphabet");
    return static_cast<std::uint8_t>(pos);
}

std::uint16_t make_unit(std::string_view group3, bool separator_bit) {
    if (group3.size() != 3) throw Error(Errc::bad_group_length, "group must be 3 characters");
    std::uint16_t unit = 0;
    for (char c : group3) unit = static_cast<std::uint16_t>(unit << 5 | bits_from_char(c));
    return static_cast<std::uint16_t>(unit << 1 | (separator_bit ? 1 : 0));
}

namespace {

std::string group_of(std::uint16_t unit) {
    std::string g(3, '0');
    g[0] = char_from_bits(static_cast<std::uint8_t>(unit >> 11 & 0x1F));
    g[1] = char_from_bits(static_cast<std::uint8_t>(unit >> 6 & 0x1F));
    g[2] = char_from_bits(static_cast<std::uint8_t>(unit >> 1 & 0x1F));
    return g;
}

}  // namespace

std::string address_to_name(std::span<const std::uint16_t> units) {
    if (units.empty() || units.size() > 8)
        throw Error(Errc::bad_group_length, "address must be 1..8 units");
    std::string name;
    for (std::size_t i = units.size(); i-- > 0;) {
        name += group_of(units[i]);
        if (i > 0) name += (units[i] & 1) ? '.' : '-';
    }
    return name;
}

std::vector<std::uint16_t> name_to_address(std::string_view name) {
    // Groups in name order with the separator that follows each.
    std::vector<std::pair<std::string, bool>> groups;
    std::size_t pos = 0;
    while (pos < name.size()) {
        if (pos + 3 > name.size())
            throw Error(Errc::bad_group_length, "truncated 3-character group");
        std::string g(name.substr(pos, 3));
        for (char c : g) bits_from_char(c);
        pos += 3;
        bool sep_bit = false;
        if (pos < name.size()) {
            char sep = name[pos++];
            if (sep == '.') sep_bit = true;
            else if (sep == '-') sep_bit = false;
            else throw Error(Errc::invalid_character, std::string("bad separator '") + sep + "'");
            if (pos >= name.size())
                throw Error(Errc::bad_group_length, "trailing separator");
        }
        groups.emplace_back(std::move(g), sep_bit);
    }
    if (groups.empty() || groups.size() > 8)
        throw Error(Errc::bad_group_length, "name must have 1..8 groups");
    // Reverse to address order; the last group in the name becomes the first
    // unit, whose separator bit is normalized to 0.
    std::vector<std::uint16_t> units;
    for (std::size_t i = groups.size(); i-- > 0;) {
        bool bit = (i == groups.size() - 1) ? false : groups[i].second;
        units.push_back(make_unit(groups[i].first, bit));
    }
    return units;
}

}  // namespace smartregion::matin
