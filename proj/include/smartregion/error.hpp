#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smartregion {

enum class Errc {
    // parsing / files
    malformed_line,
    duplicate_vertex,
    unknown_vertex,
    duplicate_link,
    // regions
    not_a_basic_region,
    not_a_pfr,
    region_budget_exceeded,
    empty_children,
    cycle_detected,
    unknown_rid,
    ambiguous_rid,
    // wire codec
    invariant_violation,
    truncated,
    reserved_bits_nonzero,
    zero_rid,
    empty_stack,
    no_active_superfields,
    zero_sender_nid,
    zero_fission_rate,
    // matin
    invalid_character,
    bad_group_length,
    // routing / map
    unknown_region,
    no_path,
    not_in_region,
    no_feasible_candidate,
    pull_ttl_exceeded,
    node_not_in_region,
    // config
    config_error,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

// Codec errors carry the byte offset of the offending input.
class DecodeError : public Error {
public:
    DecodeError(Errc code, std::size_t offset, const std::string& message)
        : Error(code, message + " (offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace smartregion
