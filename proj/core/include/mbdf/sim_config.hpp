#pragma once

// Plain-text key=value configuration for SimConfig.

#include <iosfwd>
#include <map>
#include <string>

#include "mbdf/sweep.hpp"

namespace mbdf {

using KeyValues = std::map<std::string, std::string>;

// One "key = value" per line; '#' starts a comment. Throws ConfigError.
KeyValues parse_key_values(std::istream& in);
KeyValues load_config_file(const std::string& path);

// Throws ConfigError on unknown keys or malformed values. Keys:
//   n_t n_r constellation snr (comma list) detector branches stages ordering
//   beta shape_rule immse energy design_iterations channel doppler packet_len
//   training_len coded iterations lambda seed min_errors max_bits threads
void apply_key_values(SimConfig& cfg, const KeyValues& kv);

// Canonical form: every key, doubles printed with 17 significant digits.
KeyValues to_key_values(const SimConfig& cfg);

// 64-bit FNV-1a of the canonical form, 16 hex digits.
std::string config_hash(const SimConfig& cfg);

}  // namespace mbdf
