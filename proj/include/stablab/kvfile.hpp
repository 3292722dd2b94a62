#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace stablab {

/// Flat "key = value" text; '#' starts a comment, blank lines are ignored.
/// Later keys override earlier ones.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& is);
KeyValues load_key_values(const std::string& path);

double kv_double(const KeyValues& kv, const std::string& key, double fallback);
long kv_int(const KeyValues& kv, const std::string& key, long fallback);
std::string kv_string(const KeyValues& kv, const std::string& key, const std::string& fallback);
/// Comma-separated list of doubles.
std::vector<double> kv_double_list(const KeyValues& kv, const std::string& key,
                                   const std::vector<double>& fallback);

double parse_double(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

}  // namespace stablab
