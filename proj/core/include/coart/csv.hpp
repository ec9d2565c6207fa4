#pragma once

#include <string>
#include <vector>

namespace coart {

/// Shortest text that round-trips the double exactly (fmt's default).
/// All numeric file output goes through this so reruns are byte-stable.
std::string format_number(double v);

/// Splits one line on `delim`; no quoting (the formats here never need it).
std::vector<std::string> split(const std::string& line, char delim);

/// Strict numeric parsing; `what` names the field for error messages.
double parse_double(const std::string& text, const std::string& what);
int parse_int(const std::string& text, const std::string& what);

}  // namespace coart
