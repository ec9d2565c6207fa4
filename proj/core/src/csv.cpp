#include "coart/csv.hpp"

#include <cerrno>
#include <cstdlib>

#include "coart/common.hpp"

namespace coart {

std::string format_number(double v) { return fmt::format("{}", v); }

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == delim) {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

double parse_double(const std::string& text, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  require(end == text.c_str() + text.size() && !text.empty() && errno != ERANGE,
          "{}: '{}' is not a number", what, text);
  return v;
}

int parse_int(const std::string& text, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(text.c_str(), &end, 10);
  require(end == text.c_str() + text.size() && !text.empty() && errno != ERANGE,
          "{}: '{}' is not an integer", what, text);
  return static_cast<int>(v);
}

}  // namespace coart
