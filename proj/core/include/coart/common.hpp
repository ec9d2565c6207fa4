#pragma once

#include <stdexcept>
#include <string>

#include <fmt/format.h>

namespace coart {

/// Base error for every failure the toolkit reports. Messages carry
/// enough context (paths, line numbers, names) to act on directly.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}
};

template <typename... Args>
[[noreturn]] void fail(fmt::format_string<Args...> f, Args&&... args) {
  throw Error(fmt::format(f, std::forward<Args>(args)...));
}

template <typename... Args>
void require(bool cond, fmt::format_string<Args...> f, Args&&... args) {
  if (!cond) fail(f, std::forward<Args>(args)...);
}

}  // namespace coart
