#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace r2vpo {

// q(x) = 0 where p(x) > 0: the ratio p/q is undefined.
class SupportError : public std::invalid_argument {
 public:
  explicit SupportError(std::size_t index)
      : std::invalid_argument("support violation: q is zero where p is positive at index " +
                              std::to_string(index)),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// A NaN or infinity appeared where finite values are required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration key or value. `key` names the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace r2vpo
