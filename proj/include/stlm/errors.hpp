#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace stlm {

// Error categories map 1:1 to CLI exit codes (config=2, data=3, numeric=4).
enum class ErrorCategory { Config, Data, Numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string message)
      : std::runtime_error(std::move(message)), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail_config(const std::string& msg) {
  throw Error(ErrorCategory::Config, msg);
}

[[noreturn]] inline void fail_data(const std::string& msg) {
  throw Error(ErrorCategory::Data, msg);
}

[[noreturn]] inline void fail_numeric(const std::string& msg) {
  throw Error(ErrorCategory::Numeric, msg);
}

}  // namespace stlm
