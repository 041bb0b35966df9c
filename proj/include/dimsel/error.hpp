#pragma once

#include <stdexcept>
#include <string>

namespace dimsel {

// All library failures surface as Error with a human-readable message.
// Parse errors carry the offending line number in the message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dimsel
