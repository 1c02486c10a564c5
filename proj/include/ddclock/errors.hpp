#pragma once

#include <stdexcept>
#include <string>

namespace ddclock {

// Thrown when a request exceeds a documented resource guard (overridable by
// the caller); distinct from domain errors so front ends can map it to a
// separate exit code.
class capacity_error : public std::runtime_error {
  public:
    explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an iterative numerical procedure fails to meet its tolerance.
class numeric_error : public std::runtime_error {
  public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ddclock
