#pragma once

#include <stdexcept>
#include <string>

namespace pacrr {

/// Domain or input error. Callers at the CLI boundary map it to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pacrr
