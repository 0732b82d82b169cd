#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bsvie {

// Error taxonomy: configuration errors map to CLI exit code 2,
// numeric errors carry the (node, path) location of the offending value.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

}  // namespace bsvie
