#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cir {

/// Invalid configuration, preset, or input file. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Failure while executing a run (training blew up, I/O error, ...). Exit code 3.
class RunError : public std::runtime_error {
public:
    explicit RunError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed serialized stream or checkpoint. Carries the byte offset at
/// which parsing stopped.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : std::runtime_error(what + " (byte " + std::to_string(byte_offset) + ")"),
          byte_offset_(byte_offset) {}

    std::size_t byte_offset() const noexcept { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

}  // namespace cir
