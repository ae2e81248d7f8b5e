#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace refinery {

/// Violated precondition of a public operation (bad arguments, wrong state).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Malformed JSON on input. byte_offset is relative to the start of the line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : std::runtime_error(what), byte_offset_(byte_offset) {}

    std::size_t byte_offset() const noexcept { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

/// Well-formed JSON that does not satisfy the document schema.
class SchemaError : public std::runtime_error {
public:
    SchemaError(const std::string& field, const std::string& what)
        : std::runtime_error(what), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Corrupt or truncated Zstandard stream.
class FrameError : public IoError {
public:
    FrameError(const std::string& file, std::size_t frame_offset, const std::string& detail)
        : IoError(file + ": corrupt zstd frame at offset " + std::to_string(frame_offset) + ": " +
                  detail),
          file_(file),
          frame_offset_(frame_offset) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t frame_offset() const noexcept { return frame_offset_; }

private:
    std::string file_;
    std::size_t frame_offset_;
};

class ClassifierError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace refinery
