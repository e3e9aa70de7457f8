#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace evf {

/// Error families. The numeric value doubles as the CLI exit code.
enum class ErrorClass : int {
    usage = 1,
    io = 2,
    format = 3,
    model = 4,
    pipeline = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}

    [[nodiscard]] ErrorClass error_class() const noexcept { return class_; }

private:
    ErrorClass class_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorClass::io, what) {}
};

/// Byte stream ended in the middle of a 16-bit word.
class OddLengthError : public Error {
public:
    explicit OddLengthError(std::size_t offset)
        : Error(ErrorClass::format,
                "truncated stream: odd trailing byte at offset " + std::to_string(offset)),
          offset_(offset) {}

    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class EncodeError : public Error {
public:
    enum class Kind { coord_out_of_range, unsorted_timestamps };

    EncodeError(Kind kind, std::size_t index)
        : Error(ErrorClass::format, std::string(kind == Kind::coord_out_of_range
                                                    ? "coordinate out of range"
                                                    : "timestamps not sorted") +
                                        " at event " + std::to_string(index)),
          kind_(kind), index_(index) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t index() const noexcept { return index_; }

private:
    Kind kind_;
    std::size_t index_;
};

class GeometryError : public Error {
public:
    explicit GeometryError(const std::string& what) : Error(ErrorClass::usage, what) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(ErrorClass::format, what) {}
};

class ModelError : public Error {
public:
    enum class Kind { shape_mismatch, checksum_mismatch, unsupported_kind, malformed };

    ModelError(Kind kind, const std::string& what) : Error(ErrorClass::model, what), kind_(kind) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

} // namespace evf
