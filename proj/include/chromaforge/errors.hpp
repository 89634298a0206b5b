#pragma once

#include <stdexcept>
#include <string>

namespace chromaforge {

/// Shape disagreement between tensors or between a tensor and an operation.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// A value outside its documented domain (pixel out of [0,1], non-finite
/// parameter, label out of range, ...).
class ValueError : public std::invalid_argument {
public:
    explicit ValueError(const std::string& what) : std::invalid_argument(what) {}
};

enum class IoErrorKind {
    UnsupportedFormat,
    TruncatedFile,
    ChannelCount,
    Unwritable,
    CorruptFile,
    VersionMismatch,
};

class IoError : public std::runtime_error {
public:
    IoError(IoErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    IoErrorKind kind() const { return kind_; }

private:
    IoErrorKind kind_;
};

} // namespace chromaforge
