#pragma once

#include <stdexcept>
#include <string>

namespace egd {

struct SchemaMismatch : std::runtime_error {
    explicit SchemaMismatch(const std::string& msg) : std::runtime_error("schema mismatch: " + msg) {}
};

struct RangeOverflow : std::runtime_error {
    explicit RangeOverflow(const std::string& msg) : std::runtime_error("range overflow: " + msg) {}
};

struct IndexOutOfRange : std::runtime_error {
    explicit IndexOutOfRange(const std::string& msg) : std::runtime_error("index out of range: " + msg) {}
};

struct EmptyDataset : std::runtime_error {
    EmptyDataset() : std::runtime_error("empty dataset") {}
};

struct CorruptContainer : std::runtime_error {
    explicit CorruptContainer(const std::string& msg) : std::runtime_error("corrupt container: " + msg) {}
};

struct NoCondensedData : std::runtime_error {
    NoCondensedData() : std::runtime_error("container holds no condensed data") {}
};

struct ShapeMismatch : std::runtime_error {
    explicit ShapeMismatch(const std::string& msg) : std::runtime_error("shape mismatch: " + msg) {}
};

struct WeightMismatch : std::runtime_error {
    explicit WeightMismatch(const std::string& msg) : std::runtime_error("weight mismatch: " + msg) {}
};

struct NonFinite : std::runtime_error {
    explicit NonFinite(const std::string& msg) : std::runtime_error("non-finite value: " + msg) {}
};

struct SingularSystem : std::runtime_error {
    explicit SingularSystem(const std::string& msg) : std::runtime_error("singular system: " + msg) {}
};

struct NonBinaryLabels : std::runtime_error {
    NonBinaryLabels() : std::runtime_error("labels must be 0 or 1") {}
};

struct WrongDomain : std::runtime_error {
    explicit WrongDomain(const std::string& msg) : std::runtime_error("wrong image domain: " + msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error("i/o error: " + msg) {}
};

} // namespace egd
