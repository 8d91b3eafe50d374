#pragma once

#include <stdexcept>
#include <string>

namespace sot {

// Base class for every error raised by this library.  Callers that only care
// about "library failed" can catch this one type; the CLI maps parse-type
// errors to exit code 2 and numeric failures to exit code 3.
class SotError : public std::runtime_error {
public:
    explicit SotError(const std::string& msg) : std::runtime_error(msg) {}
};

// --- input/shape errors ---------------------------------------------------

class ZeroNormRow : public SotError {
public:
    explicit ZeroNormRow(std::size_t row)
        : SotError("row " + std::to_string(row) + " has (near-)zero L2 norm"),
          row_(row) {}
    std::size_t row() const { return row_; }
private:
    std::size_t row_;
};

class NotNormalized : public SotError {
public:
    explicit NotNormalized(std::size_t row)
        : SotError("row " + std::to_string(row) + " is not unit-normalized") {}
};

class AlreadyMasked : public SotError {
public:
    AlreadyMasked() : SotError("distance matrix diagonal is already masked") {}
};

class InvalidCost : public SotError {
public:
    InvalidCost() : SotError("solver requires a diagonal-masked cost matrix") {}
};

class InvalidPermutation : public SotError {
public:
    InvalidPermutation() : SotError("index vector is not a permutation") {}
};

class Asymmetric : public SotError {
public:
    explicit Asymmetric(double dev)
        : SotError("matrix is asymmetric (max deviation " + std::to_string(dev) + ")") {}
};

class IndexOutOfRange : public SotError {
public:
    IndexOutOfRange() : SotError("index out of range") {}
};

class ConfigMismatch : public SotError {
public:
    explicit ConfigMismatch(const std::string& what) : SotError(what) {}
};

class LengthMismatch : public SotError {
public:
    LengthMismatch() : SotError("label vectors have different lengths") {}
};

class DegenerateInput : public SotError {
public:
    explicit DegenerateInput(const std::string& what) : SotError(what) {}
};

class SingleClass : public SotError {
public:
    SingleClass() : SotError("analysis requires at least two distinct classes") {}
};

class InvalidSpec : public SotError {
public:
    explicit InvalidSpec(const std::string& what) : SotError(what) {}
};

class InsufficientPoints : public SotError {
public:
    explicit InsufficientPoints(const std::string& what) : SotError(what) {}
};

class TargetTooLarge : public SotError {
public:
    TargetTooLarge() : SotError("PCA target dimension exceeds min(n, d)") {}
};

class TooLarge : public SotError {
public:
    explicit TooLarge(std::size_t n)
        : SotError("exhaustive oracle limited to n <= 10, got n = " + std::to_string(n)) {}
};

class Infeasible : public SotError {
public:
    explicit Infeasible(const std::string& what) : SotError(what) {}
};

class ParseError : public SotError {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : SotError(file + ":" + std::to_string(line) + ": " + what) {}
};

class IoError : public SotError {
public:
    explicit IoError(const std::string& what) : SotError(what) {}
};

// --- numeric errors -------------------------------------------------------

class NumericalUnderflow : public SotError {
public:
    explicit NumericalUnderflow(const std::string& what) : SotError(what) {}
};

} // namespace sot
