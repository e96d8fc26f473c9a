#ifndef RANKSEG_ERROR_HPP
#define RANKSEG_ERROR_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace rankseg {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (out-of-range G, bad rank, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Input data is malformed (bad header, duplicated id, invalid row in strict mode).
class DataError : public Error {
public:
    using Error::Error;
};

/// The encoded design matrix does not have full column rank.
class RankDeficientError : public Error {
public:
    RankDeficientError(const std::string& what, std::vector<std::string> columns)
        : Error(what), columns_(std::move(columns)) {}

    const std::vector<std::string>& columns() const noexcept { return columns_; }

private:
    std::vector<std::string> columns_;
};

/// A statistic is undefined because one of its inputs has zero variance.
class ZeroVarianceError : public Error {
public:
    using Error::Error;
};

/// Raised when a test is requested on a fit that did not converge.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage failed; carries the stage name and, when relevant, the G value.
class StageError : public Error {
public:
    enum class Cause { computation, data, invalid_argument };

    StageError(std::string stage, int G, const std::string& what, Cause cause = Cause::computation)
        : Error(what), stage_(std::move(stage)), G_(G), cause_(cause) {}

    const std::string& stage() const noexcept { return stage_; }
    int G() const noexcept { return G_; }  // 0 when the stage is not tied to one G
    Cause cause() const noexcept { return cause_; }

private:
    std::string stage_;
    int G_ = 0;
    Cause cause_ = Cause::computation;
};

}  // namespace rankseg

#endif  // RANKSEG_ERROR_HPP
