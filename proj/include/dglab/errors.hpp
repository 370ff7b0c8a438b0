#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dglab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A coefficient tensor produced a non-finite entry. Carries the offending (x, y).
class EvaluationError : public Error {
public:
    EvaluationError(std::vector<double> x, std::vector<double> y, const std::string& what)
        : Error(format(x, y, what)), x_(std::move(x)), y_(std::move(y)) {}

    [[nodiscard]] const std::vector<double>& x() const noexcept { return x_; }
    [[nodiscard]] const std::vector<double>& y() const noexcept { return y_; }

private:
    static std::string format(const std::vector<double>& x, const std::vector<double>& y,
                              const std::string& what) {
        std::ostringstream os;
        os.precision(17);
        os << what << " at x=(";
        for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
        os << ") y=(";
        for (std::size_t i = 0; i < y.size(); ++i) os << (i ? "," : "") << y[i];
        os << ")";
        return os.str();
    }

    std::vector<double> x_;
    std::vector<double> y_;
};

/// Argument outside an operation's precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A ball or ball pair does not fit the computational domain.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Krylov and direct solvers both failed to reach the requested residual.
class LinearSolveError : public Error {
public:
    LinearSolveError(const std::string& what, std::vector<double> history)
        : Error(what), history_(std::move(history)) {}

    /// Relative residual after each Krylov iteration.
    [[nodiscard]] const std::vector<double>& residual_history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// Malformed input file or document.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace dglab
