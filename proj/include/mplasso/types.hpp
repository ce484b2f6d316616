#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mplasso {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes of two inputs disagree; the message names the offending object.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An argument violates a documented precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. Carries the location of the first bad cell.
class ParseError : public Error {
public:
    ParseError(std::string file, long line, long column, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          file_(std::move(file)), line_(line), column_(column) {}

    const std::string& file() const noexcept { return file_; }
    long line() const noexcept { return line_; }
    long column() const noexcept { return column_; }

private:
    std::string file_;
    long line_;
    long column_;
};

} // namespace mplasso
