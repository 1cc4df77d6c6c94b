#pragma once

#include <stdexcept>
#include <string>

namespace cqte {

//! Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

//! Malformed input file; carries 1-based row/column location where known.
class CsvError : public Error {
public:
    CsvError(const std::string& msg, long row = -1, long col = -1)
        : Error(locate(msg, row, col)), row_(row), col_(col) {}
    long row() const { return row_; }
    long col() const { return col_; }

private:
    static std::string locate(const std::string& msg, long row, long col) {
        std::string s = msg;
        if (row >= 0) s += " (row " + std::to_string(row);
        if (row >= 0 && col >= 0) s += ", column " + std::to_string(col);
        if (row >= 0) s += ")";
        return s;
    }
    long row_, col_;
};

//! Invalid user-supplied configuration (CLI or programmatic).
class ConfigError : public Error {
public:
    using Error::Error;
};

//! A local fit has too few positively weighted points to be identified.
class DegenerateWindowError : public Error {
public:
    DegenerateWindowError(const std::string& msg, double eff_weight)
        : Error(msg), eff_weight_(eff_weight) {}
    double effWeight() const { return eff_weight_; }

private:
    double eff_weight_;
};

//! Perfect separation detected while fitting the logistic model.
class SeparationError : public Error {
public:
    using Error::Error;
};

//! A linear system required by an estimator is numerically singular.
class SingularError : public Error {
public:
    using Error::Error;
};

} // namespace cqte
