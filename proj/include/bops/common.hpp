// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace bops {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using MatX = Eigen::MatrixXcd;
using VecX = Eigen::VectorXcd;

inline constexpr cplx I_unit{0.0, 1.0};

// Error categories map onto the CLI exit codes.
enum class ErrorKind { input = 2, degeneracy = 3, mismatch = 4, residual = 5 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

struct InputError : Error {
    explicit InputError(const std::string& w) : Error(ErrorKind::input, w) {}
};
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorKind::input, w) {}
};
struct DegeneracyError : Error {
    explicit DegeneracyError(const std::string& w) : Error(ErrorKind::degeneracy, w) {}
};
struct AccuracyError : Error {
    explicit AccuracyError(const std::string& w) : Error(ErrorKind::degeneracy, w) {}
};

inline Mat2 mat2(cplx a, cplx b, cplx c, cplx d) {
    Mat2 m;
    m << a, b, c, d;
    return m;
}

inline double max_abs(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

// Integer power that stays exact for negative exponents as well.
inline cplx ipow(cplx z, int k) {
    if (k < 0) return 1.0 / ipow(z, -k);
    cplx r = 1.0, b = z;
    while (k) {
        if (k & 1) r *= b;
        b *= b;
        k >>= 1;
    }
    return r;
}

// |a-b| scaled by the larger magnitude (absolute below 1).
inline double rel_diff(cplx a, cplx b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double rel_diff(const Mat2& a, const Mat2& b) {
    double s = std::max({1.0, max_abs(a), max_abs(b)});
    return max_abs(a - b) / s;
}

}  // namespace bops
