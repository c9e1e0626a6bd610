#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace cvqnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Quadrature ordering is (x_1, p_1, x_2, p_2, ...) throughout.
inline constexpr int x_index(int mode) { return 2 * mode; }
inline constexpr int p_index(int mode) { return 2 * mode + 1; }

enum class Quadrature { X, P };

/// Which quadrature variance drops below the vacuum value.
enum class SqueezeAxis { Momentum, Position };

/// Antisymmetric form Omega for the (x_1, p_1, ...) ordering.
inline Matrix symplectic_form(int n_modes) {
    Matrix omega = Matrix::Zero(2 * n_modes, 2 * n_modes);
    for (int m = 0; m < n_modes; ++m) {
        omega(x_index(m), p_index(m)) = 1.0;
        omega(p_index(m), x_index(m)) = -1.0;
    }
    return omega;
}

/// Linear phase-space transformation r -> matrix * r + shift.
struct SymplecticMap {
    int n_modes = 0;
    Matrix matrix;
    Vector shift;

    static SymplecticMap identity(int n) {
        if (n < 1) throw std::invalid_argument("SymplecticMap::identity: need at least one mode");
        return {n, Matrix::Identity(2 * n, 2 * n), Vector::Zero(2 * n)};
    }

    /// Phase-free beamsplitter on modes (i, j):
    ///   a_i -> a_i cos(theta) + a_j sin(theta)
    ///   a_j -> a_i sin(theta) - a_j cos(theta)
    /// applied identically to the x and p quadratures. The 2x2 mode-space
    /// block is orthogonal (a reflection), so the full map is symplectic and
    /// trace-preserving on covariances.
    static SymplecticMap beamsplitter(int n, int i, int j, double theta) {
        if (i == j) throw std::invalid_argument("beamsplitter: modes must differ");
        if (i < 0 || j < 0 || i >= n || j >= n) {
            throw std::out_of_range("beamsplitter: mode index out of range");
        }
        if (!std::isfinite(theta)) throw std::invalid_argument("beamsplitter: theta must be finite");
        SymplecticMap map = identity(n);
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        for (int q = 0; q < 2; ++q) {
            const int a = 2 * i + q;
            const int b = 2 * j + q;
            map.matrix(a, a) = c;
            map.matrix(a, b) = s;
            map.matrix(b, a) = s;
            map.matrix(b, b) = -c;
        }
        return map;
    }

    /// Single-mode squeezer with r >= 0. Momentum axis: x -> e^{+r} x,
    /// p -> e^{-r} p; position axis is the transpose convention. Negative r
    /// is rejected rather than reinterpreted as the opposite axis.
    static SymplecticMap squeezer(int n, int mode, double r, SqueezeAxis axis) {
        if (mode < 0 || mode >= n) throw std::out_of_range("squeezer: mode index out of range");
        if (!(r >= 0.0) || !std::isfinite(r)) {
            throw std::invalid_argument("squeezer: squeezing parameter must be finite and >= 0");
        }
        SymplecticMap map = identity(n);
        const double up = std::exp(r);
        const double down = std::exp(-r);
        if (axis == SqueezeAxis::Momentum) {
            map.matrix(x_index(mode), x_index(mode)) = up;
            map.matrix(p_index(mode), p_index(mode)) = down;
        } else {
            map.matrix(x_index(mode), x_index(mode)) = down;
            map.matrix(p_index(mode), p_index(mode)) = up;
        }
        return map;
    }

    bool is_symplectic(double tol = 1e-10) const {
        const Matrix omega = symplectic_form(n_modes);
        return ((matrix * omega * matrix.transpose()) - omega).cwiseAbs().maxCoeff() <= tol;
    }
};

/// Operator-style composition: apply `first`, then `second`.
inline SymplecticMap compose(const SymplecticMap& second, const SymplecticMap& first) {
    if (second.n_modes != first.n_modes) {
        throw std::invalid_argument("compose: mode counts differ");
    }
    return {first.n_modes, second.matrix * first.matrix,
            second.matrix * first.shift + second.shift};
}

}  // namespace cvqnet
