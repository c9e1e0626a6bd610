#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "symplectic.hpp"

namespace cvqnet {

// Units-free quadratures with hbar = 1/2: vacuum variance is 1/4 per
// quadrature and the uncertainty bound on symplectic eigenvalues is 1/4.
inline constexpr double kVacuumVariance = 0.25;
inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kPhysicalityTol = 1e-10;

// Measured-quadrature variances below this are treated as degenerate and
// conditioned with a pseudo-inverse instead of a division.
inline constexpr double kDegenerateVarianceEps = 1e-14;

/// Gaussian state of n bosonic modes: mean vector (length 2n) and symmetric
/// covariance matrix (2n x 2n) in the (x_1, p_1, ..., x_n, p_n) ordering.
///
/// Values are immutable after construction; every operation returns a new
/// state, so instances are safe to share across threads. Construction checks
/// sizes, finiteness and symmetry; the O(n^3) uncertainty-principle check is
/// available separately as is_physical() so that tests can assert it at every
/// pipeline stage without taxing large stress runs.
class GaussianState {
public:
    GaussianState(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
        const auto dim = mean_.size();
        if (dim < 2 || dim % 2 != 0) {
            throw std::invalid_argument("GaussianState: mean length must be a positive even number");
        }
        if (cov_.rows() != dim || cov_.cols() != dim) {
            throw std::invalid_argument("GaussianState: covariance shape does not match mean");
        }
        if (!mean_.allFinite() || !cov_.allFinite()) {
            throw std::invalid_argument("GaussianState: entries must be finite");
        }
        if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
            throw std::invalid_argument("GaussianState: covariance must be symmetric");
        }
        cov_ = ((cov_ + cov_.transpose()) / 2.0).eval();
        n_modes_ = static_cast<int>(dim / 2);
    }

    int n_modes() const { return n_modes_; }
    const Vector& mean() const { return mean_; }
    const Matrix& cov() const { return cov_; }

    double mean_x(int mode) const { return mean_(check_mode(mode) * 2); }
    double mean_p(int mode) const { return mean_(check_mode(mode) * 2 + 1); }
    double var_x(int mode) const { return cov_(x_index(check_mode(mode)), x_index(mode)); }
    double var_p(int mode) const { return cov_(p_index(check_mode(mode)), p_index(mode)); }

    GaussianState transformed(const SymplecticMap& map) const {
        if (map.n_modes != n_modes_) {
            throw std::invalid_argument("GaussianState::transformed: mode counts differ");
        }
        Vector mean = map.matrix * mean_ + map.shift;
        Matrix cov = map.matrix * cov_ * map.matrix.transpose();
        return GaussianState(std::move(mean), ((cov + cov.transpose()) / 2.0).eval());
    }

    /// Symplectic eigenvalues of the covariance matrix, descending. Computed
    /// from the Hermitian matrix i * sqrt(cov) * Omega * sqrt(cov).
    std::vector<double> symplectic_eigenvalues() const {
        Eigen::SelfAdjointEigenSolver<Matrix> es(cov_);
        Vector evals = es.eigenvalues().cwiseMax(0.0);
        const Matrix root =
            es.eigenvectors() * evals.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
        const Matrix core = root * symplectic_form(n_modes_) * root;
        Eigen::MatrixXcd herm = std::complex<double>(0.0, 1.0) * core;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> hes(herm);
        std::vector<double> nu;
        nu.reserve(n_modes_);
        // Eigenvalues come in +/- pairs; keep the nonnegative half.
        for (int i = 2 * n_modes_ - 1; i >= n_modes_; --i) {
            nu.push_back(hes.eigenvalues()(i));
        }
        return nu;
    }

    /// Uncertainty principle: every symplectic eigenvalue >= 1/4 - tol.
    bool is_physical(double tol = kPhysicalityTol) const {
        const auto nu = symplectic_eigenvalues();
        return std::all_of(nu.begin(), nu.end(),
                           [&](double v) { return v >= kVacuumVariance - tol; });
    }

    /// Tr(rho^2) = (1/4)^n / sqrt(det cov); equals 1 for pure states.
    double purity() const {
        const double log_det = cov_.ldlt().vectorD().array().max(1e-300).log().sum();
        return std::exp(-n_modes_ * std::log(4.0) - 0.5 * log_det);
    }

private:
    int check_mode(int mode) const {
        if (mode < 0 || mode >= n_modes_) {
            throw std::out_of_range("GaussianState: mode index out of range");
        }
        return mode;
    }

    Vector mean_;
    Matrix cov_;
    int n_modes_ = 0;
};

/// n-mode vacuum: zero mean, covariance I/4.
inline GaussianState vacuum(int n) {
    if (n < 1) throw std::invalid_argument("vacuum: need at least one mode");
    return GaussianState(Vector::Zero(2 * n),
                         Matrix::Identity(2 * n, 2 * n) * kVacuumVariance);
}

/// Single-mode coherent state centered at (x, p).
inline GaussianState coherent(double x, double p) {
    if (!std::isfinite(x) || !std::isfinite(p)) {
        throw std::invalid_argument("coherent: amplitude must be finite");
    }
    Vector mean(2);
    mean << x, p;
    return GaussianState(std::move(mean), Matrix::Identity(2, 2) * kVacuumVariance);
}

/// Product state a (x) b, with b's modes appended after a's.
inline GaussianState tensor(const GaussianState& a, const GaussianState& b) {
    const int da = 2 * a.n_modes();
    const int db = 2 * b.n_modes();
    Vector mean(da + db);
    mean << a.mean(), b.mean();
    Matrix cov = Matrix::Zero(da + db, da + db);
    cov.topLeftCorner(da, da) = a.cov();
    cov.bottomRightCorner(db, db) = b.cov();
    return GaussianState(std::move(mean), std::move(cov));
}

inline GaussianState squeeze(const GaussianState& state, int mode, double r, SqueezeAxis axis) {
    return state.transformed(SymplecticMap::squeezer(state.n_modes(), mode, r, axis));
}

inline GaussianState beamsplitter(const GaussianState& state, int i, int j, double theta) {
    return state.transformed(SymplecticMap::beamsplitter(state.n_modes(), i, j, theta));
}

inline GaussianState displace(const GaussianState& state, int mode, double dx, double dp) {
    if (mode < 0 || mode >= state.n_modes()) {
        throw std::out_of_range("displace: mode index out of range");
    }
    if (!std::isfinite(dx) || !std::isfinite(dp)) {
        throw std::invalid_argument("displace: displacement must be finite");
    }
    Vector mean = state.mean();
    mean(x_index(mode)) += dx;
    mean(p_index(mode)) += dp;
    return GaussianState(std::move(mean), state.cov());
}

struct HomodyneResult {
    double outcome = 0.0;
    GaussianState conditional;
    /// Set when the measured quadrature variance was below
    /// kDegenerateVarianceEps and the update used a pseudo-inverse.
    bool degenerate = false;
};

/// Ideal homodyne detection of one quadrature of one mode. The outcome is
/// drawn from the Gaussian marginal of that quadrature (or taken as given),
/// the remaining modes are conditioned on it via the rank-one Schur
/// complement, and the measured mode is removed. Surviving modes keep their
/// relative order and are re-indexed densely.
///
/// The conditional covariance never depends on the outcome value; only the
/// conditional mean does.
inline HomodyneResult measure_homodyne(const GaussianState& state, int mode, Quadrature quad,
                                       std::optional<double> forced_outcome = std::nullopt,
                                       RngStream* rng = nullptr) {
    const int n = state.n_modes();
    if (mode < 0 || mode >= n) throw std::out_of_range("measure_homodyne: mode index out of range");
    if (n < 2) {
        throw std::invalid_argument("measure_homodyne: cannot remove the last remaining mode");
    }
    if (!forced_outcome && rng == nullptr) {
        throw std::invalid_argument("measure_homodyne: need a forced outcome or an RNG stream");
    }
    if (forced_outcome && !std::isfinite(*forced_outcome)) {
        throw std::invalid_argument("measure_homodyne: forced outcome must be finite");
    }

    const int b = (quad == Quadrature::X) ? x_index(mode) : p_index(mode);
    const double var_b = state.cov()(b, b);
    const double mean_b = state.mean()(b);

    const bool degenerate = var_b < kDegenerateVarianceEps;
    const double inv_var = degenerate ? 0.0 : 1.0 / var_b;  // pseudo-inverse when degenerate

    const double outcome =
        forced_outcome ? *forced_outcome : rng->normal(mean_b, std::max(var_b, 0.0));

    const int dim = 2 * n;
    std::vector<int> keep;
    keep.reserve(dim - 2);
    for (int idx = 0; idx < dim; ++idx) {
        if (idx != x_index(mode) && idx != p_index(mode)) keep.push_back(idx);
    }

    const auto kept = static_cast<int>(keep.size());
    Vector cross(kept);
    Vector mean(kept);
    for (int a = 0; a < kept; ++a) {
        cross(a) = state.cov()(keep[a], b);
        mean(a) = state.mean()(keep[a]) + inv_var * cross(a) * (outcome - mean_b);
    }
    Matrix cov(kept, kept);
    for (int a = 0; a < kept; ++a) {
        for (int c = 0; c <= a; ++c) {
            const double v = state.cov()(keep[a], keep[c]) - inv_var * cross(a) * cross(c);
            cov(a, c) = v;
            cov(c, a) = v;
        }
    }
    return HomodyneResult{outcome, GaussianState(std::move(mean), std::move(cov)), degenerate};
}

/// Overlap <alpha|rho|alpha> of a single-mode Gaussian state with the
/// coherent state at (x_in, p_in): pi times the state's Q function at alpha.
/// The Q-function covariance is cov + I/4, so for diagonal covariances this
/// is 1/(2 sqrt(sigma_x sigma_p)) * exp(-dx^2/(2 sigma_x) - dp^2/(2 sigma_p)).
inline double coherent_fidelity(const GaussianState& state, double x_in, double p_in) {
    if (state.n_modes() != 1) {
        throw std::invalid_argument("coherent_fidelity: state must be single-mode");
    }
    if (!std::isfinite(x_in) || !std::isfinite(p_in)) {
        throw std::invalid_argument("coherent_fidelity: amplitude must be finite");
    }
    const double a = state.cov()(0, 0) + kVacuumVariance;
    const double b = state.cov()(0, 1);
    const double d = state.cov()(1, 1) + kVacuumVariance;
    const double det = a * d - b * b;
    if (!(det > 0.0)) {
        throw std::invalid_argument("coherent_fidelity: covariance is not positive definite");
    }
    const double dx = x_in - state.mean()(0);
    const double dp = p_in - state.mean()(1);
    const double quad_form = (d * dx * dx - 2.0 * b * dx * dp + a * dp * dp) / det;
    const double fid = std::exp(-0.5 * quad_form) / (2.0 * std::sqrt(det));
    return std::clamp(fid, 0.0, 1.0);
}

}  // namespace cvqnet
