#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gaussian_state.hpp"
#include "linear_form.hpp"
#include "symplectic.hpp"

namespace cvqnet {

enum class Scenario { AllEqual, OneSqueezed, Custom };

/// Squeezing layout of an n-party resource. Mode 0 is momentum-squeezed and
/// modes 1..n-1 position-squeezed; the scenarios fix the r values:
/// all-equal (r, r, ..., r), one-squeezed (r1, 0, ..., 0), or custom.
struct NetworkConfig {
    int n_modes = 2;
    Scenario scenario = Scenario::AllEqual;
    std::vector<double> r;  // one squeezing parameter per mode

    static NetworkConfig all_equal(int n, double r) {
        return make(n, Scenario::AllEqual, std::vector<double>(n > 0 ? n : 0, r));
    }

    static NetworkConfig one_squeezed(int n, double r1) {
        std::vector<double> r(n > 0 ? n : 0, 0.0);
        if (!r.empty()) r[0] = r1;
        return make(n, Scenario::OneSqueezed, std::move(r));
    }

    static NetworkConfig custom(std::vector<double> r) {
        const int n = static_cast<int>(r.size());
        return make(n, Scenario::Custom, std::move(r));
    }

    SqueezeAxis axis(int mode) const {
        return mode == 0 ? SqueezeAxis::Momentum : SqueezeAxis::Position;
    }

    /// Form-algebra layout: one-squeezed keeps modes 1..n-1 as bare vacua
    /// (exponent-0 symbols), matching the r_2 = ... = r_N = 0 substitution.
    std::vector<ModeSqueezeSpec> squeeze_spec() const {
        std::vector<ModeSqueezeSpec> spec(n_modes);
        for (int m = 0; m < n_modes; ++m) {
            spec[m].axis = axis(m);
            spec[m].squeezed = (scenario != Scenario::OneSqueezed) || m == 0;
        }
        return spec;
    }

private:
    static NetworkConfig make(int n, Scenario scenario, std::vector<double> r) {
        if (n < 2) throw std::invalid_argument("NetworkConfig: need at least two modes");
        for (double v : r) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw std::invalid_argument("NetworkConfig: squeezing parameters must be finite and >= 0");
            }
        }
        NetworkConfig cfg;
        cfg.n_modes = n;
        cfg.scenario = scenario;
        cfg.r = std::move(r);
        return cfg;
    }
};

/// N-splitter: B_{n-1,n}(pi/4) B_{n-2,n-1}(acos(1/sqrt(3))) ... B_{12}(acos(1/sqrt(n))),
/// rightmost factor applied first. Distributes mode 1 evenly over all n modes.
inline SymplecticMap nsplitter_map(int n) {
    if (n < 2) throw std::invalid_argument("nsplitter_map: need at least two modes");
    SymplecticMap map = SymplecticMap::identity(n);
    for (int m = 1; m <= n - 1; ++m) {
        const double theta = std::acos(1.0 / std::sqrt(static_cast<double>(n + 1 - m)));
        map = compose(SymplecticMap::beamsplitter(n, m - 1, m, theta), map);
    }
    return map;
}

/// Three-mode splitter ("tritter"): B_23(pi/4) B_12(acos(1/sqrt(3))).
inline SymplecticMap tritter_map() { return nsplitter_map(3); }

/// The n-party entangled resource: squeezed vacua through the N-splitter.
/// Zero mean; for equal squeezing the covariance is invariant under every
/// permutation of the modes.
inline GaussianState build_ghz_state(const NetworkConfig& config) {
    GaussianState state = vacuum(config.n_modes);
    for (int m = 0; m < config.n_modes; ++m) {
        state = squeeze(state, m, config.r[m], config.axis(m));
    }
    return state.transformed(nsplitter_map(config.n_modes));
}

/// Variance of p_k + p_l + gain * sum_{j != k,l} p_j on the given state.
inline double momentum_correlation_variance(const GaussianState& state, int k, int l,
                                            double gain) {
    const int n = state.n_modes();
    if (k == l) throw std::invalid_argument("momentum_correlation_variance: modes must differ");
    if (k < 0 || l < 0 || k >= n || l >= n) {
        throw std::out_of_range("momentum_correlation_variance: mode index out of range");
    }
    if (!std::isfinite(gain)) {
        throw std::invalid_argument("momentum_correlation_variance: gain must be finite");
    }
    Vector w = Vector::Zero(2 * n);
    for (int j = 0; j < n; ++j) {
        w(p_index(j)) = (j == k || j == l) ? 1.0 : gain;
    }
    return w.dot(state.cov() * w);
}

/// Duan-type witness var(x_1 - x_2) + var(p_1 + p_2) on a two-mode state.
/// A value < 1 certifies inseparability in these units (sufficient, not
/// necessary); two independent vacua give exactly 1. The criterion is applied
/// with unit local scalings, as quoted; the scaled generalization with a free
/// local parameter is out of scope.
inline double duan_value(const GaussianState& state) {
    if (state.n_modes() != 2) {
        throw std::invalid_argument("duan_value: state must have exactly two modes");
    }
    const Matrix& c = state.cov();
    const double x_part = c(0, 0) + c(2, 2) - 2.0 * c(0, 2);
    const double p_part = c(1, 1) + c(3, 3) + 2.0 * c(1, 3);
    return x_part + p_part;
}

struct DistillResult {
    GaussianState pair;
    std::vector<double> outcomes;  // assisting momentum results, ascending mode order
    bool degenerate = false;
};

/// Projects an n-party state onto a bipartite pair (k, l) by momentum
/// detections of the other n-2 modes, then displaces mode l's momentum by
/// gain * (sum of results). The conditional covariance is outcome-independent
/// and, since the displacement only moves the mean, so is the Duan value; the
/// mode that absorbs the displacement is a bookkeeping convention.
/// The surviving pair keeps its relative order: min(k, l) first.
inline DistillResult distill_pair(const GaussianState& state, int k, int l, double gain,
                                  RngStream* rng = nullptr,
                                  const std::vector<double>* forced_outcomes = nullptr) {
    const int n = state.n_modes();
    if (n < 3) throw std::invalid_argument("distill_pair: need at least three modes");
    if (k == l) throw std::invalid_argument("distill_pair: modes must differ");
    if (k < 0 || l < 0 || k >= n || l >= n) {
        throw std::out_of_range("distill_pair: mode index out of range");
    }
    if (forced_outcomes && forced_outcomes->size() != static_cast<std::size_t>(n - 2)) {
        throw std::invalid_argument("distill_pair: need one forced outcome per measured mode");
    }
    if (!forced_outcomes && rng == nullptr) {
        throw std::invalid_argument("distill_pair: need forced outcomes or an RNG stream");
    }

    GaussianState current = state;
    std::vector<int> live(n);
    for (int m = 0; m < n; ++m) live[m] = m;

    DistillResult result{std::move(current), {}, false};
    std::size_t next = 0;
    for (int j = 0; j < n; ++j) {
        if (j == k || j == l) continue;
        std::optional<double> forced;
        if (forced_outcomes) forced = (*forced_outcomes)[next];
        auto m = measure_homodyne(result.pair, live[j], Quadrature::P, forced, rng);
        result.outcomes.push_back(m.outcome);
        result.degenerate = result.degenerate || m.degenerate;
        result.pair = std::move(m.conditional);
        ++next;
        for (int t = 0; t < n; ++t) {
            if (t != j && live[t] > live[j]) --live[t];
        }
        live[j] = -1;
    }

    double sum = 0.0;
    for (double v : result.outcomes) sum += v;
    result.pair = displace(result.pair, live[l], 0.0, gain * sum);
    return result;
}

}  // namespace cvqnet
