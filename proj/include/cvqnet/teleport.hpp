#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gaussian_state.hpp"
#include "linear_form.hpp"
#include "network.hpp"
#include "rng.hpp"
#include "symplectic.hpp"

namespace cvqnet {

/// Squeezing in dB: 10 log10(e^{2r}) = (20 / ln 10) r ~ 8.6859 r.
inline constexpr double kDbPerUnitSqueezing = 20.0 / std::numbers::ln10;

inline double db_from_r(double r) { return kDbPerUnitSqueezing * r; }
inline double r_from_db(double db) { return db / kDbPerUnitSqueezing; }

/// Gains applied by the receiver to the classical results: `bell` scales the
/// sender's two Bell results ("normalized gain" g), `assist` scales the sum
/// of the assisting momentum results (g^{(N)}). A per-station list overrides
/// `assist` with one gain per assisting mode, in ascending mode order.
struct GainSchedule {
    double bell = 1.0;
    double assist = 0.0;
    std::optional<std::vector<double>> per_station;

    void validate(int n) const {
        if (!std::isfinite(bell) || !std::isfinite(assist)) {
            throw std::invalid_argument("GainSchedule: gains must be finite");
        }
        if (per_station) {
            if (per_station->size() != static_cast<std::size_t>(n - 2)) {
                throw std::invalid_argument("GainSchedule: per-station list must have N-2 entries");
            }
            for (double g : *per_station) {
                if (!std::isfinite(g)) throw std::invalid_argument("GainSchedule: gains must be finite");
            }
        }
    }

    std::vector<double> station_gains(int n) const {
        validate(n);
        if (per_station) return *per_station;
        return std::vector<double>(n >= 2 ? n - 2 : 0, assist);
    }
};

/// Closed-form optimum assisting gain g^{(N)}:
///   all-equal:    (e^{4r} - 1) / (e^{4r} + (N-2)/2)
///   one-squeezed: (e^{2r1} - 1) / (e^{2r1} + (N-2)/2)
/// N = 2 has no assisting stations, so there is nothing to optimize and the
/// result is the explicit "not applicable" empty optional.
inline std::optional<double> optimal_gain(int n, Scenario scenario, double r) {
    if (n < 2) throw std::invalid_argument("optimal_gain: need at least two modes");
    if (!(r >= 0.0) || !std::isfinite(r)) {
        throw std::invalid_argument("optimal_gain: squeezing must be finite and >= 0");
    }
    if (n == 2) return std::nullopt;
    const double half_rest = (n - 2) / 2.0;
    switch (scenario) {
        case Scenario::AllEqual: {
            const double e4r = std::exp(4.0 * r);
            return (e4r - 1.0) / (e4r + half_rest);
        }
        case Scenario::OneSqueezed: {
            const double e2r = std::exp(2.0 * r);
            return (e2r - 1.0) / (e2r + half_rest);
        }
        case Scenario::Custom:
            throw std::invalid_argument("optimal_gain: no closed form for custom squeezing");
    }
    throw std::logic_error("optimal_gain: unknown scenario");
}

/// Unit Bell gain plus the scenario's optimum assisting gain (zero for N=2).
inline GainSchedule optimal_gains(const NetworkConfig& config) {
    GainSchedule gains;
    gains.bell = 1.0;
    gains.assist = optimal_gain(config.n_modes, config.scenario, config.r[0]).value_or(0.0);
    return gains;
}

/// Optimized coherent-state teleportation fidelity at unit Bell gain:
///   all-equal:    {[1 + e^{-2r}] [1 + N/(2 e^{2r} + (N-2) e^{-2r})]}^{-1/2}
///   one-squeezed: [2 + 2N/(N - 2 + 2 e^{2r1})]^{-1/2}
/// Both reduce to 1/2 at r = 0; the one-squeezed family is capped at
/// 1/sqrt(2) for every N.
inline double optimal_fidelity(int n, Scenario scenario, double r) {
    if (n < 2) throw std::invalid_argument("optimal_fidelity: need at least two modes");
    if (!(r >= 0.0) || !std::isfinite(r)) {
        throw std::invalid_argument("optimal_fidelity: squeezing must be finite and >= 0");
    }
    switch (scenario) {
        case Scenario::AllEqual: {
            const double e2r = std::exp(2.0 * r);
            const double em2r = std::exp(-2.0 * r);
            return 1.0 / std::sqrt((1.0 + em2r) * (1.0 + n / (2.0 * e2r + (n - 2) * em2r)));
        }
        case Scenario::OneSqueezed: {
            const double e2r = std::exp(2.0 * r);
            return 1.0 / std::sqrt(2.0 + 2.0 * n / (n - 2 + 2.0 * e2r));
        }
        case Scenario::Custom:
            throw std::invalid_argument("optimal_fidelity: no closed form for custom squeezing");
    }
    throw std::logic_error("optimal_fidelity: unknown scenario");
}

/// Fidelity via the Heisenberg-form route: assemble the teleported output
/// operators symbolically and evaluate their variances. Independent of the
/// covariance pipeline used by run_protocol; the two must agree to 1e-10.
/// With bell gain 1 the result does not depend on alpha.
inline double closed_form_fidelity(const NetworkConfig& config, int sender, int receiver,
                                   const GainSchedule& gains,
                                   std::array<double, 2> alpha = {0.0, 0.0}) {
    const auto forms = teleported_output_forms(config.n_modes, sender, receiver, gains.bell,
                                               gains.station_gains(config.n_modes),
                                               config.squeeze_spec());
    return fidelity_from_forms(forms.x_tel, forms.p_tel, gains.bell, alpha[0], alpha[1],
                               config.r);
}

struct ClassicalRecord {
    double x_u = 0.0;                // sender's position Bell result
    double p_v = 0.0;                // sender's momentum Bell result
    std::vector<int> assist_modes;   // assisting stations, ascending
    std::vector<double> assist_p;    // their momentum results
};

struct TeleportOutcome {
    ClassicalRecord record;
    GainSchedule gains;
    /// Teleported mode with the measurement results integrated out; this is
    /// the state whose fidelity the closed forms describe, and it does not
    /// depend on the sampled record.
    GaussianState output;
    /// Teleported mode given this record: same covariance for every record,
    /// mean displaced by the gain-weighted classical results.
    GaussianState conditional;
    double fidelity = 0.0;  // coherent_fidelity(output, alpha)
    std::array<double, 2> alpha{0.0, 0.0};
    bool degenerate = false;
};

/// Full teleportation protocol on the n-party resource: append the coherent
/// input as mode n+1, couple it to the sender at a 50/50 beamsplitter so that
/// x_u = (x_in - x_k)/sqrt(2) and p_v = (p_in + p_k)/sqrt(2), measure x_u and
/// p_v, measure p at the n-2 assisting stations, and displace the receiver by
/// (g sqrt(2) x_u, g sqrt(2) p_v + sum_j g_j p_j).
///
/// Forced outcomes, when given, are consumed in measurement order:
/// x_u, p_v, then the assisting momenta in ascending mode order.
inline TeleportOutcome run_protocol(const NetworkConfig& config, int sender, int receiver,
                                    std::array<double, 2> alpha, const GainSchedule& gains,
                                    RngStream* rng = nullptr,
                                    const std::vector<double>* forced_outcomes = nullptr) {
    const int n = config.n_modes;
    if (sender == receiver) {
        throw std::invalid_argument("run_protocol: sender and receiver must differ");
    }
    if (sender < 0 || receiver < 0 || sender >= n || receiver >= n) {
        throw std::out_of_range("run_protocol: mode index out of range");
    }
    if (!std::isfinite(alpha[0]) || !std::isfinite(alpha[1])) {
        throw std::invalid_argument("run_protocol: alpha must be finite");
    }
    gains.validate(n);
    if (forced_outcomes && forced_outcomes->size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("run_protocol: need n forced outcomes (x_u, p_v, assists)");
    }
    if (!forced_outcomes && rng == nullptr) {
        throw std::invalid_argument("run_protocol: need forced outcomes or an RNG stream");
    }

    const std::vector<double> station_gains = gains.station_gains(n);
    const int input = n;  // slot of the appended input mode

    GaussianState joint = tensor(build_ghz_state(config), coherent(alpha[0], alpha[1]));
    joint = beamsplitter(joint, input, sender, std::acos(1.0 / std::sqrt(2.0)));
    // Slot `sender` now holds the u mode and slot `input` the v mode.

    // Ensemble output: the linear forms x_l + g sqrt(2) x_u and
    // p_l + g sqrt(2) p_v + sum_j g_j p_j evaluated on the pre-measurement
    // state. Averaging the per-record displaced states over the record
    // distribution gives exactly this Gaussian.
    const double bell_scale = gains.bell * std::sqrt(2.0);
    Vector wx = Vector::Zero(2 * (n + 1));
    Vector wp = Vector::Zero(2 * (n + 1));
    wx(x_index(receiver)) = 1.0;
    wx(x_index(sender)) = bell_scale;
    wp(p_index(receiver)) = 1.0;
    wp(p_index(input)) = bell_scale;
    {
        std::size_t station = 0;
        for (int j = 0; j < n; ++j) {
            if (j == sender || j == receiver) continue;
            wp(p_index(j)) = station_gains[station++];
        }
    }
    Vector out_mean(2);
    out_mean << wx.dot(joint.mean()), wp.dot(joint.mean());
    Matrix out_cov(2, 2);
    const Vector cx = joint.cov() * wx;
    const Vector cp = joint.cov() * wp;
    out_cov << wx.dot(cx), wx.dot(cp), wx.dot(cp), wp.dot(cp);
    GaussianState output(std::move(out_mean), std::move(out_cov));

    // Sampled (or forced) measurement chain for the classical record and the
    // per-record conditional state.
    ClassicalRecord record;
    bool degenerate = false;

    std::vector<int> live(n + 1);
    for (int m = 0; m <= n; ++m) live[m] = m;
    auto remove_mode = [&](int original) {
        for (int t = 0; t <= n; ++t) {
            if (t != original && live[t] > live[original]) --live[t];
        }
        live[original] = -1;
    };
    std::size_t next_forced = 0;
    auto next_outcome = [&]() -> std::optional<double> {
        if (!forced_outcomes) return std::nullopt;
        return (*forced_outcomes)[next_forced++];
    };

    GaussianState current = joint;
    auto mu = measure_homodyne(current, live[sender], Quadrature::X, next_outcome(), rng);
    record.x_u = mu.outcome;
    degenerate = degenerate || mu.degenerate;
    current = std::move(mu.conditional);
    remove_mode(sender);

    auto mv = measure_homodyne(current, live[input], Quadrature::P, next_outcome(), rng);
    record.p_v = mv.outcome;
    degenerate = degenerate || mv.degenerate;
    current = std::move(mv.conditional);
    remove_mode(input);

    double assist_sum = 0.0;
    std::size_t station = 0;
    for (int j = 0; j < n; ++j) {
        if (j == sender || j == receiver) continue;
        auto mj = measure_homodyne(current, live[j], Quadrature::P, next_outcome(), rng);
        record.assist_modes.push_back(j);
        record.assist_p.push_back(mj.outcome);
        degenerate = degenerate || mj.degenerate;
        current = std::move(mj.conditional);
        remove_mode(j);
        assist_sum += station_gains[station++] * mj.outcome;
    }

    GaussianState conditional = displace(current, 0, bell_scale * record.x_u,
                                         bell_scale * record.p_v + assist_sum);
    const double fidelity = coherent_fidelity(output, alpha[0], alpha[1]);
    return TeleportOutcome{std::move(record), gains,        std::move(output),
                           std::move(conditional), fidelity, alpha,
                           degenerate};
}

/// distill_pair with the scenario's optimum gain as the default displacement
/// weight (see network.hpp for the explicit-gain version).
inline DistillResult distill_pair(const NetworkConfig& config, int k, int l,
                                  RngStream* rng = nullptr,
                                  const std::vector<double>* forced_outcomes = nullptr) {
    const double gain = optimal_gain(config.n_modes, config.scenario, config.r[0]).value_or(0.0);
    return distill_pair(build_ghz_state(config), k, l, gain, rng, forced_outcomes);
}

enum class GainMode { Single, PerStation };

struct NumericGainResult {
    std::vector<double> gains;  // one entry (Single) or N-2 entries (PerStation)
    double fidelity = 0.0;
    bool converged = false;
};

namespace detail {

// sigma_p as a quadratic in the station gains, precomputed from the output
// forms so that the optimizer's objective costs O((N-2)^2) per evaluation.
struct GainObjective {
    double sigma_x = 0.0;
    double base_var_p = 0.0;
    std::vector<double> cross;               // cov(p_base, p_dir_j)
    std::vector<std::vector<double>> gram;   // cov(p_dir_i, p_dir_j)

    explicit GainObjective(const NetworkConfig& config, int sender, int receiver) {
        const int n = config.n_modes;
        const auto spec = config.squeeze_spec();
        const std::vector<double> zeros(n - 2, 0.0);
        const auto base = teleported_output_forms(n, sender, receiver, 1.0, zeros, spec);
        sigma_x = variance_of(base.x_tel, config.r) + kVacuumVariance;
        base_var_p = variance_of(base.p_tel, config.r);

        std::vector<LinearForm> dirs;
        for (int s = 0; s < n - 2; ++s) {
            std::vector<double> unit(n - 2, 0.0);
            unit[s] = 1.0;
            const auto shifted = teleported_output_forms(n, sender, receiver, 1.0, unit, spec);
            dirs.push_back(shifted.p_tel.plus(base.p_tel.scaled(-1.0)));
        }
        cross.resize(dirs.size());
        gram.assign(dirs.size(), std::vector<double>(dirs.size(), 0.0));
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            cross[i] = covariance_of(base.p_tel, dirs[i], config.r);
            for (std::size_t j = 0; j <= i; ++j) {
                gram[i][j] = gram[j][i] = covariance_of(dirs[i], dirs[j], config.r);
            }
        }
    }

    double fidelity(const std::vector<double>& g) const {
        double var_p = base_var_p;
        for (std::size_t i = 0; i < g.size(); ++i) {
            var_p += 2.0 * cross[i] * g[i];
            for (std::size_t j = 0; j < g.size(); ++j) var_p += g[i] * gram[i][j] * g[j];
        }
        return 1.0 / (2.0 * std::sqrt(sigma_x * (var_p + kVacuumVariance)));
    }
};

// Golden-section maximization on [lo, hi]; returns the bracket midpoint.
inline double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                                 double tol, int max_iters, bool& converged) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    converged = false;
    for (int it = 0; it < max_iters; ++it) {
        if (b - a <= tol) {
            converged = true;
            break;
        }
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// One parabolic refinement through three well-separated samples; exact for
// objectives whose reciprocal-square is quadratic in the gain, which flattens
// out the numeric plateau around the optimum.
inline double parabolic_polish(const std::function<double(double)>& f, double t, double h) {
    const double f0 = f(t - h), f1 = f(t), f2 = f(t + h);
    const double denom = f0 - 2.0 * f1 + f2;
    if (denom >= 0.0 || std::abs(denom) < 1e-300) return t;
    const double shift = 0.5 * h * (f0 - f2) / denom;
    return std::abs(shift) <= h ? t + shift : t;
}

}  // namespace detail

/// Derivative-free recovery of the optimum gains: golden-section search for a
/// single shared gain, coordinate descent (started from the symmetric
/// optimum) for the per-station mode. Exists to cross-validate the closed
/// forms and to confirm numerically that asymmetric station gains do not
/// improve the fidelity.
inline NumericGainResult optimize_gains_numeric(const NetworkConfig& config, GainMode mode,
                                                int sender = 0, int receiver = 1) {
    const int n = config.n_modes;
    if (n < 3) throw std::invalid_argument("optimize_gains_numeric: need at least three modes");
    if (sender == receiver || sender < 0 || receiver < 0 || sender >= n || receiver >= n) {
        throw std::invalid_argument("optimize_gains_numeric: invalid sender/receiver");
    }
    const detail::GainObjective objective(config, sender, receiver);
    const int stations = n - 2;

    NumericGainResult result;
    if (mode == GainMode::Single) {
        auto phi = [&](double t) { return objective.fidelity(std::vector<double>(stations, t)); };
        bool ok = false;
        double t = detail::golden_section_max(phi, 0.0, 1.5, 1e-10, 200, ok);
        t = detail::parabolic_polish(phi, t, 0.05);
        result.gains = {t};
        result.fidelity = phi(t);
        result.converged = ok;
        return result;
    }

    // Per-station: start each coordinate at the best shared gain.
    bool ok = false;
    auto shared = [&](double t) { return objective.fidelity(std::vector<double>(stations, t)); };
    const double start = detail::parabolic_polish(
        shared, detail::golden_section_max(shared, 0.0, 1.5, 1e-8, 200, ok), 0.05);
    std::vector<double> gains(stations, start);
    bool all_converged = true;
    for (int sweep = 0; sweep < 60; ++sweep) {
        double max_delta = 0.0;
        for (int s = 0; s < stations; ++s) {
            auto line = [&](double t) {
                std::vector<double> probe = gains;
                probe[s] = t;
                return objective.fidelity(probe);
            };
            bool line_ok = false;
            double t = detail::golden_section_max(line, gains[s] - 0.25, gains[s] + 0.25, 1e-10,
                                                  200, line_ok);
            t = detail::parabolic_polish(line, t, 0.02);
            all_converged = all_converged && line_ok;
            max_delta = std::max(max_delta, std::abs(t - gains[s]));
            gains[s] = t;
        }
        if (max_delta < 1e-9) {
            result.converged = all_converged;
            break;
        }
    }
    result.gains = gains;
    result.fidelity = objective.fidelity(gains);
    return result;
}

struct CurveRow {
    int n = 0;
    double squeezing_db = 0.0;
    double r = 0.0;
    double gain = 0.0;  // assisting gain used (0 when N = 2: no stations)
    double fidelity = 0.0;
};

struct DbGrid {
    double min_db = 0.0;
    double max_db = 20.0;
    double step_db = 0.5;
};

/// Optimized-fidelity curves over a squeezing grid in dB, one row per (N, dB),
/// sorted by (N, dB). Rows are evaluated through the form route with the
/// closed-form optimum gains.
inline std::vector<CurveRow> fidelity_curve(std::vector<int> ns, Scenario scenario,
                                            const DbGrid& grid) {
    if (ns.empty()) throw std::invalid_argument("fidelity_curve: need at least one party count");
    if (scenario == Scenario::Custom) {
        throw std::invalid_argument("fidelity_curve: scenario must be all-equal or one-squeezed");
    }
    if (!(grid.min_db >= 0.0) || !(grid.max_db >= grid.min_db) || !(grid.step_db > 0.0)) {
        throw std::invalid_argument("fidelity_curve: need 0 <= min <= max and step > 0");
    }
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

    std::vector<CurveRow> rows;
    for (int n : ns) {
        if (n < 2) throw std::invalid_argument("fidelity_curve: need at least two parties");
        for (double db = grid.min_db; db <= grid.max_db + 1e-9; db += grid.step_db) {
            const double r = r_from_db(db);
            const NetworkConfig config = (scenario == Scenario::AllEqual)
                                             ? NetworkConfig::all_equal(n, r)
                                             : NetworkConfig::one_squeezed(n, r);
            const GainSchedule gains = optimal_gains(config);
            rows.push_back({n, db, r, gains.assist,
                            closed_form_fidelity(config, 0, 1, gains)});
        }
    }
    return rows;
}

struct StationaryPoint {
    bool is_max = false;
    double r = 0.0;
    double fidelity = 0.0;
};

enum class ThresholdClass { AlwaysQuantum, DipsClassical };

struct ThresholdReport {
    int n = 0;
    ThresholdClass classification = ThresholdClass::AlwaysQuantum;
    std::vector<StationaryPoint> stationary_points;  // ascending in r
    double min_fidelity = 0.0;
    double r_at_min = 0.0;
};

struct RGrid {
    double max_r = 6.0;
    double step = 1e-3;
};

/// Scans the all-equal optimized fidelity over r in (0, max_r]: locates the
/// stationary points of F(r) (sign changes of a central-difference derivative,
/// refined by bisection) and classifies each N as always-quantum or
/// dips-classical depending on whether any interior minimum falls below 1/2.
inline std::vector<ThresholdReport> threshold_scan(const std::vector<int>& ns,
                                                   const RGrid& grid = {}) {
    if (ns.empty()) throw std::invalid_argument("threshold_scan: need at least one party count");
    if (!(grid.step > 0.0) || !(grid.max_r > grid.step)) {
        throw std::invalid_argument("threshold_scan: need step > 0 and max_r > step");
    }

    constexpr double h = 1e-6;
    std::vector<ThresholdReport> reports;
    for (int n : ns) {
        if (n < 2) throw std::invalid_argument("threshold_scan: need at least two parties");
        auto fid = [&](double r) { return optimal_fidelity(n, Scenario::AllEqual, r); };
        auto slope = [&](double r) { return (fid(r + h) - fid(r - h)) / (2.0 * h); };

        ThresholdReport report;
        report.n = n;
        report.min_fidelity = fid(grid.step);
        report.r_at_min = grid.step;

        double prev_r = grid.step;
        double prev_slope = slope(prev_r);
        for (double r = 2.0 * grid.step; r <= grid.max_r + 1e-12; r += grid.step) {
            const double f = fid(r);
            if (f < report.min_fidelity) {
                report.min_fidelity = f;
                report.r_at_min = r;
            }
            const double s = slope(r);
            if ((prev_slope > 0.0 && s < 0.0) || (prev_slope < 0.0 && s > 0.0)) {
                double lo = prev_r, hi = r;
                double lo_slope = prev_slope;
                while (hi - lo > 1e-9) {
                    const double mid = 0.5 * (lo + hi);
                    const double ms = slope(mid);
                    if ((lo_slope > 0.0) == (ms > 0.0)) {
                        lo = mid;
                        lo_slope = ms;
                    } else {
                        hi = mid;
                    }
                }
                const double r_star = 0.5 * (lo + hi);
                report.stationary_points.push_back({prev_slope > 0.0, r_star, fid(r_star)});
            }
            prev_r = r;
            prev_slope = s;
        }

        report.classification = ThresholdClass::AlwaysQuantum;
        for (const auto& pt : report.stationary_points) {
            if (!pt.is_max && pt.fidelity < report.min_fidelity) {
                report.min_fidelity = pt.fidelity;
                report.r_at_min = pt.r;
            }
            if (!pt.is_max && pt.fidelity < 0.5) {
                report.classification = ThresholdClass::DipsClassical;
            }
        }
        if (report.min_fidelity < 0.5) report.classification = ThresholdClass::DipsClassical;
        reports.push_back(std::move(report));
    }
    return reports;
}

inline std::vector<ThresholdReport> threshold_scan(int n_min, int n_max, const RGrid& grid = {}) {
    if (n_max < n_min) throw std::invalid_argument("threshold_scan: empty party range");
    std::vector<int> ns;
    for (int n = n_min; n <= n_max; ++n) ns.push_back(n);
    return threshold_scan(ns, grid);
}

}  // namespace cvqnet
