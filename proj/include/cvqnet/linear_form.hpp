#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "exact.hpp"
#include "symplectic.hpp"

namespace cvqnet {

/// Symbol id for the unknown coherent input mode in protocol algebra.
inline constexpr int kInputMode = -1;

/// One term of a linear form: coeff * e^{squeeze_exponent * r_mode} * q_mode^(0),
/// where q_mode^(0) is an initial vacuum quadrature operator (or the coherent
/// input quadrature for mode == kInputMode, which never carries a squeezing
/// factor).
struct FormTerm {
    int mode = 0;
    Quadrature quad = Quadrature::X;
    int squeeze_exponent = 0;  // in {-1, 0, +1}
    Coeff coeff;
};

/// Exact expansion of an output quadrature operator over the initial vacuum
/// quadratures, with e^{+-r} squeezing weights kept symbolic. Because the
/// initial quadratures are independent with variance 1/4, any variance or
/// covariance of such forms is evaluable in closed form for any assignment of
/// the squeezing parameters; this is the independent oracle against which the
/// covariance pipeline is checked.
class LinearForm {
public:
    LinearForm() = default;
    explicit LinearForm(double offset) : offset_(offset) {}

    static LinearForm symbol(int mode, Quadrature quad, int exponent,
                             const Coeff& coeff = Coeff::one()) {
        if (exponent < -1 || exponent > 1) {
            throw std::invalid_argument("LinearForm: squeeze exponent must be -1, 0 or +1");
        }
        if (mode == kInputMode && exponent != 0) {
            throw std::invalid_argument("LinearForm: the input mode carries no squeezing factor");
        }
        if (mode < kInputMode) throw std::out_of_range("LinearForm: invalid mode id");
        LinearForm f;
        if (!coeff.is_zero()) f.terms_.push_back({mode, quad, exponent, coeff});
        return f;
    }

    const std::vector<FormTerm>& terms() const { return terms_; }
    double offset() const { return offset_; }

    /// Coefficient of the (mode, quadrature, exponent) symbol; zero if absent.
    Coeff coefficient(int mode, Quadrature quad, int exponent) const {
        for (const auto& t : terms_) {
            if (t.mode == mode && t.quad == quad && t.squeeze_exponent == exponent) return t.coeff;
        }
        return Coeff::zero();
    }

    LinearForm plus(const LinearForm& o) const {
        LinearForm out;
        out.offset_ = offset_ + o.offset_;
        out.terms_.reserve(terms_.size() + o.terms_.size());
        std::size_t i = 0, j = 0;
        while (i < terms_.size() || j < o.terms_.size()) {
            if (j >= o.terms_.size() || (i < terms_.size() && key(terms_[i]) < key(o.terms_[j]))) {
                out.terms_.push_back(terms_[i++]);
            } else if (i >= terms_.size() || key(o.terms_[j]) < key(terms_[i])) {
                out.terms_.push_back(o.terms_[j++]);
            } else {
                FormTerm t = terms_[i++];
                t.coeff = t.coeff + o.terms_[j++].coeff;
                if (!t.coeff.is_zero()) out.terms_.push_back(t);
            }
        }
        return out;
    }

    LinearForm scaled(const Coeff& c) const {
        LinearForm out;
        out.offset_ = offset_ * c.value();
        if (c.is_zero()) return out;
        out.terms_.reserve(terms_.size());
        for (const auto& t : terms_) {
            FormTerm s = t;
            s.coeff = t.coeff * c;
            if (!s.coeff.is_zero()) out.terms_.push_back(s);
        }
        return out;
    }

    LinearForm scaled(double g) const { return scaled(Coeff::one().scaled(g)); }

private:
    static std::tuple<int, int, int> key(const FormTerm& t) {
        return {t.mode, static_cast<int>(t.quad), t.squeeze_exponent};
    }

    std::vector<FormTerm> terms_;  // sorted by key, unique, nonzero
    double offset_ = 0.0;
};

/// Squeezing layout of one initial mode. An unsqueezed mode carries its
/// vacuum symbol with exponent 0.
struct ModeSqueezeSpec {
    SqueezeAxis axis = SqueezeAxis::Position;
    bool squeezed = true;
};

/// The 2n forms (x_1, p_1, ..., x_n, p_n) of the freshly squeezed vacua:
/// a momentum-squeezed mode m reads x_m = e^{+r_m} x_m^(0),
/// p_m = e^{-r_m} p_m^(0); a position-squeezed mode is the transpose.
inline std::vector<LinearForm> initial_forms(int n, const std::vector<ModeSqueezeSpec>& spec) {
    if (n < 1) throw std::invalid_argument("initial_forms: need at least one mode");
    if (spec.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("initial_forms: spec size must equal mode count");
    }
    std::vector<LinearForm> forms;
    forms.reserve(2 * n);
    for (int m = 0; m < n; ++m) {
        int x_exp = 0;
        if (spec[m].squeezed) x_exp = (spec[m].axis == SqueezeAxis::Momentum) ? +1 : -1;
        forms.push_back(LinearForm::symbol(m, Quadrature::X, x_exp));
        forms.push_back(LinearForm::symbol(m, Quadrature::P, -x_exp));
    }
    return forms;
}

/// Beamsplitter rewrite of the quadrature forms, with the rotation entries
/// supplied as coefficients so that exact angles stay exact:
///   f_i -> cos * f_i + sin * f_j,  f_j -> sin * f_i - cos * f_j.
inline void apply_beamsplitter_forms(std::vector<LinearForm>& forms, int i, int j,
                                     const Coeff& cos_theta, const Coeff& sin_theta) {
    const int n = static_cast<int>(forms.size()) / 2;
    if (i == j) throw std::invalid_argument("apply_beamsplitter_forms: modes must differ");
    if (i < 0 || j < 0 || i >= n || j >= n) {
        throw std::out_of_range("apply_beamsplitter_forms: mode index out of range");
    }
    for (int q = 0; q < 2; ++q) {
        const LinearForm fi = forms[2 * i + q];
        const LinearForm fj = forms[2 * j + q];
        forms[2 * i + q] = fi.scaled(cos_theta).plus(fj.scaled(sin_theta));
        forms[2 * j + q] = fi.scaled(sin_theta).plus(fj.scaled(-cos_theta));
    }
}

inline void apply_beamsplitter_forms(std::vector<LinearForm>& forms, int i, int j, double theta) {
    apply_beamsplitter_forms(forms, i, j, Coeff::from_double(std::cos(theta)),
                             Coeff::from_double(std::sin(theta)));
}

/// N-splitter cascade B_{n-1,n}(pi/4) ... B_{12}(acos(1/sqrt(n))) applied to
/// the first n modes of the form vector, rightmost factor first. Every angle
/// is acos(1/sqrt(k)), so all coefficients stay exact square roots of
/// rationals.
inline void apply_nsplitter_forms(std::vector<LinearForm>& forms, int n) {
    if (n < 2) throw std::invalid_argument("apply_nsplitter_forms: need at least two modes");
    if (static_cast<std::size_t>(2 * n) > forms.size()) {
        throw std::out_of_range("apply_nsplitter_forms: form vector too short");
    }
    for (int m = 1; m <= n - 1; ++m) {
        const std::int64_t k = n + 1 - m;
        apply_beamsplitter_forms(forms, m - 1, m, Coeff::exact_sqrt(1, k),
                                 Coeff::exact_sqrt(k - 1, k));
    }
}

namespace detail {

// Amplitude of each distinct initial quadrature (mode, quad) after putting in
// the e^{exponent * r} weights. Input-mode symbols take weight 1.
inline std::vector<std::tuple<int, int, double>> symbol_amplitudes(
    const LinearForm& form, const std::vector<double>& r_values) {
    std::vector<std::tuple<int, int, double>> amps;
    for (const auto& t : form.terms()) {
        double weight = 1.0;
        if (t.squeeze_exponent != 0) {
            if (t.mode < 0 || t.mode >= static_cast<int>(r_values.size())) {
                throw std::invalid_argument("linear form: missing squeezing value for a mode symbol");
            }
            weight = std::exp(t.squeeze_exponent * r_values[t.mode]);
        }
        const int q = static_cast<int>(t.quad);
        if (!amps.empty() && std::get<0>(amps.back()) == t.mode && std::get<1>(amps.back()) == q) {
            std::get<2>(amps.back()) += t.coeff.value() * weight;
        } else {
            amps.emplace_back(t.mode, q, t.coeff.value() * weight);
        }
    }
    return amps;
}

}  // namespace detail

/// Variance of a form for a given assignment of squeezing parameters:
/// sum over initial quadratures of amplitude^2 / 4 (vacua are independent,
/// and the coherent input fluctuates like vacuum).
inline double variance_of(const LinearForm& form, const std::vector<double>& r_values) {
    double var = 0.0;
    for (const auto& [mode, quad, amp] : detail::symbol_amplitudes(form, r_values)) {
        var += amp * amp * kVacuumVariance;
    }
    return var;
}

inline double covariance_of(const LinearForm& a, const LinearForm& b,
                            const std::vector<double>& r_values) {
    const auto amps_a = detail::symbol_amplitudes(a, r_values);
    const auto amps_b = detail::symbol_amplitudes(b, r_values);
    double cov = 0.0;
    std::size_t i = 0, j = 0;
    while (i < amps_a.size() && j < amps_b.size()) {
        const auto key_a = std::make_pair(std::get<0>(amps_a[i]), std::get<1>(amps_a[i]));
        const auto key_b = std::make_pair(std::get<0>(amps_b[j]), std::get<1>(amps_b[j]));
        if (key_a < key_b) {
            ++i;
        } else if (key_b < key_a) {
            ++j;
        } else {
            cov += std::get<2>(amps_a[i++]) * std::get<2>(amps_b[j++]) * kVacuumVariance;
        }
    }
    return cov;
}

/// Expectation of a form for a coherent input at (x_in, p_in); vacuum symbols
/// average to zero.
inline double mean_of(const LinearForm& form, double x_in, double p_in) {
    double mean = form.offset();
    for (const auto& t : form.terms()) {
        if (t.mode == kInputMode) {
            mean += t.coeff.value() * (t.quad == Quadrature::X ? x_in : p_in);
        }
    }
    return mean;
}

struct TeleportForms {
    LinearForm x_tel;
    LinearForm p_tel;
};

/// Output quadrature operators of the teleportation protocol, derived purely
/// in form algebra: build the n-mode resource through the N-splitter, couple
/// the input mode to the sender at a 50/50 beamsplitter
/// (x_u = (x_in - x_k)/sqrt(2), p_v = (p_in + p_k)/sqrt(2)), then add the
/// receiver displacements g*sqrt(2) per Bell result and one assisting gain
/// per remaining station:
///   x_tel = x_l + g sqrt(2) x_u,
///   p_tel = p_l + g sqrt(2) p_v + sum_j g_j p_j.
/// At g = 1 the coherent-input coefficient is exactly 1.
inline TeleportForms teleported_output_forms(int n, int sender, int receiver, double bell_gain,
                                             const std::vector<double>& station_gains,
                                             const std::vector<ModeSqueezeSpec>& spec) {
    if (n < 2) throw std::invalid_argument("teleported_output_forms: need at least two modes");
    if (sender == receiver) {
        throw std::invalid_argument("teleported_output_forms: sender and receiver must differ");
    }
    if (sender < 0 || receiver < 0 || sender >= n || receiver >= n) {
        throw std::out_of_range("teleported_output_forms: mode index out of range");
    }
    if (station_gains.size() != static_cast<std::size_t>(n - 2)) {
        throw std::invalid_argument("teleported_output_forms: need one gain per assisting station");
    }
    if (!std::isfinite(bell_gain)) {
        throw std::invalid_argument("teleported_output_forms: gain must be finite");
    }

    std::vector<LinearForm> forms = initial_forms(n, spec);
    apply_nsplitter_forms(forms, n);
    forms.push_back(LinearForm::symbol(kInputMode, Quadrature::X, 0));
    forms.push_back(LinearForm::symbol(kInputMode, Quadrature::P, 0));
    apply_beamsplitter_forms(forms, n, sender, Coeff::exact_sqrt(1, 2), Coeff::exact_sqrt(1, 2));

    // After the coupling, slot `sender` holds the u mode and slot n the v mode.
    const Coeff bell = Coeff::exact_sqrt(2, 1).scaled(bell_gain);
    LinearForm x_tel = forms[x_index(receiver)].plus(forms[x_index(sender)].scaled(bell));
    LinearForm p_tel = forms[p_index(receiver)].plus(forms[p_index(n)].scaled(bell));
    std::size_t station = 0;
    for (int j = 0; j < n; ++j) {
        if (j == sender || j == receiver) continue;
        p_tel = p_tel.plus(forms[p_index(j)].scaled(station_gains[station++]));
    }
    return {std::move(x_tel), std::move(p_tel)};
}

inline TeleportForms teleported_output_forms(int n, int sender, int receiver, double bell_gain,
                                             double assist_gain,
                                             const std::vector<ModeSqueezeSpec>& spec) {
    return teleported_output_forms(n, sender, receiver, bell_gain,
                                   std::vector<double>(std::max(n - 2, 0), assist_gain), spec);
}

/// Coherent-state teleportation fidelity assembled from the output forms:
/// sigma_q = var(q_tel) + 1/4 (Q smoothing; var already includes the
/// coherent input's own g^2/4 fluctuation), and for g != 1 the Gaussian
/// factor in the residual displacement (1 - g) alpha. At g = 1 the result is
/// exactly independent of alpha.
inline double fidelity_from_forms(const LinearForm& x_tel, const LinearForm& p_tel,
                                  double bell_gain, double x_in, double p_in,
                                  const std::vector<double>& r_values) {
    const double sigma_x = variance_of(x_tel, r_values) + kVacuumVariance;
    const double sigma_p = variance_of(p_tel, r_values) + kVacuumVariance;
    const double peak = 1.0 / (2.0 * std::sqrt(sigma_x * sigma_p));
    if (bell_gain == 1.0) return std::clamp(peak, 0.0, 1.0);
    const double dx = x_in - mean_of(x_tel, x_in, p_in);
    const double dp = p_in - mean_of(p_tel, x_in, p_in);
    const double fid = peak * std::exp(-dx * dx / (2.0 * sigma_x) - dp * dp / (2.0 * sigma_p));
    return std::clamp(fid, 0.0, 1.0);
}

}  // namespace cvqnet
