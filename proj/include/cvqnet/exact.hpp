#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace cvqnet {

namespace detail {

inline constexpr std::int64_t kMaxExactMagnitude = 4'000'000'000'000'000;  // < 2^53

inline std::optional<std::int64_t> checked_i64(__int128 v) {
    if (v > kMaxExactMagnitude || v < -static_cast<__int128>(kMaxExactMagnitude)) {
        return std::nullopt;
    }
    return static_cast<std::int64_t>(v);
}

inline bool is_perfect_square(std::int64_t v, std::int64_t& root) {
    if (v < 0) return false;
    auto s = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(v))));
    for (std::int64_t c = s > 1 ? s - 1 : 0; c <= s + 1; ++c) {
        if (c * c == v) {
            root = c;
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// Signed square root of a nonnegative rational: sign * sqrt(num/den), with
/// the radicand kept in lowest terms. Closed under multiplication; closed
/// under addition exactly when the two radicands differ by a rational square.
/// The beamsplitter cascades used here (angles acos(1/sqrt(k))) only ever
/// produce coefficients of this shape, which is what makes exact structural
/// checks of the output operators possible.
class SqrtRational {
public:
    constexpr SqrtRational() = default;  // zero

    SqrtRational(int sign, std::int64_t num, std::int64_t den) {
        if (den <= 0 || num < 0) {
            throw std::invalid_argument("SqrtRational: radicand must be nonnegative with positive denominator");
        }
        if (sign == 0 || num == 0) return;  // canonical zero
        const std::int64_t g = std::gcd(num, den);
        sign_ = sign > 0 ? 1 : -1;
        num_ = num / g;
        den_ = den / g;
    }

    static SqrtRational sqrt_of(std::int64_t num, std::int64_t den) {
        return SqrtRational(1, num, den);
    }

    /// Exact rational p/q as a SqrtRational (radicand (p/q)^2).
    static SqrtRational rational(std::int64_t p, std::int64_t q) {
        if (q == 0) throw std::invalid_argument("SqrtRational::rational: zero denominator");
        const auto pp = detail::checked_i64(static_cast<__int128>(p) * p);
        const auto qq = detail::checked_i64(static_cast<__int128>(q) * q);
        if (!pp || !qq) {
            throw std::overflow_error("SqrtRational::rational: value outside the exact range");
        }
        const int sign = ((p < 0) != (q < 0)) ? -1 : 1;
        return SqrtRational(p == 0 ? 0 : sign, *pp, *qq);
    }

    int sign() const { return sign_; }
    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    bool is_zero() const { return sign_ == 0; }

    double value() const {
        return sign_ * std::sqrt(static_cast<double>(num_) / static_cast<double>(den_));
    }

    SqrtRational negated() const {
        SqrtRational r = *this;
        r.sign_ = -r.sign_;
        return r;
    }

    friend bool operator==(const SqrtRational& a, const SqrtRational& b) {
        return a.sign_ == b.sign_ && a.num_ == b.num_ && a.den_ == b.den_;
    }

    std::optional<SqrtRational> times(const SqrtRational& o) const {
        if (is_zero() || o.is_zero()) return SqrtRational();
        // Cross-reduce before multiplying to keep magnitudes small.
        const std::int64_t g1 = std::gcd(num_, o.den_);
        const std::int64_t g2 = std::gcd(o.num_, den_);
        const auto n = detail::checked_i64(static_cast<__int128>(num_ / g1) * (o.num_ / g2));
        const auto d = detail::checked_i64(static_cast<__int128>(den_ / g2) * (o.den_ / g1));
        if (!n || !d) return std::nullopt;
        return SqrtRational(sign_ * o.sign_, *n, *d);
    }

    /// Exact sum, available only when the radicand ratio is a perfect rational
    /// square (so both roots live in the same radical extension).
    std::optional<SqrtRational> plus(const SqrtRational& o) const {
        if (is_zero()) return o;
        if (o.is_zero()) return *this;
        auto p128 = detail::checked_i64(static_cast<__int128>(num_) * o.den_);
        auto q128 = detail::checked_i64(static_cast<__int128>(den_) * o.num_);
        if (!p128 || !q128) return std::nullopt;
        std::int64_t p = *p128, q = *q128;
        const std::int64_t g = std::gcd(p, q);
        p /= g;
        q /= g;
        std::int64_t sp = 0, sq = 0;
        if (!detail::is_perfect_square(p, sp) || !detail::is_perfect_square(q, sq)) {
            return std::nullopt;  // sum leaves the radical field
        }
        // this = (sp/sq) * sqrt(o.radicand), so the sum collapses to a single radical.
        const std::int64_t t = sign_ * sp + o.sign_ * sq;
        if (t == 0) return SqrtRational();
        const auto n = detail::checked_i64(static_cast<__int128>(t) * t * o.num_);
        const auto d = detail::checked_i64(static_cast<__int128>(sq) * sq * o.den_);
        if (!n || !d) return std::nullopt;
        return SqrtRational(t > 0 ? 1 : -1, *n, *d);
    }

private:
    int sign_ = 0;
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// Linear-form coefficient: exact SqrtRational while the algebra permits,
/// a plain double once an inexact factor (an arbitrary gain, say) enters.
class Coeff {
public:
    Coeff() = default;  // exact zero

    static Coeff zero() { return Coeff(); }
    static Coeff one() { return Coeff(SqrtRational::rational(1, 1)); }

    static Coeff exact(const SqrtRational& sr) { return Coeff(sr); }
    static Coeff exact_sqrt(std::int64_t num, std::int64_t den) {
        return Coeff(SqrtRational::sqrt_of(num, den));
    }
    static Coeff rational(std::int64_t p, std::int64_t q) {
        return Coeff(SqrtRational::rational(p, q));
    }
    static Coeff from_double(double v) {
        Coeff c;
        c.exact_ = false;
        c.value_ = v;
        return c;
    }

    bool is_exact() const { return exact_; }
    const SqrtRational& radical() const {
        if (!exact_) throw std::logic_error("Coeff::radical: coefficient is not exact");
        return sr_;
    }
    double value() const { return value_; }
    bool is_zero() const { return exact_ ? sr_.is_zero() : value_ == 0.0; }

    Coeff operator-() const {
        if (exact_) return Coeff(sr_.negated());
        return from_double(-value_);
    }

    friend Coeff operator*(const Coeff& a, const Coeff& b) {
        if (a.exact_ && b.exact_) {
            if (auto r = a.sr_.times(b.sr_)) return Coeff(*r);
        }
        return from_double(a.value_ * b.value_);
    }

    friend Coeff operator+(const Coeff& a, const Coeff& b) {
        if (a.exact_ && b.exact_) {
            if (auto r = a.sr_.plus(b.sr_)) return Coeff(*r);
        }
        return from_double(a.value_ + b.value_);
    }

    /// Scale by a runtime real. Stays exact for the trivial factors so that
    /// unit-gain protocol algebra keeps exact coefficients.
    Coeff scaled(double g) const {
        if (g == 1.0) return *this;
        if (g == -1.0) return -*this;
        if (g == 0.0) return zero();
        return from_double(value_ * g);
    }

private:
    explicit Coeff(const SqrtRational& sr) : exact_(true), sr_(sr), value_(sr.value()) {}

    bool exact_ = true;
    SqrtRational sr_{};
    double value_ = 0.0;
};

}  // namespace cvqnet
