#pragma once

/**
 * @file exactnum.hpp
 * @brief Exact rationals, p-adic valuations and absolute values.
 *
 * Rational wraps a GMP rational and keeps it canonical: gcd(|num|, den) = 1,
 * den > 0, zero is 0/1. Valuations are computed by repeated exact division
 * by p, never by factoring the whole number.
 */

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdioph/error.hpp"

namespace sdioph {

using Integer = mpz_class;

class Rational {
public:
    Rational() = default;
    Rational(int v) : q_(v) {}
    Rational(long v) : q_(v) {}
    Rational(long long v) : q_(Integer(std::to_string(v))) {}
    Rational(const Integer& v) : q_(v) {}

    Rational(const Integer& num, const Integer& den) {
        if (den == 0) throw error(errc::domain, "zero denominator");
        q_ = mpq_class(num, den);
        q_.canonicalize();
    }

    explicit Rational(const mpq_class& q) : q_(q) { q_.canonicalize(); }

    /// Accepts "a", "a/b" or a decimal "a.f": optional sign on a only, b > 0.
    static Rational parse(std::string_view text) {
        auto digits = [](std::string_view s) {
            if (s.empty()) return false;
            for (char c : s)
                if (c < '0' || c > '9') return false;
            return true;
        };
        std::string_view body = text;
        bool negative = false;
        if (!body.empty() && (body.front() == '-' || body.front() == '+')) {
            negative = body.front() == '-';
            body.remove_prefix(1);
        }
        auto dot = body.find('.');
        if (dot != std::string_view::npos) {
            std::string_view whole = body.substr(0, dot), frac = body.substr(dot + 1);
            if (!digits(frac) || (!whole.empty() && !digits(whole)))
                throw error(errc::parse, "malformed rational '" + std::string(text) + "'");
            Integer num(std::string(whole.empty() ? "0" : whole) + std::string(frac), 10);
            Integer den = 1;
            for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
            return Rational(negative ? Integer(-num) : num, den);
        }
        auto slash = body.find('/');
        std::string_view num_part = body.substr(0, slash);
        std::string_view den_part = slash == std::string_view::npos ? std::string_view("1")
                                                                     : body.substr(slash + 1);
        if (!digits(num_part) || !digits(den_part))
            throw error(errc::parse, "malformed rational '" + std::string(text) + "'");
        Integer num(std::string(num_part), 10), den(std::string(den_part), 10);
        if (den == 0) throw error(errc::parse, "zero denominator in '" + std::string(text) + "'");
        if (negative) num = -num;
        return Rational(num, den);
    }

    Integer numerator() const { return q_.get_num(); }
    Integer denominator() const { return q_.get_den(); }
    const mpz_class& num_ref() const { return q_.get_num(); }
    const mpz_class& den_ref() const { return q_.get_den(); }
    const mpq_class& mpq() const { return q_; }

    bool is_zero() const { return sgn(q_) == 0; }
    bool is_integer() const { return q_.get_den() == 1; }
    int sign() const { return sgn(q_); }

    std::string str() const { return q_.get_str(); }
    double to_double() const { return q_.get_d(); }

    Rational operator-() const { return Rational(mpq_class(-q_)); }
    Rational abs() const { return Rational(mpq_class(::abs(q_))); }
    Rational inverse() const {
        if (is_zero()) throw error(errc::domain, "inverse of zero");
        return Rational(denominator(), numerator());
    }

    Rational& operator+=(const Rational& o) { q_ += o.q_; return *this; }
    Rational& operator-=(const Rational& o) { q_ -= o.q_; return *this; }
    Rational& operator*=(const Rational& o) { q_ *= o.q_; return *this; }
    Rational& operator/=(const Rational& o) {
        if (o.is_zero()) throw error(errc::domain, "division by zero");
        q_ /= o.q_;
        return *this;
    }

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

    friend bool operator==(const Rational& a, const Rational& b) { return cmp(a.q_, b.q_) == 0; }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        int c = cmp(a.q_, b.q_);
        return c < 0 ? std::strong_ordering::less
               : c > 0 ? std::strong_ordering::greater
                       : std::strong_ordering::equal;
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    mpq_class q_;
};

inline Integer ipow(const Integer& base, unsigned long e) {
    Integer out;
    mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), e);
    return out;
}

/// base^e for any integer e; base must be nonzero when e < 0.
inline Rational pow(const Rational& base, long e) {
    if (e >= 0)
        return Rational(ipow(base.numerator(), static_cast<unsigned long>(e)),
                        ipow(base.denominator(), static_cast<unsigned long>(e)));
    if (base.is_zero()) throw error(errc::domain, "zero to a negative power");
    unsigned long m = static_cast<unsigned long>(-e);
    return Rational(ipow(base.denominator(), m), ipow(base.numerator(), m));
}

/// 2^e as an exact rational.
inline Rational pow2(long e) { return pow(Rational(2), e); }

inline Rational min(const Rational& a, const Rational& b) { return b < a ? b : a; }
inline Rational max(const Rational& a, const Rational& b) { return a < b ? b : a; }
inline Rational abs(const Rational& x) { return x.sign() < 0 ? -x : x; }

/// Floor and ceiling of a rational as integers.
inline Integer floor(const Rational& x) {
    Integer out;
    mpz_fdiv_q(out.get_mpz_t(), x.num_ref().get_mpz_t(), x.den_ref().get_mpz_t());
    return out;
}
inline Integer ceil(const Rational& x) {
    Integer out;
    mpz_cdiv_q(out.get_mpz_t(), x.num_ref().get_mpz_t(), x.den_ref().get_mpz_t());
    return out;
}

inline std::int64_t to_i64(const Integer& v) {
    if (!v.fits_slong_p()) throw error(errc::domain, "integer does not fit in 64 bits: " + v.get_str());
    return v.get_si();
}

// Integer or +infinity; holds p-adic valuations.
class ExtendedInt {
public:
    ExtendedInt(long v) : v_(v) {}
    static ExtendedInt infinity() { return ExtendedInt(); }

    bool is_infinite() const { return !v_.has_value(); }
    long value() const {
        if (!v_) throw error(errc::domain, "value of +infinity");
        return *v_;
    }

    friend ExtendedInt operator+(const ExtendedInt& a, const ExtendedInt& b) {
        if (a.is_infinite() || b.is_infinite()) return infinity();
        return ExtendedInt(*a.v_ + *b.v_);
    }
    friend bool operator==(const ExtendedInt& a, const ExtendedInt& b) { return a.v_ == b.v_; }
    friend std::strong_ordering operator<=>(const ExtendedInt& a, const ExtendedInt& b) {
        if (a.is_infinite() || b.is_infinite()) return a.is_infinite() <=> b.is_infinite();
        return *a.v_ <=> *b.v_;
    }

    std::string str() const { return v_ ? std::to_string(*v_) : "+inf"; }

private:
    ExtendedInt() = default;
    std::optional<long> v_;
};

namespace detail {

inline bool strong_probable_prime(const Integer& n, unsigned long base) {
    Integer d = n - 1;
    unsigned long s = 0;
    while (mpz_even_p(d.get_mpz_t())) {
        d /= 2;
        ++s;
    }
    Integer a(base), x;
    mpz_powm(x.get_mpz_t(), a.get_mpz_t(), d.get_mpz_t(), n.get_mpz_t());
    if (x == 1 || x == n - 1) return true;
    for (unsigned long r = 1; r < s; ++r) {
        mpz_powm_ui(x.get_mpz_t(), x.get_mpz_t(), 2, n.get_mpz_t());
        if (x == n - 1) return true;
    }
    return false;
}

/// Number of times p divides n (n != 0); n is divided in place.
inline long strip_factor(Integer& n, const Integer& p) {
    long v = 0;
    while (mpz_divisible_p(n.get_mpz_t(), p.get_mpz_t())) {
        mpz_divexact(n.get_mpz_t(), n.get_mpz_t(), p.get_mpz_t());
        ++v;
    }
    return v;
}

inline long valuation_of_integer(Integer n, const Integer& p) { return strip_factor(n, p); }

/// v_p(x) for x != 0 without the primality guard.
inline long valuation_unchecked(const Rational& x, const Integer& p) {
    return valuation_of_integer(x.numerator(), p) - valuation_of_integer(x.denominator(), p);
}

}  // namespace detail

/// Deterministic trial division below 2^20, fixed-base strong probable prime test above.
inline bool is_prime(const Integer& n) {
    if (n < 2) return false;
    if (n < (1 << 20)) {
        unsigned long v = n.get_ui();
        if (v < 4) return true;
        if (v % 2 == 0) return false;
        for (unsigned long f = 3; f * f <= v; f += 2)
            if (v % f == 0) return false;
        return true;
    }
    for (unsigned long b : {2ul, 3ul, 5ul, 7ul, 11ul, 13ul, 17ul, 19ul, 23ul, 29ul, 31ul, 37ul}) {
        if (mpz_divisible_ui_p(n.get_mpz_t(), b)) return false;
        if (!detail::strong_probable_prime(n, b)) return false;
    }
    return true;
}

inline void require_prime(const Integer& p) {
    if (!is_prime(p)) throw error(errc::invalid_place, p.get_str() + " is not prime");
}

inline ExtendedInt padic_valuation(const Rational& x, const Integer& p) {
    require_prime(p);
    if (x.is_zero()) return ExtendedInt::infinity();
    return ExtendedInt(detail::valuation_unchecked(x, p));
}

/// |x|_p = p^(-v_p(x)), with |0|_p = 0.
inline Rational padic_abs(const Rational& x, const Integer& p) {
    auto v = padic_valuation(x, p);
    if (v.is_infinite()) return Rational(0);
    return pow(Rational(p), -v.value());
}

/// Sup norm of an integer vector.
template <class Int>
Int height_inf(std::span<const Int> v) {
    if (v.empty()) throw error(errc::dimension, "height of an empty vector");
    Int best = 0;
    for (const Int& x : v) {
        Int a = x < 0 ? Int(-x) : x;
        if (best < a) best = a;
    }
    return best;
}

template <class Int>
Int height_inf(const std::vector<Int>& v) {
    return height_inf(std::span<const Int>(v));
}

}  // namespace sdioph
