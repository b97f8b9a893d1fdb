#pragma once

// Exact kernels on machine integers for the hot loops (pair scans, witness
// scans). Every value here is a nonnegative fraction whose numerator and
// denominator divide inputs that already fit in 64 bits, so products fit
// in 128 bits and comparisons are exact.

#include <cstdint>
#include <numeric>

#include "sdioph/exactnum.hpp"

namespace sdioph::detail {

using u128 = unsigned __int128;

struct SmallFrac {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    Rational to_rational() const {
        return Rational(Integer(std::to_string(num)), Integer(std::to_string(den)));
    }
};

inline int compare(SmallFrac a, SmallFrac b) {
    u128 l = static_cast<u128>(a.num) * b.den;
    u128 r = static_cast<u128>(b.num) * a.den;
    return l < r ? -1 : (l > r ? 1 : 0);
}

inline SmallFrac max(SmallFrac a, SmallFrac b) { return compare(a, b) < 0 ? b : a; }

inline std::uint64_t uabs(std::int64_t v) {
    return v < 0 ? static_cast<std::uint64_t>(-(v + 1)) + 1 : static_cast<std::uint64_t>(v);
}

/// Strips p from n; returns the exponent and multiplies `power` by p^exponent.
inline int strip(std::uint64_t& n, std::uint64_t p, std::uint64_t& power) {
    int v = 0;
    while (n % p == 0) {
        n /= p;
        power *= p;
        ++v;
    }
    return v;
}

/// |w / den|_p for w != 0 or 0, den > 0.
inline SmallFrac padic_abs_small(std::int64_t w, std::uint64_t den, std::uint64_t p) {
    if (w == 0) return {0, 1};
    std::uint64_t a = uabs(w), pa = 1, pd = 1;
    strip(a, p, pa);
    strip(den, p, pd);
    // |w/den|_p = p^(v(den) - v(w)) = pd / pa
    std::uint64_t g = std::gcd(pa, pd);
    return {pd / g, pa / g};
}

/// |w / den| at the real place.
inline SmallFrac real_abs_small(std::int64_t w, std::uint64_t den) { return {uabs(w), den}; }

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    u128 r = static_cast<u128>(a) * b;
    if (r >> 63) throw error(errc::search_too_large, "machine-integer kernel overflow");
    return static_cast<std::uint64_t>(r);
}

inline std::int64_t mod_floor(std::int64_t a, std::int64_t m) {
    std::int64_t r = a % m;
    return r < 0 ? r + m : r;
}

/// Inverse of a modulo m (gcd(a, m) = 1), m < 2^62.
inline std::int64_t mod_inverse(std::int64_t a, std::int64_t m) {
    std::int64_t t = 0, new_t = 1, r = m, new_r = mod_floor(a, m);
    while (new_r != 0) {
        std::int64_t q = r / new_r;
        std::int64_t tmp = t - q * new_t;
        t = new_t;
        new_t = tmp;
        tmp = r - q * new_r;
        r = new_r;
        new_r = tmp;
    }
    if (r != 1) throw error(errc::domain, "no modular inverse");
    return mod_floor(t, m);
}

inline std::int64_t mul_mod(std::int64_t a, std::int64_t b, std::int64_t m) {
    __int128 r = static_cast<__int128>(mod_floor(a, m)) * mod_floor(b, m);
    return static_cast<std::int64_t>(r % m);
}

}  // namespace sdioph::detail
