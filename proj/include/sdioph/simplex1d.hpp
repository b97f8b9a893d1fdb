#pragma once

/**
 * @file simplex1d.hpp
 * @brief Separation of rationals of comparable height in Q_S.
 *
 * Two distinct rationals in the same dyadic height class k are at S-distance
 * |a - b|_S^l > 2^(-(2k+4)) when S is all-finite, and > 2^(-(2k+2)) when the
 * real place is in S (there only denominators are constrained). The exhaustive
 * scan below runs on machine integers and converts to Rational at the end.
 */

#include <algorithm>
#include <bit>
#include <numeric>
#include <optional>

#include "sdioph/parallel.hpp"
#include "sdioph/places.hpp"
#include "sdioph/small_exact.hpp"

namespace sdioph {

struct HeightClass {
    long k = 0;
    HeightMode mode = HeightMode::all_finite;

    HeightClass(long k_, HeightMode mode_) : k(k_), mode(mode_) {
        if (k < 0) throw error(errc::domain, "height class needs k >= 0");
    }

    /// Height of the reduced representation: max(|m|, n) or n.
    static Integer height(const Rational& x, HeightMode mode) {
        if (mode == HeightMode::with_infinity) return x.denominator();
        return std::max<Integer>(::abs(x.numerator()), x.denominator());
    }

    /// 2^k <= h < 2^(k+1).
    bool contains_height(const Integer& h) const {
        return ipow(Integer(2), static_cast<unsigned long>(k)) <= h &&
               h < ipow(Integer(2), static_cast<unsigned long>(k + 1));
    }

    bool contains(const Rational& x) const { return contains_height(height(x, mode)); }
};

inline Rational separation_lower_bound(long k, const PlaceSet& S) {
    if (k < 0) throw error(errc::domain, "k must be nonnegative");
    return S.contains_infinity() ? pow2(-(2 * k + 2)) : pow2(-(2 * k + 4));
}

struct PairVerdict {
    bool a_in_class = false;
    bool b_in_class = false;
    Rational distance;  // |a - b|_S^l
    Rational bound;
    bool exceeds = false;

    bool hypotheses_hold() const { return a_in_class && b_in_class; }
};

inline PairVerdict check_pair(const Rational& a, const Rational& b, long k, const PlaceSet& S) {
    if (a == b) throw error(errc::degenerate_pair, "check_pair needs two distinct rationals");
    HeightClass cls(k, mode_of(S));
    PairVerdict v;
    v.a_in_class = cls.contains(a);
    v.b_in_class = cls.contains(b);
    v.distance = pow(snorm(RationalPoint{a - b}, S), S.l());
    v.bound = separation_lower_bound(k, S);
    v.exceeds = v.bound < v.distance;
    return v;
}

/// Which rationals count as members of the height class in the exhaustive scan.
enum class Representation {
    reduced,  // the lowest-terms pair (m, n) itself satisfies the height window
    any       // some pair (g m, g n), g >= 1, satisfies it
};

struct SeparationResult {
    Rational minimum;  // min |a - b|_S^l
    Rational a;
    Rational b;
    Rational bound;
    bool exceeds = false;
    std::size_t candidates = 0;
};

namespace detail {

struct Cand {
    std::int64_t m;
    std::int64_t n;  // > 0
};

inline std::vector<Cand> height_class_candidates(long k, HeightMode mode, std::int64_t numerator_bound,
                                                 Representation rep) {
    const std::int64_t lo = std::int64_t{1} << k, hi = std::int64_t{1} << (k + 1);
    std::vector<Cand> out;
    auto window_hit = [&](std::int64_t h) {
        if (rep == Representation::reduced) return lo <= h && h < hi;
        return h < hi;  // some multiple g*h falls in [lo, hi) iff h < hi
    };
    if (mode == HeightMode::all_finite) {
        for (std::int64_t n = 1; n < hi; ++n)
            for (std::int64_t m = -(hi - 1); m < hi; ++m) {
                if (std::gcd(m, n) != 1) continue;
                if (window_hit(std::max(m < 0 ? -m : m, n))) out.push_back({m, n});
            }
    } else {
        for (std::int64_t n = 1; n < hi; ++n) {
            if (!window_hit(n)) continue;
            // The numerator cap applies to the representation that meets the
            // window; the smallest such multiplier keeps the most numerators.
            std::int64_t g = 1;
            if (rep == Representation::any) {
                g = (lo + n - 1) / n;
                if (g * n >= hi) continue;
            }
            std::int64_t cap = numerator_bound / g;
            for (std::int64_t m = -cap; m <= cap; ++m)
                if (std::gcd(m, n) == 1) out.push_back({m, n});
        }
    }
    return out;
}

struct PlaceKernel {
    std::uint64_t p = 0;  // 0 for the real place
};

inline SmallFrac pair_norm(const Cand& a, const Cand& b, const std::vector<PlaceKernel>& places) {
    std::int64_t w = a.m * b.n - b.m * a.n;
    std::uint64_t den = static_cast<std::uint64_t>(a.n) * static_cast<std::uint64_t>(b.n);
    SmallFrac best{0, 1};
    for (const auto& pk : places) {
        SmallFrac v;
        if (pk.p == 0) {
            v = real_abs_small(w, den);
        } else if (pk.p == 2) {
            std::uint64_t aw = uabs(w);
            int vw = std::countr_zero(aw), vd = std::countr_zero(den);
            v = vd >= vw ? SmallFrac{std::uint64_t{1} << (vd - vw), 1} : SmallFrac{1, std::uint64_t{1} << (vw - vd)};
        } else {
            v = padic_abs_small(w, den, pk.p);
        }
        best = max(best, v);
    }
    return best;
}

}  // namespace detail

/// Exhaustive minimum of |a - b|_S^l over distinct members of height class k.
/// With the real place in S, numerators are restricted to [-bound, bound].
inline SeparationResult min_separation_bruteforce(long k, const PlaceSet& S, const Integer& numerator_bound,
                                                  Representation rep = Representation::reduced) {
    if (k < 0 || k > 8) throw error(errc::search_too_large, "min_separation_bruteforce needs 0 <= k <= 8");
    if (numerator_bound < ipow(Integer(2), static_cast<unsigned long>(k + 1)))
        throw error(errc::domain, "numerator_bound must be at least 2^(k+1)");
    if (numerator_bound > ipow(Integer(2), 40)) throw error(errc::search_too_large, "numerator_bound above 2^40");
    for (const auto& v : S)
        if (v.is_finite() && v.prime() > ipow(Integer(2), 62)) throw error(errc::domain, "prime too large for the scan");

    const HeightMode mode = mode_of(S);
    auto cands = detail::height_class_candidates(k, mode, numerator_bound.get_si(), rep);
    if (cands.size() < 2) throw error(errc::empty_window, "height class has fewer than two rationals");

    std::vector<detail::PlaceKernel> kernels;
    for (const auto& v : S) kernels.push_back({v.is_infinite() ? 0 : v.prime().get_ui()});

    const bool prune = S.contains_infinity();
    if (prune)
        std::sort(cands.begin(), cands.end(), [](const detail::Cand& x, const detail::Cand& y) {
            return static_cast<__int128>(x.m) * y.n < static_cast<__int128>(y.m) * x.n;
        });

    struct Local {
        detail::SmallFrac norm{1, 0};  // +infinity
        std::size_t j = 0;
        bool found = false;
    };
    std::vector<Local> best(cands.size());
    parallel_for(cands.size(), [&](std::size_t i) {
        Local& loc = best[i];
        for (std::size_t j = i + 1; j < cands.size(); ++j) {
            if (prune && loc.found) {
                // the real distance grows with j and bounds the S-norm from below
                std::int64_t w = cands[j].m * cands[i].n - cands[i].m * cands[j].n;
                detail::SmallFrac real = detail::real_abs_small(w, static_cast<std::uint64_t>(cands[i].n) *
                                                                       static_cast<std::uint64_t>(cands[j].n));
                if (detail::compare(real, loc.norm) > 0) break;
            }
            detail::SmallFrac v = detail::pair_norm(cands[i], cands[j], kernels);
            if (!loc.found || detail::compare(v, loc.norm) < 0) {
                loc = {v, j, true};
            }
        }
    });

    std::size_t bi = 0;
    bool any = false;
    for (std::size_t i = 0; i < best.size(); ++i) {
        if (!best[i].found) continue;
        if (!any || detail::compare(best[i].norm, best[bi].norm) < 0) {
            bi = i;
            any = true;
        }
    }
    SeparationResult r;
    const auto& ca = cands[bi];
    const auto& cb = cands[best[bi].j];
    r.a = Rational(Integer(static_cast<long>(ca.m)), Integer(static_cast<long>(ca.n)));
    r.b = Rational(Integer(static_cast<long>(cb.m)), Integer(static_cast<long>(cb.n)));
    r.minimum = pow(best[bi].norm.to_rational(), S.l());
    r.bound = separation_lower_bound(k, S);
    r.exceeds = r.bound < r.minimum;
    r.candidates = cands.size();
    return r;
}

inline Integer default_numerator_bound(long k) { return 4 * ipow(Integer(2), static_cast<unsigned long>(k + 1)); }

}  // namespace sdioph
