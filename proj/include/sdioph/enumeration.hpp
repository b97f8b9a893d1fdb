#pragma once

/**
 * @file enumeration.hpp
 * @brief Rationals of bounded height in S-adic balls.
 *
 * Covers of digit compacts at the level-n radius, windowed enumeration with
 * congruence pruning (and the naive scan it must agree with), the simplex
 * check on each ball, and the Dirichlet and psi witness searches.
 *
 * Raw pairs are reported with q0 > 0; (q, q0) and (-q, -q0) name the same
 * point and have the same height.
 */

#include <algorithm>
#include <array>
#include <atomic>
#include <limits>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sdioph/ball.hpp"
#include "sdioph/lattice.hpp"
#include "sdioph/measures.hpp"
#include "sdioph/parallel.hpp"
#include "sdioph/psi.hpp"

namespace sdioph {

inline constexpr std::uint64_t kEnumerationGuard = 1000000000ULL;

namespace detail {

inline bool point_less(const RationalPoint& a, const RationalPoint& b) {
    for (std::size_t i = 0; i < a.dim(); ++i) {
        if (a[i] < b[i]) return true;
        if (b[i] < a[i]) return false;
    }
    return false;
}

inline void sort_unique(std::vector<RationalPoint>& pts) {
    std::sort(pts.begin(), pts.end(), point_less);
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
}

/// x = residue (mod modulus); modulus 1 means no condition.
struct Congruence {
    Integer residue = 0;
    Integer modulus = 1;
};

/// Solutions of b x = w (mod M), or nothing.
inline std::optional<Congruence> solve_linear(const Integer& b, const Integer& w, const Integer& M) {
    if (M == 1) return Congruence{};
    Integer g;
    mpz_gcd(g.get_mpz_t(), b.get_mpz_t(), M.get_mpz_t());
    if (!mpz_divisible_p(w.get_mpz_t(), g.get_mpz_t())) return std::nullopt;
    Congruence c;
    c.modulus = M / g;
    if (c.modulus == 1) return c;
    Integer b2 = b / g, inv;
    mpz_fdiv_r(b2.get_mpz_t(), b2.get_mpz_t(), c.modulus.get_mpz_t());
    mpz_invert(inv.get_mpz_t(), b2.get_mpz_t(), c.modulus.get_mpz_t());
    c.residue = (w / g) * inv;
    mpz_fdiv_r(c.residue.get_mpz_t(), c.residue.get_mpz_t(), c.modulus.get_mpz_t());
    return c;
}

/// Combination of two conditions with coprime moduli.
inline Congruence crt(const Congruence& a, const Congruence& b) {
    if (a.modulus == 1) return b;
    if (b.modulus == 1) return a;
    Integer inv, t;
    mpz_invert(inv.get_mpz_t(), a.modulus.get_mpz_t(), b.modulus.get_mpz_t());
    t = (b.residue - a.residue) * inv;
    mpz_fdiv_r(t.get_mpz_t(), t.get_mpz_t(), b.modulus.get_mpz_t());
    Congruence c;
    c.modulus = a.modulus * b.modulus;
    c.residue = a.residue + a.modulus * t;
    mpz_fdiv_r(c.residue.get_mpz_t(), c.residue.get_mpz_t(), c.modulus.get_mpz_t());
    return c;
}

/// Members of the class in [lo, hi].
inline Integer class_count(const Congruence& c, const Integer& lo, const Integer& hi) {
    if (hi < lo) return 0;
    Integer off = c.residue - lo;
    mpz_fdiv_r(off.get_mpz_t(), off.get_mpz_t(), c.modulus.get_mpz_t());
    Integer first = lo + off;
    if (hi < first) return 0;
    return (hi - first) / c.modulus + 1;
}

inline std::vector<Integer> class_members(const Congruence& c, const Integer& lo, const Integer& hi) {
    std::vector<Integer> out;
    if (hi < lo) return out;
    Integer off = c.residue - lo;
    mpz_fdiv_r(off.get_mpz_t(), off.get_mpz_t(), c.modulus.get_mpz_t());
    for (Integer x = lo + off; x <= hi; x += c.modulus) out.push_back(x);
    return out;
}

/// Condition on integers q with |q/q0 - c|_p <= p^-m.
inline std::optional<Congruence> ball_congruence(const Rational& c, const Integer& q0, const Integer& p, long m) {
    long e = m + valuation_of_integer(q0, p) + valuation_of_integer(c.denominator(), p);
    if (e <= 0) return Congruence{};
    return solve_linear(c.denominator(), c.numerator() * q0, ipow(p, static_cast<unsigned long>(e)));
}

/// Integers strictly inside (a, b).
inline std::pair<Integer, Integer> open_integer_range(const Rational& a, const Rational& b) {
    return {floor(a) + 1, ceil(b) - 1};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Cover of a digit compact.

/// The ball choices along one (place, coordinate) axis. At a prime the
/// choices are the allowed digit strings of length `depth`, ordered by their
/// residue mod p^depth; at the real place they are explicit centers.
struct CoverAxis {
    std::size_t place = 0;  // index into the place set
    std::size_t coord = 0;
    std::uint64_t base = 0;            // p, or 0 at the real place
    long depth = 0;
    std::vector<std::uint32_t> digits;  // allowed digits, ascending
    std::vector<Rational> centers;      // real place only

    Integer size() const {
        if (base == 0) return Integer(static_cast<unsigned long>(centers.size()));
        return ipow(Integer(static_cast<unsigned long>(digits.size())), static_cast<unsigned long>(depth));
    }
    bool full() const { return base != 0 && digits.size() == base; }
    Integer modulus() const { return ipow(Integer(static_cast<unsigned long>(base)), static_cast<unsigned long>(depth)); }

    /// Digit string of choice j; digit t is the t-th base-|D| digit of j.
    std::vector<std::uint32_t> string_of(Integer j) const {
        std::vector<std::uint32_t> out;
        for (long t = 0; t < depth; ++t) {
            out.push_back(digits[mpz_fdiv_q_ui(j.get_mpz_t(), j.get_mpz_t(), digits.size())]);
        }
        return out;
    }

    Integer residue_of(const Integer& j) const {
        Integer r = 0, pw = 1;
        for (auto a : string_of(j)) {
            r += pw * static_cast<unsigned long>(a);
            pw *= static_cast<unsigned long>(base);
        }
        return r;
    }

    /// Choice with the given residue, if its digits are allowed.
    std::optional<Integer> choice_of_residue(Integer r) const {
        Integer j = 0, pw = 1;
        for (long t = 0; t < depth; ++t) {
            auto a = static_cast<std::uint32_t>(mpz_fdiv_q_ui(r.get_mpz_t(), r.get_mpz_t(), base));
            auto it = std::lower_bound(digits.begin(), digits.end(), a);
            if (it == digits.end() || *it != a) return std::nullopt;
            j += pw * static_cast<unsigned long>(it - digits.begin());
            pw *= static_cast<unsigned long>(digits.size());
        }
        return j;
    }
};

namespace detail {

inline std::vector<std::uint32_t> positive_digits(const DigitMeasure& m, std::size_t i) {
    std::vector<std::uint32_t> D;
    for (auto a : m.digits(i))
        if (m.weight(i, a).sign() > 0) D.push_back(a);
    return D;
}

/// Least point of coordinate i of the real digit compact that is >= t, when it lies below 1.
inline std::optional<Rational> support_ceiling(const DigitMeasure& m, std::size_t i, const Rational& t) {
    std::vector<std::uint32_t> D = positive_digits(m, i);
    const Rational B(Integer(static_cast<unsigned long>(m.base())));
    const Rational lo_tail = Rational(static_cast<long>(D.front())) / (B - 1);
    const Rational hi_tail = Rational(static_cast<long>(D.back())) / (B - 1);
    Rational val(0), scale(1), s = t;
    std::vector<Rational> seen;
    auto finish = [](const Rational& y) -> std::optional<Rational> {
        if (y < Rational(1)) return y;
        return std::nullopt;
    };
    while (true) {
        if (s <= lo_tail) return finish(val + scale * lo_tail);
        if (hi_tail < s) return std::nullopt;
        // eventually periodic residual: the infinite path has value t
        if (std::find(seen.begin(), seen.end(), s) != seen.end()) return finish(t);
        seen.push_back(s);
        if (seen.size() > 100000) throw error(errc::precision_exhausted, "support ceiling did not close");
        for (auto a : D) {
            Rational next = B * s - Rational(static_cast<long>(a));
            if (next <= hi_tail) {
                scale /= B;
                val += Rational(static_cast<long>(a)) * scale;
                s = next;
                break;
            }
        }
    }
}

}  // namespace detail

/// Disjoint balls at the level-n radius with centers in the compact K. At
/// primes they partition K; at the real place the centers are a maximal
/// 2r-separated set, so the balls tripled there cover K.
class Cover {
public:
    Cover(const ProductMeasure& K, long n, std::size_t max_real_axis = std::size_t{1} << 22)
        : K_(K), places_(K.places()), n_(n), d_(K.dim()) {
        auto sched = radius_schedule(n, static_cast<long>(d_), static_cast<long>(places_.l()));
        radius_ = sched.radius;
        rounded_down_ = sched.rounded_down;
        build(max_real_axis);
    }

    /// A cover at an explicit nominal radius; level() is -1.
    Cover(const ProductMeasure& K, const Rational& radius, std::size_t max_real_axis = std::size_t{1} << 22)
        : K_(K), places_(K.places()), n_(-1), d_(K.dim()), radius_(radius) {
        if (radius.sign() <= 0) throw error(errc::domain, "cover radius must be positive");
        build(max_real_axis);
    }

    const PlaceSet& places() const { return places_; }
    long level() const { return n_; }
    std::size_t dim() const { return d_; }
    const Rational& radius() const { return radius_; }
    bool rounded_down() const { return rounded_down_; }
    const std::vector<CoverAxis>& axes() const { return axes_; }

    Integer size() const {
        Integer out = 1;
        for (const auto& ax : axes_) out *= ax.size();
        return out;
    }

    Rational center(std::size_t a, const Integer& j) const {
        const CoverAxis& ax = axes_[a];
        if (j < 0 || !(j < ax.size())) throw error(errc::domain, "cover choice out of range");
        if (ax.base == 0) return ax.centers[j.get_ui()];
        return K_.component(places_[ax.place]).support_point(ax.coord, ax.string_of(j));
    }

    /// Ball from one choice per axis; axes run place-major.
    SBall ball(const std::vector<Integer>& choice) const {
        if (choice.size() != axes_.size()) throw error(errc::arity, "one choice per cover axis");
        std::vector<RationalPoint> centers;
        for (std::size_t v = 0; v < places_.size(); ++v) {
            std::vector<Rational> c(d_);
            for (std::size_t i = 0; i < d_; ++i) c[i] = center(v * d_ + i, choice[v * d_ + i]);
            centers.emplace_back(std::move(c));
        }
        return SBall::product(std::move(centers), radius_, places_);
    }

    /// Mixed-radix index, last axis fastest.
    std::vector<Integer> choice_of(Integer flat) const {
        if (flat < 0 || !(flat < size())) throw error(errc::domain, "cover index out of range");
        std::vector<Integer> out(axes_.size());
        for (std::size_t a = axes_.size(); a-- > 0;) {
            Integer len = axes_[a].size();
            mpz_fdiv_qr(flat.get_mpz_t(), out[a].get_mpz_t(), flat.get_mpz_t(), len.get_mpz_t());
        }
        return out;
    }

    SBall ball(const Integer& flat) const { return ball(choice_of(flat)); }

    /// The choices of the ball containing x, for covers without a real place.
    std::optional<std::vector<Integer>> locate(const RationalPoint& x) const {
        if (places_.contains_infinity()) throw error(errc::invalid_place, "locate needs finite places only");
        if (x.dim() != d_) throw error(errc::dimension, "point dimension differs from the cover");
        std::vector<Integer> out;
        for (const auto& ax : axes_) {
            const Rational& c = x[ax.coord];
            const Integer& p = places_[ax.place].prime();
            if (mpz_divisible_p(c.den_ref().get_mpz_t(), p.get_mpz_t())) return std::nullopt;
            Integer M = ax.modulus(), r = 0;
            if (M > 1) {
                Integer inv;
                mpz_invert(inv.get_mpz_t(), c.den_ref().get_mpz_t(), M.get_mpz_t());
                r = c.numerator() * inv;
                mpz_fdiv_r(r.get_mpz_t(), r.get_mpz_t(), M.get_mpz_t());
            }
            auto j = ax.choice_of_residue(r);
            if (!j) return std::nullopt;
            out.push_back(*j);
        }
        return out;
    }

private:
    void build(std::size_t max_real_axis) {
        for (std::size_t v = 0; v < places_.size(); ++v) {
            const DigitMeasure& m = K_.component(places_[v]);
            for (std::size_t i = 0; i < d_; ++i) {
                CoverAxis ax;
                ax.place = v;
                ax.coord = i;
                ax.digits = detail::positive_digits(m, i);
                if (places_[v].is_infinite()) {
                    auto c = detail::support_ceiling(m, i, Rational(0));
                    while (c) {
                        if (ax.centers.size() >= max_real_axis)
                            throw error(errc::search_too_large, "real cover axis too long");
                        ax.centers.push_back(*c);
                        c = detail::support_ceiling(m, i, *c + Rational(2) * radius_);
                    }
                } else {
                    ax.base = m.base();
                    ax.depth = std::max(0L, snap(radius_, places_[v].prime()).exponent);
                }
                axes_.push_back(std::move(ax));
            }
        }
    }

    ProductMeasure K_;
    PlaceSet places_;
    long n_;
    std::size_t d_;
    Rational radius_;
    bool rounded_down_ = false;
    std::vector<CoverAxis> axes_;
};

inline std::vector<SBall> cover_compact(const ProductMeasure& K, long n, std::size_t max_balls = 1000000) {
    Cover cover(K, n);
    Integer count = cover.size();
    if (count > static_cast<unsigned long>(max_balls))
        throw error(errc::search_too_large, "cover has " + count.get_str() + " balls");
    std::vector<SBall> out;
    for (Integer i = 0; i < count; ++i) out.push_back(cover.ball(i));
    return out;
}

// ---------------------------------------------------------------------------
// Windowed enumeration.

struct EnumeratedPair {
    std::vector<Integer> q;
    Integer q0;           // > 0
    RationalPoint point;  // q / q0 in lowest terms
};

namespace detail {

inline void check_consistent(const SBall& ball, const HeightWindow& window, const PlaceSet& S) {
    if (!(ball.places() == S)) throw error(errc::validation, "ball places differ from S");
    if (window.mode != mode_of(S)) throw error(errc::validation, "height window mode does not match S");
    if (window.n < 0) throw error(errc::domain, "window level must be >= 0");
}

inline std::pair<Integer, Integer> q0_range(const HeightWindow& w) {
    Integer lo = w.mode == HeightMode::with_infinity ? w.lower() : Integer(1);
    return {lo, w.upper()};
}

struct CoordPlan {
    Congruence cls;
    Integer lo, hi;
};

/// Per-coordinate candidate sets for one q0, or nothing when some coordinate is empty.
inline std::optional<std::vector<CoordPlan>> plan_q0(const SBall& ball, const HeightWindow& w, const Integer& q0) {
    std::vector<CoordPlan> plan(ball.dim());
    const PlaceSet& S = ball.places();
    for (std::size_t i = 0; i < ball.dim(); ++i) {
        CoordPlan& cp = plan[i];
        if (w.mode == HeightMode::all_finite) {
            cp.lo = -w.upper();
            cp.hi = w.upper();
        }
        bool bounded = w.mode == HeightMode::all_finite;
        for (std::size_t v = 0; v < S.size(); ++v) {
            const Rational& c = ball.center_at(v)[i];
            if (S[v].is_infinite()) {
                const Rational& R = ball.radius_at(v);
                auto [lo, hi] = open_integer_range(Rational(q0) * (c - R), Rational(q0) * (c + R));
                cp.lo = bounded ? std::max(cp.lo, lo) : lo;
                cp.hi = bounded ? std::min(cp.hi, hi) : hi;
                bounded = true;
            } else {
                auto cong = ball_congruence(c, q0, S[v].prime(), ball.exponent_at(v));
                if (!cong) return std::nullopt;
                cp.cls = crt(cp.cls, *cong);
            }
        }
        if (!bounded) throw error(errc::domain, "unbounded coordinate range");
        if (cp.hi < cp.lo) return std::nullopt;
    }
    return plan;
}

template <class F>
void for_each_product(const std::vector<std::vector<Integer>>& lists, F&& f) {
    for (const auto& l : lists)
        if (l.empty()) return;
    std::vector<std::size_t> idx(lists.size(), 0);
    std::vector<Integer> cur(lists.size());
    while (true) {
        for (std::size_t i = 0; i < lists.size(); ++i) cur[i] = lists[i][idx[i]];
        f(cur);
        std::size_t k = lists.size();
        while (k > 0) {
            --k;
            if (++idx[k] < lists[k].size()) break;
            idx[k] = 0;
            if (k == 0) return;
        }
    }
}

}  // namespace detail

/// Every (q, q0), q0 > 0, in the window with q/q0 in the ball. Congruences at
/// the primes and the real interval fix the candidates for each q0.
inline std::vector<EnumeratedPair> enumerate_rationals(const SBall& ball, const HeightWindow& window, const PlaceSet& S,
                                                       std::uint64_t max_candidates = kEnumerationGuard) {
    detail::check_consistent(ball, window, S);
    auto [q0_lo, q0_hi] = detail::q0_range(window);
    const std::size_t count = Integer(q0_hi - q0_lo + 1).get_ui();

    std::vector<std::optional<std::vector<detail::CoordPlan>>> plans(count);
    Integer total = 0;
    for (std::size_t k = 0; k < count; ++k) {
        Integer q0 = q0_lo + static_cast<unsigned long>(k);
        plans[k] = detail::plan_q0(ball, window, q0);
        if (!plans[k]) continue;
        Integer prod = 1;
        for (const auto& cp : *plans[k]) prod *= detail::class_count(cp.cls, cp.lo, cp.hi);
        total += prod;
        if (total > static_cast<unsigned long>(max_candidates))
            throw error(errc::search_too_large, "enumeration exceeds " + std::to_string(max_candidates) + " candidates");
    }

    std::vector<std::vector<EnumeratedPair>> shards(count);
    parallel_for(count, [&](std::size_t k) {
        if (!plans[k]) return;
        Integer q0 = q0_lo + static_cast<unsigned long>(k);
        std::vector<std::vector<Integer>> lists;
        for (const auto& cp : *plans[k]) lists.push_back(detail::class_members(cp.cls, cp.lo, cp.hi));
        detail::for_each_product(lists, [&](const std::vector<Integer>& q) {
            if (!window.contains(q, q0)) return;
            shards[k].push_back({q, q0, RationalPoint::from_integers(q, q0)});
        });
    });
    std::vector<EnumeratedPair> out;
    for (auto& s : shards)
        for (auto& e : s) out.push_back(std::move(e));
    return out;
}

/// Full scan of the window box with a direct membership test; the reference for enumerate_rationals.
inline std::vector<EnumeratedPair> enumerate_rationals_naive(const SBall& ball, const HeightWindow& window,
                                                             const PlaceSet& S, std::uint64_t max_candidates = 10000000) {
    detail::check_consistent(ball, window, S);
    auto [q0_lo, q0_hi] = detail::q0_range(window);
    std::vector<EnumeratedPair> out;
    Integer scanned = 0;
    for (Integer q0 = q0_lo; q0 <= q0_hi; ++q0) {
        std::vector<std::vector<Integer>> lists(ball.dim());
        for (std::size_t i = 0; i < ball.dim(); ++i) {
            Integer lo = -window.upper(), hi = window.upper();
            if (window.mode == HeightMode::with_infinity) {
                const Rational& c = ball.center_at(Place::infinite())[i];
                const Rational& R = ball.radius_at(Place::infinite());
                lo = floor(Rational(q0) * (c - R));
                hi = ceil(Rational(q0) * (c + R));
            }
            for (Integer x = lo; x <= hi; ++x) lists[i].push_back(x);
        }
        Integer box = 1;
        for (const auto& l : lists) box *= static_cast<unsigned long>(l.size());
        scanned += box;
        if (scanned > static_cast<unsigned long>(max_candidates))
            throw error(errc::search_too_large, "naive scan exceeds " + std::to_string(max_candidates) + " candidates");
        detail::for_each_product(lists, [&](const std::vector<Integer>& q) {
            if (!window.contains(q, q0)) return;
            RationalPoint x = RationalPoint::from_integers(q, q0);
            if (in_ball(x, ball, S)) out.push_back({q, q0, std::move(x)});
        });
    }
    return out;
}

inline std::vector<RationalPoint> distinct_points(const std::vector<EnumeratedPair>& pairs) {
    std::vector<RationalPoint> pts;
    for (const auto& e : pairs) pts.push_back(e.point);
    detail::sort_unique(pts);
    return pts;
}

// ---------------------------------------------------------------------------
// Simplex check.

struct SimplexVerdict {
    bool pass = true;
    std::size_t pairs = 0;
    std::vector<RationalPoint> points;       // distinct, sorted
    std::optional<Hyperplane> hyperplane;    // through every point, when there is one
    std::vector<RationalPoint> certificate;  // d+1 affinely independent points on failure
};

/// Verdict for a set of distinct points in dimension d.
inline SimplexVerdict check_points_on_hyperplane(std::vector<RationalPoint> points) {
    SimplexVerdict v;
    detail::sort_unique(points);
    v.points = std::move(points);
    if (v.points.empty()) return v;
    v.hyperplane = affine_hull_hyperplane(v.points);
    if (v.hyperplane) return v;
    v.pass = false;
    // greedy: keep a point when it raises the affine rank
    const std::size_t d = v.points.front().dim();
    std::vector<std::vector<Rational>> rows;
    for (const auto& p : v.points) {
        std::vector<Rational> row{Rational(1)};
        row.insert(row.end(), p.coords().begin(), p.coords().end());
        auto trial = rows;
        trial.push_back(row);
        auto m = trial;
        if (detail::rref(m, d + 1).size() == trial.size()) {
            rows = std::move(trial);
            v.certificate.push_back(p);
            if (v.certificate.size() == d + 1) break;
        }
    }
    return v;
}

inline SimplexVerdict verify_simplex_lemma(const SBall& ball, const HeightWindow& window, const PlaceSet& S) {
    auto pairs = enumerate_rationals(ball, window, S);
    SimplexVerdict v = check_points_on_hyperplane(distinct_points(pairs));
    v.pairs = pairs.size();
    return v;
}

// ---------------------------------------------------------------------------
// Campaign over a whole cover.

struct OccupiedBall {
    std::vector<Integer> choice;  // cover axis choices
    std::size_t points = 0;
};

struct SimplexCampaignResult {
    long d = 0;
    long n = 0;
    std::string places;
    Rational radius;
    bool rounded_down = false;
    Integer balls = 0;            // size of the cover
    std::size_t points = 0;       // distinct window rationals lying in some ball
    std::size_t occupied = 0;     // balls holding at least one of them
    std::size_t nontrivial = 0;   // balls holding more than d, where the hull test has content
    std::size_t max_points = 0;
    std::size_t failures = 0;
    std::vector<std::vector<RationalPoint>> certificates;  // first few failures
    std::vector<OccupiedBall> samples;                     // every stride-th occupied ball

    bool pass() const { return failures == 0; }
};

namespace detail {

/// Rank of integer vectors by fraction-free elimination with gcd reduction.
class IntRank {
public:
    explicit IntRank(std::size_t width) : width_(width) {}

    /// Adds v; true when the rank grew.
    bool add(std::vector<__int128> v) {
        for (const auto& [piv, row] : rows_) {
            if (v[piv] == 0) continue;
            __int128 a = row[piv], b = v[piv];
            for (std::size_t j = 0; j < width_; ++j) v[j] = v[j] * a - row[j] * b;
            normalize(v);
        }
        for (std::size_t j = 0; j < width_; ++j)
            if (v[j] != 0) {
                rows_.emplace_back(j, std::move(v));
                return true;
            }
        return false;
    }
    std::size_t rank() const { return rows_.size(); }

private:
    static __int128 abs128(__int128 x) { return x < 0 ? -x : x; }
    static void normalize(std::vector<__int128>& v) {
        __int128 g = 0;
        for (auto x : v) {
            __int128 a = abs128(x), b = g;
            while (b) {
                __int128 t = a % b;
                a = b;
                b = t;
            }
            g = a;
        }
        if (g > 1)
            for (auto& x : v) x /= g;
    }
    std::size_t width_;
    std::vector<std::pair<std::size_t, std::vector<__int128>>> rows_;
};

struct FastAxis {
    std::uint64_t base;
    long depth;
    std::uint64_t modulus;                 // base^depth
    std::vector<std::int32_t> index;       // digit -> position in the allowed list, -1 if absent
    std::uint64_t count;                   // allowed digits
    bool full;
};

inline std::uint64_t mulmod64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t inverse64(std::uint64_t a, std::uint64_t m) {
    Integer r, A(static_cast<unsigned long>(a)), M(static_cast<unsigned long>(m));
    mpz_invert(r.get_mpz_t(), A.get_mpz_t(), M.get_mpz_t());
    return r.get_ui();
}

}  // namespace detail

/// verify_simplex_lemma over every ball of the cover of K at level n, for S
/// without the real place. Only balls holding a window rational need work:
/// each such rational is located in its ball by residues, balls are grouped,
/// and every ball with more than d points goes through verify_simplex_lemma.
/// Balls with at most d points pass by definition.
inline SimplexCampaignResult simplex_campaign(const ProductMeasure& K, long n, std::size_t sample_stride = 0,
                                              std::uint64_t max_candidates = kEnumerationGuard) {
    const PlaceSet& S = K.places();
    if (S.contains_infinity()) throw error(errc::invalid_place, "simplex_campaign handles finite places only");
    const std::size_t d = K.dim();
    Cover cover(K, n);
    SimplexCampaignResult res;
    res.d = static_cast<long>(d);
    res.n = n;
    res.places = S.str();
    res.radius = cover.radius();
    res.rounded_down = cover.rounded_down();
    res.balls = cover.size();
    if (n > 28) throw error(errc::search_too_large, "level too large for the campaign");
    const std::int64_t U = std::int64_t{1} << (n + 1);
    {
        double box = std::pow(2.0 * static_cast<double>(U) + 1, static_cast<double>(d)) * static_cast<double>(U);
        if (box > static_cast<double>(max_candidates)) throw error(errc::search_too_large, "campaign window too large");
    }

    std::vector<detail::FastAxis> axes;
    std::vector<unsigned __int128> radix;
    unsigned __int128 span = 1;
    for (const auto& ax : cover.axes()) {
        if (ax.modulus() > Integer("4294967296")) throw error(errc::search_too_large, "cover modulus too large");
        detail::FastAxis fa{ax.base, ax.depth, ax.modulus().get_ui(), std::vector<std::int32_t>(ax.base, -1),
                            ax.digits.size(), ax.full()};
        for (std::size_t t = 0; t < ax.digits.size(); ++t) fa.index[ax.digits[t]] = static_cast<std::int32_t>(t);
        radix.push_back(span);
        if (ax.size() > Integer("18446744073709551615")) throw error(errc::search_too_large, "cover too large");
        span *= ax.size().get_ui();
        if (span > (static_cast<unsigned __int128>(1) << 120)) throw error(errc::search_too_large, "cover too large");
        axes.push_back(std::move(fa));
    }
    // key = sum position_a * radix_a, last axis slowest here; decode accordingly
    std::vector<std::uint64_t> primes;
    for (const auto& v : S) primes.push_back(v.prime().get_ui());

    auto key_of = [&](std::int64_t q0, const std::int64_t* q, const std::vector<std::uint64_t>& inv,
                      unsigned __int128& key) {
        key = 0;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const auto& fa = axes[a];
            std::size_t coord = a % d;
            std::uint64_t M = fa.modulus;
            std::uint64_t r = 0;
            if (M > 1) {
                std::int64_t qm = q[coord] % static_cast<std::int64_t>(M);
                if (qm < 0) qm += static_cast<std::int64_t>(M);
                r = detail::mulmod64(static_cast<std::uint64_t>(qm), inv[a], M);
            }
            std::uint64_t pos = 0;
            if (fa.full) {
                pos = r;
            } else {
                std::uint64_t pw = 1;
                for (long t = 0; t < fa.depth; ++t) {
                    std::int32_t idx = fa.index[r % fa.base];
                    if (idx < 0) return false;
                    pos += static_cast<std::uint64_t>(idx) * pw;
                    pw *= fa.count;
                    r /= fa.base;
                }
            }
            key += static_cast<unsigned __int128>(pos) * radix[a];
        }
        (void)q0;
        return true;
    };

    // Visits every primitive (q, q0), q0 in [1, U] prime to S and |q_i| <= U:
    // the window rationals whose coordinates are integral at every place of S.
    auto visit = [&](std::int64_t q0, auto&& f) {
        for (auto p : primes)
            if (q0 % static_cast<std::int64_t>(p) == 0) return;
        std::vector<std::uint64_t> inv(axes.size(), 0);
        for (std::size_t a = 0; a < axes.size(); ++a)
            if (axes[a].modulus > 1)
                inv[a] = detail::inverse64(static_cast<std::uint64_t>(q0) % axes[a].modulus, axes[a].modulus);
        std::vector<std::int64_t> q(d, -U);
        while (true) {
            std::int64_t g = q0;
            for (auto x : q) g = std::gcd(g, x);
            if (g == 1) {
                unsigned __int128 key;
                if (key_of(q0, q.data(), inv, key)) f(key, q);
            }
            std::size_t k = d;
            while (k > 0) {
                --k;
                if (++q[k] <= U) break;
                q[k] = -U;
                if (k == 0) return;
            }
        }
    };

    std::vector<std::vector<unsigned __int128>> shard_keys(static_cast<std::size_t>(U));
    parallel_for(static_cast<std::size_t>(U), [&](std::size_t k) {
        visit(static_cast<std::int64_t>(k) + 1,
              [&](unsigned __int128 key, const std::vector<std::int64_t>&) { shard_keys[k].push_back(key); });
    });
    std::vector<unsigned __int128> keys;
    for (auto& s : shard_keys) {
        keys.insert(keys.end(), s.begin(), s.end());
        s.clear();
        s.shrink_to_fit();
    }
    std::sort(keys.begin(), keys.end());
    res.points = keys.size();

    auto decode = [&](unsigned __int128 key) {
        std::vector<Integer> choice(axes.size());
        for (std::size_t a = axes.size(); a-- > 0;) {
            choice[a] = Integer(static_cast<unsigned long>(key / radix[a]));
            key %= radix[a];
        }
        return choice;
    };

    std::vector<unsigned __int128> busy;  // keys with more than d points
    for (std::size_t i = 0; i < keys.size();) {
        std::size_t j = i;
        while (j < keys.size() && keys[j] == keys[i]) ++j;
        std::size_t cnt = j - i;
        if (sample_stride && res.occupied % sample_stride == 0) res.samples.push_back({decode(keys[i]), cnt});
        ++res.occupied;
        res.max_points = std::max(res.max_points, cnt);
        if (cnt > d) busy.push_back(keys[i]);
        i = j;
    }
    res.nontrivial = busy.size();
    keys.clear();
    keys.shrink_to_fit();
    if (busy.empty()) return res;

    // Points of the busy balls, for the rank test.
    std::vector<std::vector<std::vector<std::int64_t>>> members(busy.size());
    for (std::int64_t q0 = 1; q0 <= U; ++q0)
        visit(q0, [&](unsigned __int128 key, const std::vector<std::int64_t>& q) {
            auto it = std::lower_bound(busy.begin(), busy.end(), key);
            if (it == busy.end() || *it != key) return;
            std::vector<std::int64_t> row{q0};
            row.insert(row.end(), q.begin(), q.end());
            members[static_cast<std::size_t>(it - busy.begin())].push_back(std::move(row));
        });
    HeightWindow window{n, HeightMode::all_finite};
    for (std::size_t b = 0; b < busy.size(); ++b) {
        detail::IntRank rank(d + 1);
        for (const auto& row : members[b]) {
            std::vector<__int128> v(row.begin(), row.end());
            rank.add(std::move(v));
            if (rank.rank() == d + 1) break;
        }
        // the library check on the ball itself decides; the rank test must agree
        SimplexVerdict v = verify_simplex_lemma(cover.ball(decode(busy[b])), window, S);
        if ((rank.rank() == d + 1) == v.pass)
            throw error(errc::validation, "campaign rank test disagrees with verify_simplex_lemma");
        if (!v.pass) {
            ++res.failures;
            if (res.certificates.size() < 8) res.certificates.push_back(v.certificate);
        }
    }
    return res;
}

/// The same campaign by explicit iteration over the cover, for any S; the real
/// factor of each ball is enlarged to kRealEnlargement times the radius.
inline SimplexCampaignResult simplex_campaign_explicit(const ProductMeasure& K, long n, std::size_t max_balls = 1000000) {
    const PlaceSet& S = K.places();
    Cover cover(K, n);
    SimplexCampaignResult res;
    res.d = static_cast<long>(K.dim());
    res.n = n;
    res.places = S.str();
    res.radius = cover.radius();
    res.rounded_down = cover.rounded_down();
    res.balls = cover.size();
    if (res.balls > static_cast<unsigned long>(max_balls))
        throw error(errc::search_too_large, "cover has " + res.balls.get_str() + " balls");
    const std::size_t count = res.balls.get_ui();
    HeightWindow window{n, mode_of(S)};
    std::vector<SimplexVerdict> verdicts(count);
    parallel_for(count, [&](std::size_t k) {
        SBall b = cover.ball(Integer(static_cast<unsigned long>(k)));
        if (S.contains_infinity()) b = b.with_real_scale(Rational(kRealEnlargement));
        verdicts[k] = verify_simplex_lemma(b, window, S);
    });
    for (const auto& v : verdicts) {
        if (v.points.empty()) continue;
        ++res.occupied;
        res.points += v.points.size();
        res.max_points = std::max(res.max_points, v.points.size());
        if (v.points.size() > K.dim()) ++res.nontrivial;
        if (!v.pass) {
            ++res.failures;
            if (res.certificates.size() < 8) res.certificates.push_back(v.certificate);
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Witnesses.

struct Witness {
    std::vector<Integer> q;
    Integer q0;
    long n = -1;  // window level; -1 for a Dirichlet search
    Rational lhs;  // exact, or an upper bound at `precision` digits
    std::optional<Rational> rhs;
    std::string rhs_str;
    std::size_t precision = 0;  // digits of a sampled point; 0 when x is exact

    Integer height() const {
        Integer h = ::abs(q0);
        for (const auto& x : q) h = std::max<Integer>(h, ::abs(x));
        return h;
    }

    std::string to_json() const {
        std::ostringstream os;
        os << "{\"q\":[";
        for (std::size_t i = 0; i < q.size(); ++i) os << (i ? "," : "") << '"' << q[i].get_str() << '"';
        os << "],\"q0\":\"" << q0.get_str() << "\",\"n\":" << n << ",\"lhs\":\"" << lhs.str() << "\",\"rhs\":\""
           << rhs_str << "\"";
        if (precision) os << ",\"precision\":" << precision;
        os << "}";
        return os.str();
    }
};

enum class WitnessSelection {
    smallest_lhs,  // least lhs, ties by scan order
    first_found    // first in scan order: height, then q0, then q
};

struct DirichletOptions {
    DirichletExponent exponent = DirichletExponent::reciprocal_d;
    WitnessSelection selection = WitnessSelection::smallest_lhs;
};

namespace detail {

inline constexpr long kNever = std::numeric_limits<long>::max() / 4;

/// Least integer v with p^(-v l) <= psi(H), decided exactly; kNever when psi(H) = 0.
inline long least_depth(const PsiFunction& psi, const Integer& p, long l, const Integer& H) {
    Float t = psi.value(H);
    if (t == 0) return kNever;
    Float y = -boost::multiprecision::log(t) / (static_cast<double>(l) * boost::multiprecision::log(to_float(p)));
    long v = static_cast<long>(std::ceil(static_cast<double>(y)));
    auto holds = [&](long k) { return psi.bound_holds(pow(Rational(p), -k * l), H); };
    while (!holds(v)) ++v;
    while (holds(v - 1)) --v;
    return v;
}

/// A rational >= x for x >= 0.
inline Rational rational_above(const Float& x) {
    Float scaled = boost::multiprecision::ceil(x * Float(std::ldexp(1.0, 80))) + 1;
    std::string digits = scaled.str(0, std::ios_base::fixed);
    digits = digits.substr(0, digits.find('.'));
    return Rational(Integer(digits), ipow(Integer(2), 80));
}

inline bool scan_less(const Witness& a, const Witness& b) {
    Integer ha = a.height(), hb = b.height();
    if (ha != hb) return ha < hb;
    if (a.q0 != b.q0) return a.q0 < b.q0;
    return a.q < b.q;
}

}  // namespace detail

/// Searches q0 >= 1 and |q_i| <= T for ||q0 x + q||_S^l below the Dirichlet bound.
inline std::optional<Witness> dirichlet_witness(const RationalPoint& x, const Integer& T, const PlaceSet& S,
                                                const DirichletOptions& opt = {}) {
    if (T < 1) throw error(errc::domain, "T must be >= 1");
    if (Rational(1) < snorm(x, S)) throw error(errc::domain, "dirichlet_witness needs ||x||_S <= 1");
    const std::size_t d = x.dim();
    const long l = static_cast<long>(S.l());
    const PsiFunction bound = dirichlet_bound(static_cast<long>(d), S.contains_infinity(), opt.exponent);
    const std::size_t count = T.get_ui();

    std::vector<std::optional<Witness>> best(count);
    auto better = [&](const Witness& a, const std::optional<Witness>& b) {
        if (!b) return true;
        if (opt.selection == WitnessSelection::smallest_lhs && a.lhs != b->lhs) return a.lhs < b->lhs;
        return detail::scan_less(a, *b);
    };
    parallel_for(count, [&](std::size_t k) {
        Integer q0 = Integer(static_cast<unsigned long>(k)) + 1;
        // every witness has H >= q0, hence lhs <= psi(q0) <= 1
        std::vector<std::vector<Integer>> lists(d);
        for (std::size_t i = 0; i < d; ++i) {
            const Rational& xi = x[i];
            detail::Congruence cls;
            Integer lo = -T, hi = T;
            for (const auto& v : S) {
                if (v.is_infinite()) {
                    // |q0 x_i + q_i| <= 1
                    lo = std::max(lo, ceil(-Rational(q0) * xi - 1));
                    hi = std::min(hi, floor(-Rational(q0) * xi + 1));
                    continue;
                }
                long kappa = std::max(0L, detail::least_depth(bound, v.prime(), l, q0));
                long e = kappa + detail::valuation_of_integer(xi.denominator(), v.prime());
                if (e <= 0) continue;
                // q_i w = -q0 u (mod p^e) with x_i = u / w
                auto c = detail::solve_linear(xi.denominator(), -q0 * xi.numerator(),
                                              ipow(v.prime(), static_cast<unsigned long>(e)));
                if (!c) return;
                cls = detail::crt(cls, *c);
            }
            lists[i] = detail::class_members(cls, lo, hi);
        }
        detail::for_each_product(lists, [&](const std::vector<Integer>& q) {
            Witness w;
            w.q = q;
            w.q0 = q0;
            Integer H = w.height();
            std::vector<Rational> y(d);
            for (std::size_t i = 0; i < d; ++i) y[i] = Rational(q0) * x[i] + Rational(q[i]);
            w.lhs = pow(snorm(RationalPoint(y), S), l);
            if (!bound.bound_holds(w.lhs, H)) return;
            w.rhs = bound.exact_value(H);
            w.rhs_str = bound.bound_str(H);
            if (better(w, best[k])) best[k] = std::move(w);
        });
    });
    std::optional<Witness> out;
    for (auto& b : best)
        if (b && better(*b, out)) out = std::move(b);
    return out;
}

/// Thresholds shared by every point scanned at one level: for each height H
/// in [1, 2^(n+1)], the least valuation accepted at each prime and a radius
/// for the real place.
struct WitnessPlan {
    long n = 0;
    HeightWindow window;
    long l = 1;
    std::vector<std::vector<long>> need;  // [place][H - 1]; unused at the real place
    std::vector<Rational> rho;            // [H - 1]: >= psi(H)^(1/l)
    std::vector<bool> zero;               // [H - 1]: psi(H) = 0
    unsigned threads = 0;                 // workers over q0; 0 for the default

    Integer q0_lo() const { return window.mode == HeightMode::with_infinity ? window.lower() : Integer(1); }
    Integer q0_hi() const { return window.upper(); }
    /// Least height of a window pair with this q0.
    std::size_t hmin(const Integer& q0) const {
        return (window.mode == HeightMode::all_finite ? std::max(q0, window.lower()) : q0).get_ui();
    }
};

inline WitnessPlan make_witness_plan(const PsiFunction& psi, long n, const PlaceSet& S) {
    if (n < 0) throw error(errc::domain, "window level must be >= 0");
    if (n > 40) throw error(errc::search_too_large, "window level above 40");
    WitnessPlan plan;
    plan.n = n;
    plan.window = HeightWindow{n, mode_of(S)};
    plan.l = static_cast<long>(S.l());
    const std::size_t top = plan.window.upper().get_ui();
    const std::size_t first = plan.window.mode == HeightMode::all_finite ? plan.window.lower().get_ui() : 1;
    plan.need.assign(S.size(), std::vector<long>(top, detail::kNever));
    plan.rho.assign(top, Rational(0));
    plan.zero.assign(top, false);
    // heights below 2^n never occur in the all-finite window
    for (std::size_t h = first; h <= top; ++h) {
        Integer H(static_cast<unsigned long>(h));
        Float t = psi.value(H);
        plan.zero[h - 1] = t == 0;
        if (!plan.zero[h - 1])
            plan.rho[h - 1] = detail::rational_above(boost::multiprecision::pow(t, Float(1) / Float(plan.l)));
        for (std::size_t v = 0; v < S.size(); ++v)
            if (S[v].is_finite()) plan.need[v][h - 1] = detail::least_depth(psi, S[v].prime(), plan.l, H);
    }
    return plan;
}

namespace detail {

// The point x as seen at each place of S: exact rationals, or truncations.
// At a prime the truncation t is an integer with x = t (mod p^N); at the real
// place x lies in [t, t + b^-N].
struct PointView {
    std::vector<std::vector<Rational>> value;  // [place][coord]
    std::vector<Rational> err;                 // real place: b^-N, 0 when exact
    std::vector<long> digits;                  // N per place, 0 when exact
};

inline PointView exact_view(const RationalPoint& x, const PlaceSet& S) {
    PointView v;
    for (std::size_t k = 0; k < S.size(); ++k) {
        v.value.push_back(x.coords());
        v.err.emplace_back(0);
        v.digits.push_back(0);
    }
    return v;
}

inline PointView digit_view(const DigitPoint& x, const ProductMeasure& mu, const PlaceSet& S) {
    PointView v;
    for (const auto& place : S) {
        std::size_t c = 0;
        while (c < mu.size() && !(mu[c].place() == place)) ++c;
        if (c == mu.size()) throw error(errc::invalid_place, "measure has no component at " + place.str());
        v.value.push_back(x.truncated(mu, c).coords());
        Rational B(Integer(static_cast<unsigned long>(mu[c].base())));
        v.err.push_back(place.is_infinite() ? pow(B, -static_cast<long>(x.precision())) : Rational(0));
        v.digits.push_back(static_cast<long>(x.precision()));
    }
    return v;
}

enum class Decision { yes, no, deeper };

struct ScanOutcome {
    std::vector<Witness> witnesses;
    long need = 0;  // digits needed for an undecided case, 0 when complete
};

// Valuation data of x_i + q_i/q0 at a prime: `v` exact, or only v >= N.
struct Val {
    long v;
    bool exact;
};

inline Val coord_valuation(const PointView& pv, std::size_t k, std::size_t i, const Integer& q, const Integer& q0,
                           long vq0, const Integer& p) {
    const Rational& x = pv.value[k][i];
    Integer y = x.numerator() * q0 + q * x.denominator();
    if (pv.digits[k] == 0) {
        if (y == 0) return {kNever, true};
        return {valuation_of_integer(y, p) - valuation_of_integer(x.denominator(), p) - vq0, true};
    }
    // x = t (mod p^N): q0 x + q is known modulo p^(N + v_p(q0))
    long N = pv.digits[k];
    if (y == 0) return {N, false};
    long vy = valuation_of_integer(y, p);
    if (vy >= N + vq0) return {N, false};
    return {vy - vq0, true};
}

inline ScanOutcome scan_witnesses(const PointView& pv, const PsiFunction& psi, const WitnessPlan& plan,
                                  const PlaceSet& S, std::size_t d, std::uint64_t max_candidates) {
    const HeightWindow& window = plan.window;
    const long l = plan.l;
    const Integer q0_lo = plan.q0_lo();
    const std::size_t count = Integer(plan.q0_hi() - q0_lo + 1).get_ui();
    std::vector<ScanOutcome> shards(count);
    std::atomic<std::uint64_t> scanned{0};
    long cur_digits = 0;
    for (auto dg : pv.digits) cur_digits = std::max(cur_digits, dg);

    parallel_for(count, [&](std::size_t k) {
        ScanOutcome& out = shards[k];
        Integer q0 = q0_lo + static_cast<unsigned long>(k);
        // psi is non-increasing and every pair with this q0 has H >= hmin
        const std::size_t h0 = plan.hmin(q0);
        std::vector<long> vq0(S.size(), 0);
        for (std::size_t v = 0; v < S.size(); ++v)
            if (S[v].is_finite()) vq0[v] = valuation_of_integer(q0, S[v].prime());

        std::vector<std::vector<Integer>> lists(d);
        for (std::size_t i = 0; i < d; ++i) {
            Congruence cls;
            bool bounded = window.mode == HeightMode::all_finite;
            Integer lo = -window.upper(), hi = window.upper();
            for (std::size_t v = 0; v < S.size(); ++v) {
                const Rational& xi = pv.value[v][i];
                if (S[v].is_infinite()) {
                    const Rational& rho = plan.rho[h0 - 1];
                    Integer a = ceil(Rational(q0) * (-xi - pv.err[v] - rho));
                    Integer b = floor(Rational(q0) * (-xi + rho));
                    lo = bounded ? std::max(lo, a) : a;
                    hi = bounded ? std::min(hi, b) : b;
                    bounded = true;
                    continue;
                }
                const Integer& p = S[v].prime();
                long kappa = plan.need[v][h0 - 1];
                if (kappa == kNever) {
                    if (pv.digits[v] == 0) {
                        // lhs = 0 forces q_i = -q0 x_i
                        Rational target = -Rational(q0) * xi;
                        if (!target.is_integer()) return;
                        lo = bounded ? std::max(lo, target.numerator()) : target.numerator();
                        hi = bounded ? std::min(hi, target.numerator()) : target.numerator();
                        bounded = true;
                        continue;
                    }
                    kappa = pv.digits[v];
                } else if (pv.digits[v] && kappa > pv.digits[v]) {
                    // the residue of x modulo p^kappa is not known yet
                    out.need = std::max(out.need, kappa);
                    return;
                }
                // v_p(q0 x_i + q_i) >= kappa + v_p(q0), with x_i = u / w
                long e = kappa + vq0[v] + valuation_of_integer(xi.denominator(), p);
                if (e <= 0) continue;
                auto c = solve_linear(xi.denominator(), -q0 * xi.numerator(), ipow(p, static_cast<unsigned long>(e)));
                if (!c) return;
                cls = crt(cls, *c);
            }
            if (!bounded) throw error(errc::domain, "unbounded witness search");
            if (class_count(cls, lo, hi) > static_cast<unsigned long>(max_candidates))
                throw error(errc::search_too_large, "witness search exceeds the candidate guard");
            lists[i] = class_members(cls, lo, hi);
            if (lists[i].empty()) return;
        }
        std::uint64_t prod = 1;
        for (const auto& li : lists) prod *= li.size();
        if ((scanned += prod) > max_candidates)
            throw error(errc::search_too_large, "witness search exceeds the candidate guard");

        for_each_product(lists, [&](const std::vector<Integer>& q) {
            if (!window.contains(q, q0)) return;
            Integer H = q0;
            if (window.mode == HeightMode::all_finite)
                for (const auto& x : q) H = std::max<Integer>(H, ::abs(x));
            const std::size_t h = H.get_ui();
            Decision dec = Decision::yes;
            Rational norm_hi(0);  // max over places of an upper bound on the place norm
            for (std::size_t v = 0; v < S.size() && dec != Decision::no; ++v) {
                if (S[v].is_infinite()) {
                    Rational lo(0), hi(0);
                    for (std::size_t i = 0; i < d; ++i) {
                        Rational y = pv.value[v][i] + Rational(q[i], q0);
                        Rational a = y, b = y + pv.err[v];
                        Rational ilo = (a.sign() <= 0 && b.sign() >= 0) ? Rational(0) : min(abs(a), abs(b));
                        lo = max(lo, ilo);
                        hi = max(hi, max(abs(a), abs(b)));
                    }
                    norm_hi = max(norm_hi, hi);
                    if (lo == hi) {
                        if (!psi.bound_holds(pow(hi, l), H)) dec = Decision::no;
                    } else {
                        if (psi.bound_holds(pow(hi, l), H)) continue;
                        if (!psi.bound_holds(pow(lo, l), H)) dec = Decision::no;
                        else dec = Decision::deeper;
                    }
                    continue;
                }
                const Integer& p = S[v].prime();
                long vmin = kNever;
                bool unknown = false;
                for (std::size_t i = 0; i < d; ++i) {
                    Val cv = coord_valuation(pv, v, i, q[i], q0, vq0[v], p);
                    if (cv.exact) vmin = std::min(vmin, cv.v);
                    else unknown = true;
                }
                long N = pv.digits[v];
                bool is_exact = !unknown || vmin < N;
                long vlo = unknown ? std::min(vmin, N) : vmin;
                if (vlo != kNever) norm_hi = max(norm_hi, pow(Rational(p), -vlo));
                long need = plan.need[v][h - 1];
                if (is_exact) {
                    if (vmin < need) dec = Decision::no;
                } else if (N < need) {
                    dec = Decision::deeper;
                }
            }
            if (dec == Decision::no) return;
            if (dec == Decision::deeper) {
                out.need = std::max(out.need, cur_digits + 16);
                return;
            }
            Witness w;
            w.q = q;
            w.q0 = q0;
            w.n = plan.n;
            w.lhs = pow(norm_hi, l);
            w.rhs = psi.exact_value(H);
            w.rhs_str = psi.bound_str(H);
            w.precision = static_cast<std::size_t>(cur_digits);
            out.witnesses.push_back(std::move(w));
        });
    }, plan.threads ? plan.threads : thread_count());
    ScanOutcome all;
    for (auto& s : shards) {
        all.need = std::max(all.need, s.need);
        for (auto& w : s.witnesses) all.witnesses.push_back(std::move(w));
    }
    std::sort(all.witnesses.begin(), all.witnesses.end(), scan_less);
    return all;
}

}  // namespace detail

/// Every (q, q0) in B_n, q0 > 0, with ||x + q/q0||_S^l <= psi(H), where H is
/// the height of (q, q0) for finite S and |q0| when the real place is in S.
inline std::vector<Witness> psi_witnesses(const RationalPoint& x, const PsiFunction& psi, const WitnessPlan& plan,
                                          const PlaceSet& S, std::uint64_t max_candidates = kEnumerationGuard) {
    auto out = detail::scan_witnesses(detail::exact_view(x, S), psi, plan, S, x.dim(), max_candidates);
    return std::move(out.witnesses);
}

inline std::vector<Witness> psi_witnesses(const RationalPoint& x, const PsiFunction& psi, long n, const PlaceSet& S,
                                          std::uint64_t max_candidates = kEnumerationGuard) {
    return psi_witnesses(x, psi, make_witness_plan(psi, n, S), S, max_candidates);
}

/// The same for a sampled point; digits are drawn deeper until every
/// comparison is decided, up to max_precision. For such points lhs is an
/// upper bound at the precision recorded in the witness.
inline std::vector<Witness> psi_witnesses(DigitPoint& x, const ProductMeasure& mu, const PsiFunction& psi,
                                          const WitnessPlan& plan, const PlaceSet& S, std::size_t max_precision = 256,
                                          std::uint64_t max_candidates = kEnumerationGuard) {
    while (true) {
        auto out = detail::scan_witnesses(detail::digit_view(x, mu, S), psi, plan, S, mu.dim(), max_candidates);
        if (!out.need) return std::move(out.witnesses);
        auto want = static_cast<std::size_t>(out.need);
        if (want > max_precision)
            throw error(errc::precision_exhausted, "point " + std::to_string(x.index) + " needs more than " +
                                                       std::to_string(max_precision) + " digits");
        deepen(x, mu, std::max(want, x.precision() + 8));
    }
}

inline std::vector<Witness> psi_witnesses(DigitPoint& x, const ProductMeasure& mu, const PsiFunction& psi, long n,
                                          const PlaceSet& S, std::size_t max_precision = 256) {
    return psi_witnesses(x, mu, psi, make_witness_plan(psi, n, S), S, max_precision);
}

}  // namespace sdioph
