#pragma once

/**
 * @file lattice.hpp
 * @brief The affine matrix A(r_1..r_{d+1}), exact determinants, covolumes
 *        of A Z_S^{d+1}, the determinant lower bounds and the volume
 *        comparison that rules out d+1 independent rationals in D_n.
 */

#include <optional>
#include <sstream>
#include <vector>

#include "sdioph/ball.hpp"

namespace sdioph {

/// The dyadic window B_n (closed bounds).
struct HeightWindow {
    long n = 0;
    HeightMode mode = HeightMode::all_finite;

    Integer lower() const { return ipow(Integer(2), static_cast<unsigned long>(n)); }
    Integer upper() const { return ipow(Integer(2), static_cast<unsigned long>(n + 1)); }

    /// (q, q0) in B_n.
    bool contains(const std::vector<Integer>& q, const Integer& q0) const {
        Integer h;
        if (mode == HeightMode::all_finite) {
            h = ::abs(q0);
            for (const auto& x : q) h = std::max<Integer>(h, ::abs(x));
        } else {
            h = ::abs(q0);
        }
        return lower() <= h && h <= upper();
    }
};

/// p / q with the integer data kept, as needed by the height hypotheses.
struct FractionPoint {
    std::vector<Integer> p;
    Integer q;

    RationalPoint value() const { return RationalPoint::from_integers(p, q); }
    Integer height() const {
        Integer h = ::abs(q);
        for (const auto& x : p) h = std::max<Integer>(h, ::abs(x));
        return h;
    }
};

struct AffineMatrix {
    std::vector<std::vector<Rational>> entries;
    std::vector<RationalPoint> source_points;

    std::size_t size() const { return entries.size(); }
};

namespace detail {

inline std::size_t common_dim(const std::vector<RationalPoint>& points) {
    if (points.empty()) throw error(errc::arity, "no points given");
    std::size_t d = points.front().dim();
    for (const auto& p : points)
        if (p.dim() != d) throw error(errc::dimension, "points have mixed dimensions");
    return d;
}

/// Fraction-free (Bareiss) determinant of an integer matrix.
inline Integer bareiss_det(std::vector<std::vector<Integer>> m) {
    std::size_t n = m.size();
    if (n == 0) return 1;
    Integer prev = 1;
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (m[k][k] == 0) {
            std::size_t swap = k + 1;
            while (swap < n && m[swap][k] == 0) ++swap;
            if (swap == n) return 0;
            std::swap(m[k], m[swap]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j) {
                Integer t = m[i][j] * m[k][k] - m[i][k] * m[k][j];
                mpz_divexact(m[i][j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
            }
        }
        prev = m[k][k];
    }
    return sign * m[n - 1][n - 1];
}

}  // namespace detail

inline AffineMatrix build_A(const std::vector<RationalPoint>& points) {
    std::size_t d = detail::common_dim(points);
    if (points.size() != d + 1)
        throw error(errc::arity, "A needs exactly d+1 = " + std::to_string(d + 1) + " points");
    AffineMatrix A;
    A.source_points = points;
    for (const auto& p : points) {
        std::vector<Rational> row{Rational(1)};
        row.insert(row.end(), p.coords().begin(), p.coords().end());
        A.entries.push_back(std::move(row));
    }
    return A;
}

/// Exact determinant of a square rational matrix: rows are cleared to
/// integers, then eliminated fraction-free.
inline Rational det_exact(const std::vector<std::vector<Rational>>& rows) {
    std::size_t n = rows.size();
    std::vector<std::vector<Integer>> m(n);
    Integer scale = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) throw error(errc::dimension, "matrix is not square");
        Integer lcm = 1;
        for (const auto& x : rows[i]) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), x.den_ref().get_mpz_t());
        for (const auto& x : rows[i]) m[i].push_back(x.numerator() * (lcm / x.denominator()));
        scale *= lcm;
    }
    return Rational(detail::bareiss_det(std::move(m)), scale);
}

inline Rational det_exact(const AffineMatrix& A) { return det_exact(A.entries); }

inline bool affine_independent(const std::vector<RationalPoint>& points) {
    return !det_exact(build_A(points)).is_zero();
}

/// Covolume of A Z_S^{d+1} in Q_{S,inf}^{d+1}: the content of det A over S u {inf}.
inline Rational covolume(const AffineMatrix& A, const PlaceSet& S) {
    Rational det = det_exact(A);
    if (det.is_zero()) throw error(errc::not_a_lattice, "A is singular, A Z_S^{d+1} is not a lattice");
    return content(det, S.with_infinity());
}

// Primitive integer hyperplane c_1 x_1 + ... + c_d x_d = b with the first
// nonzero c_i positive.
struct Hyperplane {
    std::vector<Integer> c;
    Integer b;

    std::size_t dim() const { return c.size(); }

    bool contains(const RationalPoint& x) const {
        Rational s(0);
        for (std::size_t i = 0; i < c.size(); ++i) s += Rational(c[i]) * x[i];
        return s == Rational(b);
    }

    bool axis_aligned() const {
        int nonzero = 0;
        for (const auto& ci : c) nonzero += ci != 0;
        return nonzero == 1;
    }

    /// Coefficient tuple "(c_1,...,c_d,b)".
    std::string str() const {
        std::string out = "(";
        for (const auto& ci : c) out += ci.get_str() + ",";
        return out + b.get_str() + ")";
    }

    static Hyperplane canonical(std::vector<Rational> coeffs, Rational rhs) {
        Integer lcm = rhs.denominator();
        for (const auto& x : coeffs) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), x.den_ref().get_mpz_t());
        Hyperplane h;
        for (const auto& x : coeffs) h.c.push_back(x.numerator() * (lcm / x.denominator()));
        h.b = rhs.numerator() * (lcm / rhs.denominator());
        bool any = false;
        for (const auto& ci : h.c) any = any || ci != 0;
        if (!any) throw error(errc::domain, "hyperplane needs a nonzero normal");
        Integer g = ::abs(h.b);
        for (const auto& ci : h.c) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), ci.get_mpz_t());
        for (auto& ci : h.c) mpz_divexact(ci.get_mpz_t(), ci.get_mpz_t(), g.get_mpz_t());
        mpz_divexact(h.b.get_mpz_t(), h.b.get_mpz_t(), g.get_mpz_t());
        for (const auto& ci : h.c) {
            if (ci == 0) continue;
            if (ci < 0) {
                for (auto& cj : h.c) cj = -cj;
                h.b = -h.b;
            }
            break;
        }
        return h;
    }

    friend bool operator==(const Hyperplane&, const Hyperplane&) = default;
};

namespace detail {

/// Reduced row echelon form in place; returns the pivot columns.
inline std::vector<std::size_t> rref(std::vector<std::vector<Rational>>& m, std::size_t cols) {
    std::vector<std::size_t> pivots;
    std::size_t row = 0;
    for (std::size_t col = 0; col < cols && row < m.size(); ++col) {
        std::size_t sel = row;
        while (sel < m.size() && m[sel][col].is_zero()) ++sel;
        if (sel == m.size()) continue;
        std::swap(m[row], m[sel]);
        Rational inv = m[row][col].inverse();
        for (auto& x : m[row]) x *= inv;
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (i == row || m[i][col].is_zero()) continue;
            Rational f = m[i][col];
            for (std::size_t j = col; j < cols; ++j) m[i][j] -= f * m[row][j];
        }
        pivots.push_back(col);
        ++row;
    }
    return pivots;
}

}  // namespace detail

/// One integral hyperplane through all points when their affine hull is proper.
/// The kernel vector of the first free column of rref[(1, x_i)] is used, so the
/// answer depends only on the span, not on the order of the points.
inline std::optional<Hyperplane> affine_hull_hyperplane(const std::vector<RationalPoint>& points) {
    std::size_t d = detail::common_dim(points);
    std::vector<std::vector<Rational>> m;
    for (const auto& p : points) {
        std::vector<Rational> row{Rational(1)};
        row.insert(row.end(), p.coords().begin(), p.coords().end());
        m.push_back(std::move(row));
    }
    auto pivots = detail::rref(m, d + 1);
    if (pivots.size() == d + 1) return std::nullopt;
    std::vector<bool> is_pivot(d + 1, false);
    for (auto c : pivots) is_pivot[c] = true;
    std::size_t free_col = 0;
    while (is_pivot[free_col]) ++free_col;
    // v_0 + sum v_i x_i = 0 for every point.
    std::vector<Rational> v(d + 1);
    v[free_col] = Rational(1);
    for (std::size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = -m[r][free_col];
    std::vector<Rational> c(v.begin() + 1, v.end());
    return Hyperplane::canonical(std::move(c), -v[0]);
}

enum class BoundStatus { confirmed, violated, hypothesis_failure };

inline const char* status_name(BoundStatus s) {
    switch (s) {
        case BoundStatus::confirmed: return "confirmed";
        case BoundStatus::violated: return "violated";
        case BoundStatus::hypothesis_failure: return "hypothesis-failure";
    }
    return "?";
}

struct DetBoundVerdict {
    HeightMode mode;
    bool hypothesis_open;    // the lemma's own strict height hypothesis
    bool hypothesis_closed;  // every (p_i, q_i) lies in the closed window B_n
    Rational quantity;       // finite content of det A, or the full covolume
    Rational bound;          // 2^(-(d+1)(n+1))
    BoundStatus status;
};

/// Checks prod_{v in S} |det A|_v > 2^(-(d+1)(n+1)) (all-finite, heights
/// 0 < ||(p_i,q_i)|| < 2^(n+1)) or cov(A Z_S^{d+1}) > 2^(-(d+1)(n+1))
/// (with infinity, 2^n < |q_i| < 2^(n+1)).
inline DetBoundVerdict check_det_lower_bound(const std::vector<FractionPoint>& points,
                                             const HeightWindow& window, const PlaceSet& S) {
    if (window.mode != mode_of(S)) throw error(errc::validation, "window mode does not match the place set");
    std::vector<RationalPoint> values;
    for (const auto& p : points) {
        if (p.q == 0) throw error(errc::domain, "zero denominator in a point");
        values.push_back(p.value());
    }
    Rational det = det_exact(build_A(values));
    if (det.is_zero()) throw error(errc::not_a_lattice, "points lie on a hyperplane");

    Integer lo = window.lower(), hi = window.upper();
    DetBoundVerdict v{window.mode, true, true, Rational(0), pow2(-(static_cast<long>(values.front().dim()) + 1) * (window.n + 1)),
                      BoundStatus::confirmed};
    for (const auto& p : points) {
        v.hypothesis_closed = v.hypothesis_closed && window.contains(p.p, p.q);
        if (window.mode == HeightMode::all_finite) {
            Integer h = p.height();
            v.hypothesis_open = v.hypothesis_open && h > 0 && h < hi;
        } else {
            Integer a = ::abs(p.q);
            v.hypothesis_open = v.hypothesis_open && lo < a && a < hi;
        }
    }
    v.quantity = content(det, S);
    if (!v.hypothesis_open)
        v.status = BoundStatus::hypothesis_failure;
    else
        v.status = v.bound < v.quantity ? BoundStatus::confirmed : BoundStatus::violated;
    return v;
}

// Volume comparison between the covolume lower bound and the box that would
// contain a fundamental domain if d+1 independent rationals of B_n sat in D_n.
// All volumes are divided by |det A|_inf, which appears on both sides.
struct VolumeCertificate {
    long d = 0;
    long n = 0;
    std::string places;
    HeightMode mode = HeightMode::all_finite;
    Rational radius;         // r_n as used
    Rational lower_bound;    // 2^(-(d+1)(n+1))
    Rational box_volume;     // exact volume from the snapped radii
    Rational nominal_upper;  // 2^(-(d+2)) 2^(-(d+1)(n+1))
    std::optional<Rational> normalized_covolume;
    bool holds = false;      // lower_bound > box_volume

    std::string to_json() const {
        std::ostringstream os;
        os << "{\"d\":" << d << ",\"n\":" << n << ",\"places\":\"" << places << "\",\"mode\":\""
           << mode_name(mode) << "\",\"radius\":\"" << radius.str() << "\",\"lower_bound\":\""
           << lower_bound.str() << "\",\"box_volume\":\"" << box_volume.str() << "\",\"nominal_upper\":\""
           << nominal_upper.str() << "\"";
        if (normalized_covolume) os << ",\"normalized_covolume\":\"" << normalized_covolume->str() << "\"";
        os << ",\"holds\":" << (holds ? "true" : "false") << "}";
        return os.str();
    }
};

namespace detail {

inline VolumeCertificate certificate_from_ball(long d, long n, const SBall& D) {
    VolumeCertificate c;
    c.d = d;
    c.n = n;
    c.places = D.places().str();
    c.mode = mode_of(D.places());
    c.radius = D.nominal_radius();
    c.lower_bound = pow2(-(d + 1) * (n + 1));
    c.nominal_upper = pow2(-(d + 2)) * c.lower_bound;
    Rational box(1);
    for (std::size_t i = 0; i < D.places().size(); ++i) {
        if (D.places()[i].is_infinite())
            box *= pow(Rational(2 * kRealEnlargement) * D.nominal_radius(), d);
        else
            box *= pow(D.radius_at(i), d);
    }
    c.box_volume = box;
    c.holds = c.box_volume < c.lower_bound;
    return c;
}

}  // namespace detail

/// Parameter-only certificate: D_n has radius r_n snapped at each prime.
inline VolumeCertificate volume_certificate(long d, long n, const PlaceSet& S) {
    auto r = radius_schedule(n, d, S.l());
    SBall D(RationalPoint::zero(static_cast<std::size_t>(d)), r.radius, S);
    return detail::certificate_from_ball(d, n, D);
}

/// Point-level certificate. The points must be d+1 affinely independent
/// rationals with heights in B_n lying in D_n (or in prod D_{n,v} x 6D_{n,inf}),
/// and D_n must not exceed r_n; otherwise a hypothesis-failure is raised.
inline VolumeCertificate volume_contradiction(const std::vector<FractionPoint>& points,
                                              const HeightWindow& window, const PlaceSet& S,
                                              const SBall& D) {
    if (window.mode != mode_of(S)) throw error(errc::validation, "window mode does not match the place set");
    if (!(D.places() == S)) throw error(errc::validation, "ball places differ from S");
    long d = static_cast<long>(D.dim());
    if (points.size() != static_cast<std::size_t>(d + 1))
        throw error(errc::hypothesis_failure, "need exactly d+1 points");
    if (radius_schedule(window.n, d, S.l()).radius < D.nominal_radius())
        throw error(errc::hypothesis_failure, "ball radius exceeds r_n");
    SBall region = S.contains_infinity() ? D.with_real_scale(Rational(kRealEnlargement)) : D;
    std::vector<RationalPoint> values;
    for (const auto& p : points) {
        if (p.q == 0 || p.p.size() != static_cast<std::size_t>(d))
            throw error(errc::hypothesis_failure, "malformed point");
        if (!window.contains(p.p, p.q)) throw error(errc::hypothesis_failure, "height outside B_n");
        values.push_back(p.value());
        if (!region.contains(values.back()))
            throw error(errc::hypothesis_failure, "point " + values.back().str() + " lies outside D_n");
    }
    Rational det = det_exact(build_A(values));
    if (det.is_zero()) throw error(errc::hypothesis_failure, "points are affinely dependent");
    VolumeCertificate c = detail::certificate_from_ball(d, window.n, D);
    Rational finite(1);
    for (const auto& v : S)
        if (v.is_finite()) finite *= abs_at(det, v);
    c.normalized_covolume = finite;
    return c;
}

}  // namespace sdioph
