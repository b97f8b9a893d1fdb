#pragma once

/**
 * @file ball.hpp
 * @brief S-adic balls and the level-n radius schedule.
 *
 * A ball is a product over v in S of sup-norm balls around one rational
 * center. At a prime p only radii p^(-m) are realized, so the nominal
 * radius is snapped down; balls there are closed. At the real place the
 * ball is open and its radius is nominal * real_scale (real_scale enlarges
 * the real factor to 3D_n or 6D_n where needed). A ball in a product of
 * several places may have a different center at each place.
 */

#include <vector>

#include "sdioph/places.hpp"

namespace sdioph {

/// Enlargement of the real factor of D_n in the simplex region when inf is in S.
inline constexpr long kRealEnlargement = 6;
/// Enlargement of the real factor in the covering of K.
inline constexpr long kCoverEnlargement = 3;

struct RadiusSchedule {
    Rational radius;
    bool rounded_down = false;
};

/// r_n = (1/6) 2^(-(d+2)/(dl)) 2^(-(d+1)(n+1)/(dl)); a non-integral total
/// exponent is rounded up, i.e. the radius is rounded down to (1/6) 2^(-k).
inline RadiusSchedule radius_schedule(long n, long d, long l) {
    if (n < 0 || d < 1 || l < 1) throw error(errc::domain, "radius_schedule needs n >= 0, d >= 1, l >= 1");
    Rational exponent(Integer((d + 2) + (d + 1) * (n + 1)), Integer(d * l));
    Integer k = ceil(exponent);
    return {Rational(1, 6) * pow2(-k.get_si()), !exponent.is_integer()};
}

struct SnappedRadius {
    long exponent;  // m with radius = p^(-m)
    Rational value;
};

/// p^(-m) with p^(-m) <= r < p^(-m+1).
inline SnappedRadius snap(const Rational& r, const Integer& p) {
    if (r.sign() <= 0) throw error(errc::domain, "radius must be positive");
    long m = 0;
    Rational pw(1);
    Rational P(p);
    if (pw <= r) {
        while (pw * P <= r) {
            pw *= P;
            --m;
        }
    } else {
        while (pw > r) {
            pw /= P;
            ++m;
        }
    }
    return {m, pw};
}

inline Rational snap_radius(const Rational& r, const Integer& p) {
    require_prime(p);
    return snap(r, p).value;
}

class SBall {
public:
    SBall(RationalPoint center, Rational nominal_radius, PlaceSet places, Rational real_scale = Rational(1))
        : center_(std::move(center)),
          nominal_(std::move(nominal_radius)),
          places_(std::move(places)),
          real_scale_(std::move(real_scale)) {
        if (nominal_.sign() <= 0) throw error(errc::domain, "ball radius must be positive");
        if (real_scale_.sign() <= 0) throw error(errc::domain, "real scale must be positive");
        centers_.assign(places_.size(), center_);
        for (const auto& v : places_) {
            if (v.is_infinite()) {
                radii_.push_back(nominal_ * real_scale_);
                exponents_.push_back(0);
            } else {
                auto s = snap(nominal_, v.prime());
                radii_.push_back(s.value);
                exponents_.push_back(s.exponent);
            }
        }
    }

    /// One center per place of `places`, in the same order.
    static SBall product(std::vector<RationalPoint> centers, Rational nominal_radius, PlaceSet places,
                         Rational real_scale = Rational(1)) {
        if (centers.size() != places.size()) throw error(errc::arity, "need one center per place");
        for (const auto& c : centers)
            if (c.dim() != centers.front().dim()) throw error(errc::dimension, "centers differ in dimension");
        SBall b(centers.front(), std::move(nominal_radius), std::move(places), std::move(real_scale));
        b.centers_ = std::move(centers);
        return b;
    }

    /// Center at the first place; the only center unless the ball was built by product().
    const RationalPoint& center() const { return center_; }
    const RationalPoint& center_at(std::size_t i) const { return centers_[i]; }
    const RationalPoint& center_at(const Place& v) const { return centers_[index_of(v)]; }
    bool diagonal() const {
        for (const auto& c : centers_)
            if (!(c == center_)) return false;
        return true;
    }
    const Rational& nominal_radius() const { return nominal_; }
    const PlaceSet& places() const { return places_; }
    const Rational& real_scale() const { return real_scale_; }
    std::size_t dim() const { return center_.dim(); }

    /// Snapped radius at the i-th place of places().
    const Rational& radius_at(std::size_t i) const { return radii_[i]; }
    /// m with radius p^(-m) at the i-th (finite) place.
    long exponent_at(std::size_t i) const { return exponents_[i]; }

    const Rational& radius_at(const Place& v) const { return radii_[index_of(v)]; }

    std::size_t index_of(const Place& v) const {
        for (std::size_t i = 0; i < places_.size(); ++i)
            if (places_[i] == v) return i;
        throw error(errc::invalid_place, "place " + v.str() + " is not part of the ball");
    }

    SBall with_real_scale(const Rational& s) const { return product(centers_, nominal_, places_, s); }

    bool contains(const RationalPoint& x) const {
        if (x.dim() != dim()) throw error(errc::dimension, "point and ball dimensions differ");
        for (std::size_t i = 0; i < places_.size(); ++i) {
            Rational dist = norm_at(x - centers_[i], places_[i]);
            if (places_[i].is_infinite() ? !(dist < radii_[i]) : radii_[i] < dist) return false;
        }
        return true;
    }

private:
    RationalPoint center_;
    std::vector<RationalPoint> centers_;
    Rational nominal_;
    PlaceSet places_;
    Rational real_scale_;
    std::vector<Rational> radii_;
    std::vector<long> exponents_;
};

inline bool in_ball(const RationalPoint& x, const SBall& ball) { return ball.contains(x); }

/// Membership tested only at the places of S (all must belong to the ball).
inline bool in_ball(const RationalPoint& x, const SBall& ball, const PlaceSet& S) {
    if (x.dim() != ball.dim()) throw error(errc::dimension, "point and ball dimensions differ");
    for (const auto& v : S) {
        std::size_t i = ball.index_of(v);
        Rational dist = norm_at(x - ball.center_at(i), v);
        if (v.is_infinite() ? !(dist < ball.radius_at(i)) : ball.radius_at(i) < dist) return false;
    }
    return true;
}

}  // namespace sdioph
