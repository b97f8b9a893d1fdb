#pragma once

/**
 * @file places.hpp
 * @brief Places of Q, ordered place sets S, S-norms and content.
 *
 * Rational points are stored once and evaluated at each place on demand,
 * i.e. they live in Q_S^d through the diagonal embedding.
 */

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "sdioph/exactnum.hpp"

namespace sdioph {

class Place {
public:
    static Place finite(const Integer& p) {
        require_prime(p);
        return Place(p);
    }
    static Place finite(long p) { return finite(Integer(p)); }
    static Place infinite() { return Place(); }

    /// "inf" / "∞" or a prime.
    static Place parse(std::string_view text) {
        if (text == "inf" || text == "infty" || text == "oo" || text == "∞") return infinite();
        for (char c : text)
            if (c < '0' || c > '9' || text.empty())
                throw error(errc::parse, "malformed place '" + std::string(text) + "'");
        if (text.empty()) throw error(errc::parse, "empty place");
        return finite(Integer(std::string(text), 10));
    }

    bool is_infinite() const { return infinite_; }
    bool is_finite() const { return !infinite_; }
    const Integer& prime() const {
        if (infinite_) throw error(errc::invalid_place, "the real place has no prime");
        return prime_;
    }
    unsigned long prime_ui() const { return prime().get_ui(); }

    std::string str() const { return infinite_ ? "inf" : prime_.get_str(); }

    friend bool operator==(const Place& a, const Place& b) {
        return a.infinite_ == b.infinite_ && (a.infinite_ || a.prime_ == b.prime_);
    }
    // Primes ascending, the real place last.
    friend std::strong_ordering operator<=>(const Place& a, const Place& b) {
        if (a.infinite_ || b.infinite_) return a.infinite_ <=> b.infinite_;
        int c = cmp(a.prime_, b.prime_);
        return c < 0 ? std::strong_ordering::less
               : c > 0 ? std::strong_ordering::greater
                       : std::strong_ordering::equal;
    }

private:
    Place() : infinite_(true) {}
    explicit Place(const Integer& p) : prime_(p), infinite_(false) {}

    Integer prime_;
    bool infinite_;
};

/// |x|_v for a single place.
inline Rational abs_at(const Rational& x, const Place& v) {
    if (v.is_infinite()) return x.abs();
    if (x.is_zero()) return Rational(0);
    return pow(Rational(v.prime()), -detail::valuation_unchecked(x, v.prime()));
}

class PlaceSet {
public:
    explicit PlaceSet(std::vector<Place> places) : places_(std::move(places)) {
        if (places_.empty()) throw error(errc::invalid_place, "place set must be nonempty");
        std::sort(places_.begin(), places_.end());
        if (std::adjacent_find(places_.begin(), places_.end()) != places_.end())
            throw error(errc::invalid_place, "place set has a repeated place");
    }

    PlaceSet(std::initializer_list<long> primes, bool with_infinity = false)
        : PlaceSet(build(primes, with_infinity)) {}

    /// "2,3" or "2,3,inf".
    static PlaceSet parse(std::string_view text) {
        std::vector<Place> out;
        std::size_t start = 0;
        while (start <= text.size()) {
            auto comma = text.find(',', start);
            auto token = text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                             : comma - start);
            while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
            while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
            out.push_back(Place::parse(token));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        return PlaceSet(std::move(out));
    }

    std::size_t size() const { return places_.size(); }
    long l() const { return static_cast<long>(places_.size()); }
    bool contains_infinity() const { return places_.back().is_infinite(); }
    bool all_finite() const { return !contains_infinity(); }

    const Place& operator[](std::size_t i) const { return places_[i]; }
    auto begin() const { return places_.begin(); }
    auto end() const { return places_.end(); }

    std::vector<Place> finite_places() const {
        std::vector<Place> out;
        for (const auto& v : places_)
            if (v.is_finite()) out.push_back(v);
        return out;
    }

    /// S with the real place appended when missing.
    PlaceSet with_infinity() const {
        if (contains_infinity()) return *this;
        auto copy = places_;
        copy.push_back(Place::infinite());
        return PlaceSet(std::move(copy));
    }

    std::string str() const {
        std::string out;
        for (const auto& v : places_) {
            if (!out.empty()) out += ',';
            out += v.str();
        }
        return out;
    }

    friend bool operator==(const PlaceSet&, const PlaceSet&) = default;

private:
    static std::vector<Place> build(std::initializer_list<long> primes, bool with_infinity) {
        std::vector<Place> out;
        for (long p : primes) out.push_back(Place::finite(p));
        if (with_infinity) out.push_back(Place::infinite());
        return out;
    }

    std::vector<Place> places_;
};

/// Which height a window constrains: the full vector (all-finite S) or the
/// denominator alone (real place in S).
enum class HeightMode { all_finite, with_infinity };

inline HeightMode mode_of(const PlaceSet& S) {
    return S.contains_infinity() ? HeightMode::with_infinity : HeightMode::all_finite;
}

inline const char* mode_name(HeightMode m) {
    return m == HeightMode::all_finite ? "all-finite" : "with-infinity";
}

class RationalPoint {
public:
    RationalPoint(std::initializer_list<Rational> coords) : RationalPoint(std::vector<Rational>(coords)) {}
    explicit RationalPoint(std::vector<Rational> coords) : coords_(std::move(coords)) {
        if (coords_.empty()) throw error(errc::dimension, "a point needs d >= 1 coordinates");
    }

    /// q / q0 coordinatewise.
    static RationalPoint from_integers(const std::vector<Integer>& q, const Integer& q0) {
        std::vector<Rational> c;
        c.reserve(q.size());
        for (const auto& qi : q) c.emplace_back(qi, q0);
        return RationalPoint(std::move(c));
    }

    static RationalPoint zero(std::size_t d) { return RationalPoint(std::vector<Rational>(d)); }

    /// "(1/2,3)" or "1/2,3".
    static RationalPoint parse(std::string_view text) {
        if (!text.empty() && text.front() == '(') text.remove_prefix(1);
        if (!text.empty() && text.back() == ')') text.remove_suffix(1);
        std::vector<Rational> c;
        std::size_t start = 0;
        while (true) {
            auto comma = text.find(',', start);
            c.push_back(Rational::parse(text.substr(start, comma == std::string_view::npos
                                                               ? std::string_view::npos
                                                               : comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        return RationalPoint(std::move(c));
    }

    std::size_t dim() const { return coords_.size(); }
    const Rational& operator[](std::size_t i) const { return coords_[i]; }
    const std::vector<Rational>& coords() const { return coords_; }

    RationalPoint operator-(const RationalPoint& o) const { return zip(o, [](auto& a, auto& b) { return a - b; }); }
    RationalPoint operator+(const RationalPoint& o) const { return zip(o, [](auto& a, auto& b) { return a + b; }); }
    RationalPoint operator-() const {
        std::vector<Rational> c;
        for (const auto& x : coords_) c.push_back(-x);
        return RationalPoint(std::move(c));
    }

    std::string str() const {
        std::string out = "(";
        for (std::size_t i = 0; i < coords_.size(); ++i) {
            if (i) out += ',';
            out += coords_[i].str();
        }
        return out + ")";
    }

    friend bool operator==(const RationalPoint&, const RationalPoint&) = default;
    friend auto operator<=>(const RationalPoint& a, const RationalPoint& b) { return a.coords_ <=> b.coords_; }

private:
    template <class F>
    RationalPoint zip(const RationalPoint& o, F f) const {
        if (o.dim() != dim()) throw error(errc::dimension, "mixed point dimensions");
        std::vector<Rational> c;
        c.reserve(dim());
        for (std::size_t i = 0; i < dim(); ++i) c.push_back(f(coords_[i], o.coords_[i]));
        return RationalPoint(std::move(c));
    }

    std::vector<Rational> coords_;
};

/// Sup norm of the embedded point at one place.
inline Rational norm_at(const RationalPoint& x, const Place& v) {
    Rational best(0);
    for (const auto& c : x.coords()) best = max(best, abs_at(c, v));
    return best;
}

/// ||x||_S = max over v in S of ||x_v||_v.
inline Rational snorm(const RationalPoint& x, const PlaceSet& S) {
    Rational best(0);
    for (const auto& v : S) best = max(best, norm_at(x, v));
    return best;
}

inline Rational content(const Rational& x, const PlaceSet& P) {
    Rational out(1);
    for (const auto& v : P) out *= abs_at(x, v);
    return out;
}

inline Rational content(const RationalPoint& x, const PlaceSet& P) {
    Rational out(1);
    for (const auto& v : P) out *= norm_at(x, v);
    return out;
}

namespace detail {

/// Distinct prime factors of |n| by trial division.
inline std::vector<Integer> prime_support(Integer n) {
    std::vector<Integer> out;
    if (n < 0) n = -n;
    if (n <= 1) return out;
    for (Integer f = 2; f * f <= n; f += (f == 2 ? 1 : 2)) {
        if (mpz_divisible_p(n.get_mpz_t(), f.get_mpz_t())) {
            out.push_back(f);
            strip_factor(n, f);
        }
    }
    if (n > 1) out.push_back(n);
    return out;
}

}  // namespace detail

/// |x|_inf * prod over primes p | num*den of |x|_p == 1.
inline bool product_formula_check(const Rational& x) {
    if (x.is_zero()) throw error(errc::domain, "product formula is undefined at 0");
    std::vector<Integer> primes = detail::prime_support(x.numerator());
    for (auto& p : detail::prime_support(x.denominator())) primes.push_back(p);
    Rational prod = x.abs();
    for (const auto& p : primes) prod *= pow(Rational(p), -detail::valuation_unchecked(x, p));
    return prod == Rational(1);
}

}  // namespace sdioph
