#pragma once

/**
 * @file measures.hpp
 * @brief Missing-digit self-similar measures on Z_p^d and [0,1)^d.
 *
 * A coordinate of a point of Z_p is sum a_j p^j; a coordinate in [0,1) is
 * sum a_j b^-(j+1). Digits are independent across positions and coordinates
 * with the configured weights, so every cylinder has an exact rational mass
 * and the real distribution function is an exact rational at rational points.
 *
 * Grammar (components separated by '|'):
 *   p:3 digits:0,2 d:1
 *   inf:3 digits:0,2;0,1,2 weights:1/2,1/2;1/3,1/3,1/3 d:2
 * "digits" and "weights" take one list for all coordinates or one list per
 * coordinate separated by ';'. Missing digits means all of 0..base-1; missing
 * weights means uniform. "inf" alone is the real place with base 2.
 */

#include <cmath>
#include <map>
#include <random>

#include "sdioph/ball.hpp"
#include "sdioph/lattice.hpp"
#include "sdioph/parallel.hpp"
#include "sdioph/psi.hpp"

namespace sdioph {

namespace detail {

/// First k base-p digits of c in Z_p; nothing when |c|_p > 1.
inline std::optional<std::vector<std::uint32_t>> padic_digits(const Rational& c, std::uint64_t p, long k) {
    Integer P(static_cast<unsigned long>(p));
    if (mpz_divisible_p(c.den_ref().get_mpz_t(), P.get_mpz_t())) return std::nullopt;
    std::vector<std::uint32_t> out;
    if (k <= 0) return out;
    Integer mod = ipow(P, static_cast<unsigned long>(k)), inv, r;
    mpz_invert(inv.get_mpz_t(), c.den_ref().get_mpz_t(), mod.get_mpz_t());
    r = c.numerator() * inv;
    mpz_fdiv_r(r.get_mpz_t(), r.get_mpz_t(), mod.get_mpz_t());
    for (long j = 0; j < k; ++j) {
        out.push_back(static_cast<std::uint32_t>(mpz_fdiv_ui(r.get_mpz_t(), p)));
        mpz_fdiv_q_ui(r.get_mpz_t(), r.get_mpz_t(), p);
    }
    return out;
}

/// First k base-b digits of c in [0,1); nothing outside.
inline std::optional<std::vector<std::uint32_t>> real_digits(const Rational& c, std::uint64_t b, long k) {
    if (c.sign() < 0 || !(c < Rational(1))) return std::nullopt;
    std::vector<std::uint32_t> out;
    Integer r = c.numerator();
    const Integer& v = c.den_ref();
    for (long j = 0; j < k; ++j) {
        r *= static_cast<unsigned long>(b);
        Integer a;
        mpz_fdiv_qr(a.get_mpz_t(), r.get_mpz_t(), r.get_mpz_t(), v.get_mpz_t());
        out.push_back(static_cast<std::uint32_t>(a.get_ui()));
    }
    return out;
}

/// Rational value of an eventually periodic expansion: `prefix` then `tail` digit forever.
inline Rational digits_value(const std::vector<std::uint32_t>& prefix, std::uint32_t tail, std::uint64_t base,
                             bool real) {
    Rational B(Integer(static_cast<unsigned long>(base)));
    Rational out(0);
    if (real) {
        Rational scale = B.inverse();
        for (auto a : prefix) {
            out += Rational(static_cast<long>(a)) * scale;
            scale /= B;
        }
        // sum_{j >= N} tail b^-(j+1) = tail b^-N / (b - 1)
        out += Rational(static_cast<long>(tail)) * scale * B / (B - Rational(1));
    } else {
        Rational scale(1);
        for (auto a : prefix) {
            out += Rational(static_cast<long>(a)) * scale;
            scale *= B;
        }
        // sum_{j >= N} tail p^j = tail p^N / (1 - p) in Z_p
        out += Rational(static_cast<long>(tail)) * scale / (Rational(1) - B);
    }
    return out;
}

inline std::vector<std::uint32_t> parse_digit_list(std::string_view s, std::uint64_t base) {
    std::vector<std::uint32_t> out;
    if (s == "full" || s == "all") {
        for (std::uint64_t a = 0; a < base; ++a) out.push_back(static_cast<std::uint32_t>(a));
        return out;
    }
    for (auto part : split(s, ',')) {
        Rational a = Rational::parse(trim(part));
        if (!a.is_integer() || a.sign() < 0) throw error(errc::parse, "digits must be nonnegative integers");
        out.push_back(static_cast<std::uint32_t>(a.numerator().get_ui()));
    }
    return out;
}

}  // namespace detail

class DigitMeasure {
public:
    DigitMeasure(Place place, std::uint64_t base, std::size_t d, std::vector<std::vector<std::uint32_t>> digits,
                 std::vector<std::vector<Rational>> weights = {})
        : place_(std::move(place)), base_(base), d_(d), digits_(std::move(digits)), weights_(std::move(weights)) {
        if (d_ < 1) throw error(errc::dimension, "measure dimension must be >= 1");
        if (place_.is_finite() && place_.prime() != Integer(static_cast<unsigned long>(base_)))
            throw error(errc::validation, "a p-adic digit measure uses base p");
        if (base_ < 2 || base_ > (1u << 20)) throw error(errc::validation, "digit base must be in [2, 2^20]");
        if (digits_.size() == 1 && d_ > 1) digits_.assign(d_, digits_.front());
        if (weights_.size() == 1 && d_ > 1) weights_.assign(d_, weights_.front());
        if (digits_.size() != d_) throw error(errc::dimension, "need one digit set per coordinate");
        if (weights_.empty())
            for (const auto& D : digits_)
                weights_.emplace_back(D.size(), Rational(Integer(1), Integer(static_cast<unsigned long>(D.size()))));
        if (weights_.size() != d_) throw error(errc::dimension, "need one weight vector per coordinate");
        for (std::size_t i = 0; i < d_; ++i) {
            auto& D = digits_[i];
            auto& W = weights_[i];
            if (D.empty()) throw error(errc::validation, "digit set is empty");
            if (W.size() != D.size()) throw error(errc::validation, "weights and digits differ in length");
            std::vector<std::size_t> order(D.size());
            for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
            std::sort(order.begin(), order.end(), [&](auto a, auto b) { return D[a] < D[b]; });
            std::vector<std::uint32_t> D2;
            std::vector<Rational> W2;
            for (auto j : order) {
                if (D[j] >= base_) throw error(errc::validation, "digit " + std::to_string(D[j]) + " >= base");
                if (!D2.empty() && D2.back() == D[j]) throw error(errc::validation, "repeated digit");
                if (W[j].sign() <= 0) throw error(errc::validation, "digit weights must be positive");
                D2.push_back(D[j]);
                W2.push_back(W[j]);
            }
            Rational total(0);
            for (const auto& w : W2) total += w;
            if (total != Rational(1)) throw error(errc::validation, "digit weights must sum to 1");
            D = std::move(D2);
            W = std::move(W2);
        }
        table_.assign(d_, std::vector<Rational>(base_, Rational(0)));
        below_.assign(d_, std::vector<Rational>(base_, Rational(0)));
        for (std::size_t i = 0; i < d_; ++i) {
            for (std::size_t j = 0; j < digits_[i].size(); ++j) table_[i][digits_[i][j]] = weights_[i][j];
            Rational acc(0);
            for (std::uint64_t a = 0; a < base_; ++a) {
                below_[i][a] = acc;
                acc += table_[i][a];
            }
        }
    }

    /// Haar (p-adic) or Lebesgue (real, base 2 unless given) measure.
    static DigitMeasure full(const Place& place, std::size_t d, std::uint64_t base = 0) {
        if (place.is_finite()) base = place.prime_ui();
        if (base == 0) base = 2;
        std::vector<std::uint32_t> D;
        for (std::uint64_t a = 0; a < base; ++a) D.push_back(static_cast<std::uint32_t>(a));
        return DigitMeasure(place, base, d, {D});
    }

    static DigitMeasure parse(std::string_view text, std::size_t default_d = 1) {
        std::optional<Place> place;
        std::uint64_t base = 0;
        std::size_t d = default_d;
        std::string_view digit_text = "full", weight_text;
        std::size_t start = 0;
        text = detail::trim(text);
        while (start < text.size()) {
            auto end = text.find(' ', start);
            auto tok = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
            start = end == std::string_view::npos ? text.size() : end + 1;
            if (tok.empty()) continue;
            auto colon = tok.find(':');
            auto key = tok.substr(0, colon);
            auto val = colon == std::string_view::npos ? std::string_view() : tok.substr(colon + 1);
            if (key == "p") {
                place = Place::parse(val);
                base = place->prime_ui();
            } else if (key == "inf") {
                place = Place::infinite();
                base = 2;
                if (!val.empty()) {
                    Rational b = Rational::parse(val);
                    if (!b.is_integer() || b < Rational(2)) throw error(errc::parse, "real base must be an integer >= 2");
                    base = b.numerator().get_ui();
                }
            } else if (key == "digits") {
                digit_text = val;
            } else if (key == "weights") {
                weight_text = val;
            } else if (key == "d") {
                Rational v = Rational::parse(val);
                if (!v.is_integer() || v < Rational(1)) throw error(errc::parse, "d must be a positive integer");
                d = v.numerator().get_ui();
            } else {
                throw error(errc::parse, "unknown measure key '" + std::string(key) + "'");
            }
        }
        if (!place) throw error(errc::parse, "measure component needs 'p:<prime>' or 'inf[:base]'");
        std::vector<std::vector<std::uint32_t>> digits;
        for (auto part : detail::split(digit_text, ';')) digits.push_back(detail::parse_digit_list(detail::trim(part), base));
        std::vector<std::vector<Rational>> weights;
        if (!weight_text.empty())
            for (auto part : detail::split(weight_text, ';')) {
                std::vector<Rational> w;
                for (auto x : detail::split(part, ',')) w.push_back(Rational::parse(detail::trim(x)));
                weights.push_back(std::move(w));
            }
        return DigitMeasure(*place, base, d, std::move(digits), std::move(weights));
    }

    const Place& place() const { return place_; }
    bool is_real() const { return place_.is_infinite(); }
    std::uint64_t base() const { return base_; }
    std::size_t dim() const { return d_; }
    const std::vector<std::uint32_t>& digits(std::size_t i) const { return digits_.at(i); }
    const std::vector<Rational>& weights(std::size_t i) const { return weights_.at(i); }
    std::uint32_t min_digit(std::size_t i) const { return digits_.at(i).front(); }

    /// Weight of digit a in coordinate i (0 when not allowed).
    const Rational& weight(std::size_t i, std::uint32_t a) const { return table_[i][a]; }
    /// Total weight of the allowed digits below a.
    const Rational& weight_below(std::size_t i, std::uint32_t a) const { return below_[i][a]; }

    bool is_non_atomic() const {
        for (const auto& D : digits_)
            if (D.size() < 2) return false;
        return true;
    }

    bool is_uniform() const {
        for (const auto& W : weights_)
            for (const auto& w : W)
                if (w != W.front()) return false;
        return true;
    }

    /// -log(max weight)/log(base), minimized over coordinates; equals
    /// log|D|/log(base) for uniform weights.
    double analytic_alpha() const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& W : weights_) {
            Rational m = W.front();
            for (const auto& w : W) m = max(m, w);
            best = std::min(best, -std::log(m.to_double()) / std::log(static_cast<double>(base_)));
        }
        return best;
    }

    Rational prefix_weight(std::size_t i, const std::vector<std::uint32_t>& prefix) const {
        Rational out(1);
        for (auto a : prefix) {
            out *= table_[i][a];
            if (out.is_zero()) break;
        }
        return out;
    }

    /// Mass of the depth-k cylinder of coordinate i containing c: the closed
    /// ball |x - c|_p <= p^-k at a prime, [floor(c b^k) b^-k, ... + b^-k) at the real place.
    Rational coord_cylinder(std::size_t i, const Rational& c, long k) const {
        if (k <= 0) {
            if (is_real()) return (c.sign() >= 0 && c < Rational(1)) ? Rational(1) : Rational(0);
            Rational radius = pow(Rational(Integer(static_cast<unsigned long>(base_))), -k);
            return abs_at(c, place_) <= radius ? Rational(1) : Rational(0);
        }
        auto pre = is_real() ? detail::real_digits(c, base_, k) : detail::padic_digits(c, base_, k);
        return pre ? prefix_weight(i, *pre) : Rational(0);
    }

    /// Product of coord_cylinder over the coordinates.
    Rational cylinder(const RationalPoint& center, long k) const {
        if (center.dim() != d_) throw error(errc::dimension, "center dimension differs from the measure");
        Rational out(1);
        for (std::size_t i = 0; i < d_ && !out.is_zero(); ++i) out *= coord_cylinder(i, center[i], k);
        return out;
    }

    /// mu((-inf, t]) in coordinate i of the real measure, exact.
    Rational cdf(std::size_t i, const Rational& t) const {
        if (!is_real()) throw error(errc::invalid_place, "distribution function needs the real place");
        if (t.sign() < 0) return Rational(0);
        if (!(t < Rational(1))) return Rational(1);
        if (digits_[i].size() == 1) {
            Rational atom = Rational(static_cast<long>(digits_[i][0]), static_cast<long>(base_ - 1));
            return atom <= t ? Rational(1) : Rational(0);
        }
        // F(t) = sum_j W_<(a_j) prod_{i<j} w(a_i), summed over one period in closed form.
        std::map<Integer, std::size_t> seen;
        std::vector<Rational> partial{Rational(0)}, prod{Rational(1)};
        Integer r = t.numerator();
        const Integer& v = t.den_ref();
        for (std::size_t j = 0;; ++j) {
            if (j > 2000000) throw error(errc::precision_exhausted, "digit expansion period too long");
            auto [it, fresh] = seen.emplace(r, j);
            if (!fresh) {
                std::size_t j0 = it->second;
                Rational period_sum = (partial[j] - partial[j0]) / prod[j0];
                Rational period_prod = prod[j] / prod[j0];
                return partial[j0] + prod[j0] * period_sum / (Rational(1) - period_prod);
            }
            r *= static_cast<unsigned long>(base_);
            Integer a;
            mpz_fdiv_qr(a.get_mpz_t(), r.get_mpz_t(), r.get_mpz_t(), v.get_mpz_t());
            auto digit = static_cast<std::uint32_t>(a.get_ui());
            partial.push_back(partial[j] + prod[j] * below_[i][digit]);
            prod.push_back(prod[j] * table_[i][digit]);
            if (prod.back().is_zero()) return partial.back();
        }
    }

    /// mu of the open interval (a, b) in coordinate i of the real measure.
    Rational interval(std::size_t i, const Rational& a, const Rational& b) const {
        if (!(a < b)) return Rational(0);
        if (digits_[i].size() == 1) {
            Rational atom = Rational(static_cast<long>(digits_[i][0]), static_cast<long>(base_ - 1));
            return (a < atom && atom < b) ? Rational(1) : Rational(0);
        }
        return cdf(i, b) - cdf(i, a);
    }

    /// The point with the given digit prefix followed by the smallest allowed digit; lies in the support.
    Rational support_point(std::size_t i, const std::vector<std::uint32_t>& prefix) const {
        return detail::digits_value(prefix, min_digit(i), base_, is_real());
    }

    std::string str() const {
        std::string out = is_real() ? "inf:" + std::to_string(base_) : "p:" + std::to_string(base_);
        auto list = [](const auto& v, auto f) {
            std::string s;
            for (std::size_t j = 0; j < v.size(); ++j) s += (j ? "," : "") + f(v[j]);
            return s;
        };
        bool same_digits = std::all_of(digits_.begin(), digits_.end(), [&](auto& D) { return D == digits_[0]; });
        bool same_weights = std::all_of(weights_.begin(), weights_.end(), [&](auto& W) { return W == weights_[0]; });
        out += " digits:";
        for (std::size_t i = 0; i < (same_digits ? 1 : d_); ++i)
            out += (i ? ";" : "") + list(digits_[i], [](std::uint32_t a) { return std::to_string(a); });
        if (!is_uniform()) {
            out += " weights:";
            for (std::size_t i = 0; i < (same_weights ? 1 : d_); ++i)
                out += (i ? ";" : "") + list(weights_[i], [](const Rational& w) { return w.str(); });
        }
        return out + " d:" + std::to_string(d_);
    }

private:
    Place place_;
    std::uint64_t base_;
    std::size_t d_;
    std::vector<std::vector<std::uint32_t>> digits_;
    std::vector<std::vector<Rational>> weights_;
    std::vector<std::vector<Rational>> table_;
    std::vector<std::vector<Rational>> below_;
};

class ProductMeasure {
public:
    ProductMeasure(std::vector<DigitMeasure> components) : parts_(std::move(components)) {
        if (parts_.empty()) throw error(errc::validation, "product measure needs a component");
        std::sort(parts_.begin(), parts_.end(), [](auto& a, auto& b) { return a.place() < b.place(); });
        std::vector<Place> places;
        for (const auto& m : parts_) {
            if (m.dim() != parts_.front().dim()) throw error(errc::dimension, "components differ in dimension");
            places.push_back(m.place());
        }
        places_.emplace(std::move(places));
    }

    /// Components for the places of S; places without a component get the full measure.
    static ProductMeasure parse(std::string_view text, const PlaceSet& S, std::size_t d) {
        std::vector<DigitMeasure> parts;
        text = detail::trim(text);
        if (!text.empty() && text != "full" && text != "haar")
            for (auto comp : detail::split(text, '|')) parts.push_back(DigitMeasure::parse(comp, d));
        for (const auto& m : parts) {
            if (m.dim() != d) throw error(errc::dimension, "measure dimension differs from d");
            if (std::find(S.begin(), S.end(), m.place()) == S.end())
                throw error(errc::validation, "measure place " + m.place().str() + " is not in S");
        }
        for (const auto& v : S) {
            bool have = std::any_of(parts.begin(), parts.end(), [&](auto& m) { return m.place() == v; });
            if (!have) parts.push_back(DigitMeasure::full(v, d));
        }
        return ProductMeasure(std::move(parts));
    }

    std::size_t dim() const { return parts_.front().dim(); }
    const PlaceSet& places() const { return *places_; }
    std::size_t size() const { return parts_.size(); }
    const DigitMeasure& operator[](std::size_t i) const { return parts_[i]; }
    auto begin() const { return parts_.begin(); }
    auto end() const { return parts_.end(); }

    const DigitMeasure& component(const Place& v) const {
        for (const auto& m : parts_)
            if (m.place() == v) return m;
        throw error(errc::invalid_place, "no measure component at " + v.str());
    }

    bool is_non_atomic() const {
        return std::all_of(parts_.begin(), parts_.end(), [](auto& m) { return m.is_non_atomic(); });
    }

    std::string str() const {
        std::string out;
        for (const auto& m : parts_) out += (out.empty() ? "" : " | ") + m.str();
        return out;
    }

private:
    std::vector<DigitMeasure> parts_;
    std::optional<PlaceSet> places_;
};

/// Mass of the ball at m's place: closed p-adic ball (a cylinder once the radius is
/// snapped), or the b-adic cylinder of depth k for the real place. The radius
/// there must be exactly base^-k.
inline Rational cylinder_measure(const DigitMeasure& m, const SBall& ball) {
    std::size_t idx = ball.index_of(m.place());
    const Rational& r = ball.radius_at(idx);
    auto s = snap(r, Integer(static_cast<unsigned long>(m.base())));
    if (s.value != r) throw error(errc::radius, "ball radius " + r.str() + " is not a power of the digit base");
    return m.cylinder(ball.center_at(idx), s.exponent);
}

/// Exact mu_v(B_v) for one place: cylinders at primes, open boxes at the real place.
inline Rational ball_measure(const DigitMeasure& m, const RationalPoint& center, const Rational& radius) {
    if (m.is_real()) {
        Rational out(1);
        for (std::size_t i = 0; i < m.dim(); ++i) out *= m.interval(i, center[i] - radius, center[i] + radius);
        return out;
    }
    return m.cylinder(center, snap(radius, Integer(static_cast<unsigned long>(m.base()))).exponent);
}

inline Rational ball_measure(const ProductMeasure& mu, const SBall& ball) {
    Rational out(1);
    for (const auto& m : mu) out *= ball_measure(m, ball.center_at(m.place()), ball.radius_at(m.place()));
    return out;
}

// A sampled point: per component, per coordinate, the first N digits.
struct DigitPoint {
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
    std::vector<std::vector<std::vector<std::uint32_t>>> digits;

    std::size_t precision() const { return digits.empty() ? 0 : digits[0][0].size(); }

    /// The digits as a finite expansion (trailing zeros).
    RationalPoint truncated(const ProductMeasure& mu, std::size_t component) const {
        const auto& m = mu[component];
        std::vector<Rational> c;
        for (std::size_t i = 0; i < m.dim(); ++i) {
            std::vector<std::uint32_t> pre = digits[component][i];
            c.push_back(detail::digits_value(pre, 0, m.base(), m.is_real()));
        }
        return RationalPoint(std::move(c));
    }

    /// The digits followed by the least allowed digit: a point of the support.
    RationalPoint support_value(const ProductMeasure& mu, std::size_t component) const {
        const auto& m = mu[component];
        std::vector<Rational> c;
        for (std::size_t i = 0; i < m.dim(); ++i) c.push_back(m.support_point(i, digits[component][i]));
        return RationalPoint(std::move(c));
    }

    std::string str(const ProductMeasure& mu) const {
        std::string out;
        for (std::size_t c = 0; c < digits.size(); ++c) {
            out += (c ? " " : "") + mu[c].place().str() + ":";
            for (std::size_t i = 0; i < digits[c].size(); ++i) {
                out += i ? ";" : "";
                for (auto a : digits[c][i]) out += std::to_string(a) + (mu[c].base() > 10 ? "." : "");
            }
        }
        return out;
    }
};

namespace detail {

// Exact draw from a rational weight vector with a 64-bit engine: map the
// weights to integer intervals of [0, L) and reject the biased top range.
class DigitSampler {
public:
    explicit DigitSampler(const DigitMeasure& m, std::size_t coord) : digits_(m.digits(coord)) {
        Integer L = 1;
        for (const auto& w : m.weights(coord)) mpz_lcm(L.get_mpz_t(), L.get_mpz_t(), w.den_ref().get_mpz_t());
        if (L > Integer("4611686018427387904")) throw error(errc::validation, "digit weights have too large a common denominator");
        L_ = L.get_ui();
        std::uint64_t acc = 0;
        for (const auto& w : m.weights(coord)) {
            acc += Integer(w.numerator() * (L / w.denominator())).get_ui();
            cum_.push_back(acc);
        }
        limit_ = (~std::uint64_t{0} / L_) * L_;
    }

    template <class Engine>
    std::uint32_t draw(Engine& eng) const {
        std::uint64_t u;
        do u = eng();
        while (u >= limit_);
        std::uint64_t r = u % L_;
        std::size_t j = std::upper_bound(cum_.begin(), cum_.end(), r) - cum_.begin();
        return digits_[j];
    }

private:
    std::vector<std::uint32_t> digits_;
    std::vector<std::uint64_t> cum_;
    std::uint64_t L_ = 1;
    std::uint64_t limit_ = 0;
};

inline std::mt19937_64 point_engine(std::uint64_t seed, std::uint64_t index, std::size_t component, std::size_t coord) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(component), static_cast<std::uint32_t>(coord)};
    return std::mt19937_64(seq);
}

}  // namespace detail

/// Point number `index` of the stream `seed`, with N digits per coordinate.
/// Depends only on (seed, index); deepening reproduces the same prefix.
inline DigitPoint sample_point(const ProductMeasure& mu, std::uint64_t seed, std::uint64_t index, std::size_t N) {
    if (N < 1) throw error(errc::domain, "sample precision must be >= 1");
    DigitPoint pt{seed, index, {}};
    for (std::size_t c = 0; c < mu.size(); ++c) {
        std::vector<std::vector<std::uint32_t>> coords;
        for (std::size_t i = 0; i < mu.dim(); ++i) {
            detail::DigitSampler sampler(mu[c], i);
            auto eng = detail::point_engine(seed, index, c, i);
            std::vector<std::uint32_t> ds(N);
            for (auto& a : ds) a = sampler.draw(eng);
            coords.push_back(std::move(ds));
        }
        pt.digits.push_back(std::move(coords));
    }
    return pt;
}

inline void deepen(DigitPoint& pt, const ProductMeasure& mu, std::size_t N) {
    if (N > pt.precision()) pt = sample_point(mu, pt.seed, pt.index, N);
}

inline std::vector<DigitPoint> sample(const ProductMeasure& mu, std::uint64_t seed, std::size_t count, std::size_t N) {
    std::vector<DigitPoint> out(count);
    parallel_for(count, [&](std::size_t i) { out[i] = sample_point(mu, seed, i, N); });
    return out;
}

// ---------------------------------------------------------------------------
// Decay of hyperplane neighborhoods.

/// mu_v(B_v cap L_v^eps) / mu_v(B_v) at one place, either exact or estimated.
struct PlaceRatio {
    Place place = Place::infinite();
    bool exact = false;
    Rational value;       // when exact
    double estimate = 0;  // value as a double, or the Monte Carlo mean
    double std_error = 0;
    std::size_t samples = 0;
    double observed_exponent = std::nan("");  // log(ratio)/log(eps/r_v)
};

struct DecayResult {
    bool exact = false;
    Rational joint;  // product of per-place ratios, when exact
    double joint_estimate = 0;
    double joint_std_error = 0;
    double joint_observed_exponent = std::nan("");  // to be compared with alpha*l
    std::vector<PlaceRatio> per_place;              // each compared with alpha
};


struct MonteCarloOptions {
    std::uint64_t seed = 1;
    std::size_t samples = 20000;
    bool force = false;  // estimate even when an exact answer is available
};

namespace detail {

inline double log_ratio_exponent(double ratio, const Rational& eps, const Rational& r) {
    double x = std::log(eps.to_double()) - std::log(r.to_double());
    if (ratio <= 0 || x >= 0) return std::nan("");
    return std::log(ratio) / x;
}

inline std::optional<std::size_t> single_axis(const Hyperplane& L) {
    if (!L.axis_aligned()) return std::nullopt;
    for (std::size_t i = 0; i < L.dim(); ++i)
        if (L.c[i] != 0) return i;
    return std::nullopt;
}

inline Rational place_ball_mass(const DigitMeasure& m, const SBall& ball, std::size_t idx) {
    if (m.is_real()) return ball_measure(m, ball.center_at(idx), ball.radius_at(idx));
    return m.cylinder(ball.center_at(idx), ball.exponent_at(idx));
}

// Exact slab ratio for the hyperplane x_a = y0. Only coordinate a differs
// between numerator and denominator, so the others cancel.
inline Rational exact_slab_ratio(const DigitMeasure& m, const SBall& ball, std::size_t idx, std::size_t a,
                                 const Rational& y0, const Rational& eps) {
    const Rational& c = ball.center_at(idx)[a];
    if (m.is_real()) {
        const Rational& r = ball.radius_at(idx);
        Rational den = m.interval(a, c - r, c + r);
        Rational num = m.interval(a, max(c - r, y0 - eps), min(c + r, y0 + eps));
        return num / den;
    }
    const Integer P(static_cast<unsigned long>(m.base()));
    long k = ball.exponent_at(idx);
    long j = snap(eps, P).exponent;  // {|x_a - y0|_p <= eps} = {|x_a - y0|_p <= p^-j}
    Rational gap = abs_at(y0 - c, m.place());
    Rational den = m.coord_cylinder(a, c, k);
    if (j >= k) {
        if (pow(Rational(P), -k) < gap) return Rational(0);
        return m.coord_cylinder(a, y0, j) / den;
    }
    return pow(Rational(P), -j) < gap ? Rational(0) : Rational(1);
}

inline double uniform01(std::mt19937_64& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

// Monte Carlo estimate of mu(B_v cap L_v^eps)/mu(B_v) with points drawn from
// mu restricted to B_v. Undecided comparisons on truncated digits deepen the
// sample up to a cap.
inline PlaceRatio monte_carlo_ratio(const DigitMeasure& m, const SBall& ball, std::size_t idx, const Hyperplane& L,
                                    const Rational& eps, const MonteCarloOptions& opt) {
    const std::size_t d = m.dim();
    const std::uint64_t b = m.base();
    const Rational B(Integer(static_cast<unsigned long>(b)));
    const RationalPoint& center = ball.center_at(idx);
    const std::size_t cap = 512;

    // Prefix constraints: digits forced at a prime, candidate cylinders on the line.
    long k = m.is_real() ? 0 : std::max(0L, ball.exponent_at(idx));
    std::vector<std::vector<std::uint32_t>> forced(d);
    struct Cyl {
        std::vector<std::uint32_t> digits;
        double mass;
    };
    std::vector<std::vector<Cyl>> choices(d);
    long K = 0;
    Rational r = ball.radius_at(idx);
    if (!m.is_real()) {
        for (std::size_t i = 0; i < d; ++i) {
            auto pre = padic_digits(center[i], b, k);
            if (!pre) throw error(errc::empty_ball, "ball misses the support");
            forced[i] = *pre;
        }
    } else {
        // deepest K with b^-K >= 2r: the interval meets at most two depth-K cylinders
        Rational width = pow(B, -1);
        while (Rational(2) * r <= width && K < 60) {
            width /= B;
            ++K;
        }
        Rational scale = pow(B, K);
        for (std::size_t i = 0; i < d; ++i) {
            Integer lo = floor((center[i] - r) * scale), hi = floor((center[i] + r) * scale);
            for (Integer t = std::max<Integer>(lo, 0); t <= hi && t < scale.numerator(); ++t) {
                auto ds = real_digits(Rational(t, scale.numerator()), b, K);
                Rational w = m.prefix_weight(i, *ds);
                if (!w.is_zero()) choices[i].push_back({*ds, w.to_double()});
            }
            if (choices[i].empty()) throw error(errc::empty_ball, "ball misses the support");
        }
    }

    Rational l1(0);
    for (const auto& ci : L.c) l1 += Rational(Integer(::abs(ci)));

    std::size_t hits = 0, total = 0;
    for (std::size_t s = 0; total < opt.samples; ++s) {
        if (s > opt.samples * 1000 + 1000) throw error(errc::empty_ball, "rejection sampling found no points in the ball");
        std::size_t N = static_cast<std::size_t>(std::max<long>(k, K)) + 24;
        bool accepted = false, inside = false;
        while (true) {
            if (N > cap) throw error(errc::precision_exhausted, "membership undecided at 512 digits");
            // Digits of this sample; regenerated in full when deepened so the prefix is stable.
            std::vector<std::vector<std::uint32_t>> xs(d);
            for (std::size_t i = 0; i < d; ++i) {
                auto eng = point_engine(opt.seed ^ 0x9e3779b97f4a7c15ULL, s, idx, i);
                std::vector<std::uint32_t> pre;
                if (m.is_real()) {
                    double u = uniform01(eng), acc = 0, tot = 0;
                    for (const auto& cy : choices[i]) tot += cy.mass;
                    std::size_t pick = choices[i].size() - 1;
                    for (std::size_t t = 0; t < choices[i].size(); ++t) {
                        acc += choices[i][t].mass / tot;
                        if (u < acc) {
                            pick = t;
                            break;
                        }
                    }
                    pre = choices[i][pick].digits;
                } else {
                    pre = forced[i];
                }
                DigitSampler sampler(m, i);
                xs[i] = pre;
                while (xs[i].size() < N) xs[i].push_back(sampler.draw(eng));
            }
            // x lies in the box prod [lo_i, lo_i + delta] (real) or lo_i + p^N Z_p (p-adic).
            std::vector<Rational> lo(d);
            for (std::size_t i = 0; i < d; ++i) lo[i] = digits_value(xs[i], 0, b, m.is_real());
            if (m.is_real()) {
                Rational delta = pow(B, -static_cast<long>(N));
                bool undecided = false, out = false;
                for (std::size_t i = 0; i < d; ++i) {
                    Rational a = center[i] - r, z = center[i] + r;
                    if (!(lo[i] + delta <= a) && !(z <= lo[i])) {
                        if (!(a < lo[i] && lo[i] + delta < z)) undecided = true;
                    } else {
                        out = true;
                    }
                }
                if (out) break;  // rejected
                if (undecided) {
                    N += 24;
                    continue;
                }
                accepted = true;
                Rational smin = -Rational(L.b), smax = -Rational(L.b);
                for (std::size_t i = 0; i < d; ++i) {
                    Rational ci(L.c[i]);
                    Rational u = ci * lo[i], w = ci * (lo[i] + delta);
                    smin += min(u, w);
                    smax += max(u, w);
                }
                Rational E = eps * l1;
                Rational amax = max(smin.abs(), smax.abs());
                Rational amin = (smin.sign() <= 0 && smax.sign() >= 0) ? Rational(0) : min(smin.abs(), smax.abs());
                if (amax < E) {
                    inside = true;
                } else if (!(amin < E)) {
                    inside = false;
                } else {
                    N += 24;
                    continue;
                }
            } else {
                accepted = true;
                Integer P(static_cast<unsigned long>(b));
                Integer s_val = -L.b;
                long vmin = std::numeric_limits<long>::max();
                for (std::size_t i = 0; i < d; ++i) {
                    s_val += L.c[i] * lo[i].numerator();
                    if (L.c[i] != 0) vmin = std::min(vmin, detail::valuation_of_integer(L.c[i], P));
                }
                Rational bound = eps * pow(Rational(P), -vmin);  // eps * max_i |c_i|_p
                Integer PN = ipow(P, N);
                if (!mpz_divisible_p(s_val.get_mpz_t(), PN.get_mpz_t())) {
                    long v = detail::valuation_of_integer(s_val, P);
                    inside = pow(Rational(P), -v) <= bound;
                } else if (pow(Rational(P), -static_cast<long>(N)) <= bound) {
                    inside = true;
                } else {
                    N += 24;
                    continue;
                }
            }
            break;
        }
        if (!accepted) continue;
        ++total;
        hits += inside;
    }
    PlaceRatio pr;
    pr.place = m.place();
    pr.exact = false;
    pr.samples = total;
    pr.estimate = static_cast<double>(hits) / static_cast<double>(total);
    pr.std_error = std::sqrt(std::max(pr.estimate * (1 - pr.estimate), 1.0 / static_cast<double>(total)) /
                             static_cast<double>(total));
    return pr;
}

}  // namespace detail

/// mu(B cap L^eps) / mu(B). L^eps is a product over places; p-adic
/// neighborhoods are closed (|.|_p <= eps), real ones open.
inline DecayResult decay_ratio(const ProductMeasure& mu, const SBall& ball, const Hyperplane& L, const Rational& eps,
                               const MonteCarloOptions& opt = {}) {
    if (eps.sign() <= 0) throw error(errc::domain, "eps must be positive");
    if (L.dim() != mu.dim() || ball.dim() != mu.dim()) throw error(errc::dimension, "dimensions differ");
    DecayResult out;
    out.exact = true;
    out.joint = Rational(1);
    double joint = 1, rel_var = 0;
    for (const auto& m : mu) {
        std::size_t idx = ball.index_of(m.place());
        if (detail::place_ball_mass(m, ball, idx).is_zero()) throw error(errc::empty_ball, "ball has measure zero");
        PlaceRatio pr;
        pr.place = m.place();
        auto axis = detail::single_axis(L);
        if (axis && !opt.force) {
            Rational y0 = Rational(L.b) / Rational(L.c[*axis]);
            pr.exact = true;
            pr.value = detail::exact_slab_ratio(m, ball, idx, *axis, y0, eps);
            pr.estimate = pr.value.to_double();
        } else {
            pr = detail::monte_carlo_ratio(m, ball, idx, L, eps, opt);
            out.exact = false;
        }
        pr.observed_exponent = detail::log_ratio_exponent(pr.estimate, eps, ball.radius_at(idx));
        if (pr.exact) out.joint *= pr.value;
        joint *= pr.estimate;
        if (pr.estimate > 0) rel_var += (pr.std_error / pr.estimate) * (pr.std_error / pr.estimate);
        out.per_place.push_back(pr);
    }
    out.joint_estimate = joint;
    out.joint_std_error = joint * std::sqrt(rel_var);
    if (!out.exact) out.joint = Rational(0);
    // joint radius: the nominal one
    out.joint_observed_exponent = detail::log_ratio_exponent(joint, eps, ball.nominal_radius());
    return out;
}

// ---------------------------------------------------------------------------
// Decay exponent fit and doubling.

struct AlphaGridPoint {
    Place place = Place::infinite();
    long k_r = 0;    // r = base^-k_r
    long k_eps = 0;  // eps = base^-k_eps
    Rational sup_ratio;
};

struct PlaceAlpha {
    Place place = Place::infinite();
    double slope = 0;
    double std_error = 0;
    double analytic = 0;
};

struct AlphaFit {
    double alpha = 0;  // min over places
    double std_error = 0;
    double lower = 0;  // 95% band
    double upper = 0;
    double joint_exponent = 0;  // sum of per-place slopes, alpha*l for equal components
    std::vector<PlaceAlpha> per_place;
    std::vector<AlphaGridPoint> points;
};

inline std::vector<std::pair<long, long>> default_alpha_grid() {
    std::vector<std::pair<long, long>> g;
    for (long kr = 0; kr <= 2; ++kr)
        for (long gap = 1; gap <= 6; ++gap) g.emplace_back(kr, kr + gap);
    return g;
}

namespace detail {

/// Allowed digit strings of the given length in coordinate i, in lexicographic order, at most `cap`.
inline std::vector<std::vector<std::uint32_t>> allowed_strings(const DigitMeasure& m, std::size_t i, long len,
                                                               std::size_t cap) {
    std::vector<std::vector<std::uint32_t>> out{{}};
    for (long j = 0; j < len; ++j) {
        std::vector<std::vector<std::uint32_t>> next;
        for (const auto& s : out)
            for (auto a : m.digits(i)) {
                if (next.size() >= cap) break;
                auto t = s;
                t.push_back(a);
                next.push_back(std::move(t));
            }
        out = std::move(next);
    }
    return out;
}

// Sup over the test grid of mu(B(x,r) cap L^eps)/mu(B(x,r)) for axis slabs
// x_i = y with x, y in the support. Balls are centred at support points of
// depth-k_r cylinders; slab centres at support points of depth-k_eps cylinders.
inline Rational sup_slab_ratio(const DigitMeasure& m, long kr, long ke) {
    const Rational B(Integer(static_cast<unsigned long>(m.base())));
    const Rational r = pow(B, -kr), eps = pow(B, -ke);
    PlaceSet single({m.place()});
    Rational best(0);
    for (std::size_t i = 0; i < m.dim(); ++i) {
        std::vector<Rational> base_center(m.dim());
        for (std::size_t t = 0; t < m.dim(); ++t) base_center[t] = m.support_point(t, {});
        for (const auto& P : allowed_strings(m, i, kr, 243)) {
            auto c = base_center;
            c[i] = m.support_point(i, P);
            SBall ball(RationalPoint(c), r, single);
            std::vector<Rational> ys;
            if (m.is_real()) {
                ys.push_back(c[i]);
                Rational scale = pow(B, ke);
                Integer lo = floor((c[i] - r) * scale), hi = floor((c[i] + r) * scale);
                for (Integer t = std::max<Integer>(lo, 0); t <= hi && t < scale.numerator(); ++t) {
                    auto ds = real_digits(Rational(t, scale.numerator()), m.base(), ke);
                    if (!m.prefix_weight(i, *ds).is_zero()) ys.push_back(m.support_point(i, *ds));
                }
            } else {
                for (const auto& Q : allowed_strings(m, i, ke - kr, 2187)) {
                    auto pq = P;
                    pq.insert(pq.end(), Q.begin(), Q.end());
                    ys.push_back(m.support_point(i, pq));
                }
            }
            for (const auto& y : ys) best = max(best, exact_slab_ratio(m, ball, 0, i, y, eps));
        }
    }
    return best;
}

}  // namespace detail

/// Least-squares slope of log(sup ratio) against log(eps/r) per place, over
/// grid points (k_r, k_eps) meaning r = base^-k_r and eps = base^-k_eps.
inline AlphaFit estimate_alpha(const ProductMeasure& mu, const std::vector<std::pair<long, long>>& grid = default_alpha_grid()) {
    if (grid.empty()) throw error(errc::fit, "alpha grid is empty");
    if (!mu.is_non_atomic()) throw error(errc::validation, "measure is atomic; the decay exponent is undefined");
    AlphaFit fit;
    fit.alpha = std::numeric_limits<double>::infinity();
    for (const auto& m : mu) {
        std::vector<double> xs, ys;
        for (auto [kr, ke] : grid) {
            if (kr < 0 || ke <= kr) throw error(errc::fit, "grid needs 0 <= k_r < k_eps");
            Rational sup = detail::sup_slab_ratio(m, kr, ke);
            fit.points.push_back({m.place(), kr, ke, sup});
            if (sup.is_zero()) throw error(errc::fit, "zero sup ratio at a grid point");
            xs.push_back(-static_cast<double>(ke - kr) * std::log(static_cast<double>(m.base())));
            ys.push_back(std::log(sup.to_double()));
        }
        double n = static_cast<double>(xs.size()), mx = 0, my = 0;
        for (std::size_t t = 0; t < xs.size(); ++t) {
            mx += xs[t] / n;
            my += ys[t] / n;
        }
        double sxx = 0, sxy = 0;
        for (std::size_t t = 0; t < xs.size(); ++t) {
            sxx += (xs[t] - mx) * (xs[t] - mx);
            sxy += (xs[t] - mx) * (ys[t] - my);
        }
        if (sxx <= 0) throw error(errc::fit, "grid has a single eps/r value");
        double slope = sxy / sxx, rss = 0;
        for (std::size_t t = 0; t < xs.size(); ++t) {
            double e = ys[t] - my - slope * (xs[t] - mx);
            rss += e * e;
        }
        double se = xs.size() > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
        fit.per_place.push_back({m.place(), slope, se, m.analytic_alpha()});
        fit.joint_exponent += slope;
        if (slope < fit.alpha) {
            fit.alpha = slope;
            fit.std_error = se;
        }
    }
    fit.lower = fit.alpha - 1.96 * fit.std_error;
    fit.upper = fit.alpha + 1.96 * fit.std_error;
    return fit;
}

/// mu(B(x, 2r)) / mu(B(x, r)) for the real component, exact. r0 defaults to base^-2.
inline Rational doubling_ratio(const DigitMeasure& m, const RationalPoint& x, const Rational& r,
                               std::optional<Rational> r0 = std::nullopt) {
    if (!m.is_real()) throw error(errc::invalid_place, "doubling is a property of the real component");
    if (x.dim() != m.dim()) throw error(errc::dimension, "point dimension differs from the measure");
    Rational limit = r0 ? *r0 : pow(Rational(Integer(static_cast<unsigned long>(m.base()))), -2);
    if (r.sign() <= 0 || !(r < limit)) throw error(errc::domain, "doubling needs 0 < r < r_0 = " + limit.str());
    Rational small = ball_measure(m, x, r);
    if (small.is_zero()) throw error(errc::empty_ball, "ball has measure zero");
    return ball_measure(m, x, Rational(2) * r) / small;
}

inline Rational doubling_ratio(const ProductMeasure& mu, const DigitPoint& x, const Rational& r,
                               std::optional<Rational> r0 = std::nullopt) {
    for (std::size_t c = 0; c < mu.size(); ++c)
        if (mu[c].is_real()) return doubling_ratio(mu[c], x.support_value(mu, c), r, r0);
    throw error(errc::invalid_place, "measure has no real component");
}

}  // namespace sdioph
