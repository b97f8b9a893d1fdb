#pragma once

/**
 * @file psi.hpp
 * @brief Approximation functions psi: N -> R+.
 *
 * Grammar:
 *   pow:c,tau            psi(q) = c q^(-tau)                      (exact)
 *   powlog:c,tau,kappa   psi(q) = c q^(-tau) (1 + ln q)^(-kappa)  (50-digit float)
 *   table:h1=v1;h2=v2    step function, psi(q) = v_i for the largest h_i <= q (exact)
 *   const:c              shorthand for pow:c,0
 * c, tau, kappa and table values are rationals ("3", "-1/2").
 */

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "sdioph/exactnum.hpp"

namespace sdioph {

using Float = boost::multiprecision::cpp_bin_float_50;

inline Float to_float(const Rational& x) {
    return Float(x.num_ref().get_str()) / Float(x.den_ref().get_str());
}
inline Float to_float(const Integer& x) { return Float(x.get_str()); }

/// 12 significant digits, the float format used in every report.
inline std::string format_float(const Float& x) {
    std::ostringstream os;
    os.precision(12);
    os << static_cast<double>(x);
    return os.str();
}

namespace detail {

/// Exact x^(a/b) for x >= 0 when the root is rational.
inline std::optional<Rational> rational_power(const Rational& x, const Rational& e) {
    if (x.is_zero()) {
        if (e.sign() < 0) throw error(errc::domain, "zero to a negative power");
        return e.is_zero() ? Rational(1) : Rational(0);
    }
    if (x.sign() < 0) throw error(errc::domain, "rational_power of a negative number");
    unsigned long b = e.denominator().get_ui();
    Integer num, den;
    if (!mpz_root(num.get_mpz_t(), x.num_ref().get_mpz_t(), b)) return std::nullopt;
    if (!mpz_root(den.get_mpz_t(), x.den_ref().get_mpz_t(), b)) return std::nullopt;
    return pow(Rational(num, den), e.numerator().get_si());
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

class PsiFunction {
public:
    struct PowerLaw {
        Rational c;
        Rational tau;
    };
    struct PowerLog {
        Rational c;
        Rational tau;
        Rational kappa;
    };
    struct Table {
        std::vector<std::pair<Integer, Rational>> steps;  // heights ascending
    };

    static PsiFunction power_law(Rational c, Rational tau) {
        if (c.sign() < 0) throw error(errc::validation, "psi needs c >= 0");
        return PsiFunction(PowerLaw{std::move(c), std::move(tau)});
    }
    static PsiFunction power_log(Rational c, Rational tau, Rational kappa) {
        if (c.sign() < 0) throw error(errc::validation, "psi needs c >= 0");
        return PsiFunction(PowerLog{std::move(c), std::move(tau), std::move(kappa)});
    }
    static PsiFunction table(std::vector<std::pair<Integer, Rational>> steps) {
        if (steps.empty()) throw error(errc::validation, "psi table is empty");
        for (std::size_t i = 0; i < steps.size(); ++i) {
            if (steps[i].first < 1) throw error(errc::validation, "psi table heights must be >= 1");
            if (steps[i].second.sign() < 0) throw error(errc::validation, "psi table values must be >= 0");
            if (i && !(steps[i - 1].first < steps[i].first))
                throw error(errc::validation, "psi table heights must increase");
            if (i && steps[i - 1].second < steps[i].second)
                throw error(errc::validation, "psi table is not monotone at height " + steps[i].first.get_str());
        }
        return PsiFunction(Table{std::move(steps)});
    }

    static PsiFunction parse(std::string_view text) {
        text = detail::trim(text);
        auto colon = text.find(':');
        if (colon == std::string_view::npos) throw error(errc::parse, "psi spec needs 'family:args'");
        auto family = text.substr(0, colon);
        auto args = text.substr(colon + 1);
        auto nums = [&](std::size_t count) {
            auto parts = detail::split(args, ',');
            if (parts.size() != count)
                throw error(errc::parse, "psi '" + std::string(family) + "' takes " + std::to_string(count) + " arguments");
            std::vector<Rational> out;
            for (auto p : parts) out.push_back(Rational::parse(detail::trim(p)));
            return out;
        };
        if (family == "pow") {
            auto v = nums(2);
            return power_law(v[0], v[1]);
        }
        if (family == "const") {
            auto v = nums(1);
            return power_law(v[0], Rational(0));
        }
        if (family == "powlog") {
            auto v = nums(3);
            return power_log(v[0], v[1], v[2]);
        }
        if (family == "table") {
            std::vector<std::pair<Integer, Rational>> steps;
            for (auto entry : detail::split(args, ';')) {
                auto eq = entry.find('=');
                if (eq == std::string_view::npos) throw error(errc::parse, "psi table entry needs 'h=v'");
                Rational h = Rational::parse(detail::trim(entry.substr(0, eq)));
                if (!h.is_integer()) throw error(errc::parse, "psi table heights must be integers");
                steps.emplace_back(h.numerator(), Rational::parse(detail::trim(entry.substr(eq + 1))));
            }
            return table(std::move(steps));
        }
        throw error(errc::parse, "unknown psi family '" + std::string(family) + "'");
    }

    std::string str() const {
        if (auto* p = std::get_if<PowerLaw>(&f_)) return "pow:" + p->c.str() + "," + p->tau.str();
        if (auto* p = std::get_if<PowerLog>(&f_))
            return "powlog:" + p->c.str() + "," + p->tau.str() + "," + p->kappa.str();
        std::string out = "table:";
        for (const auto& [h, v] : std::get<Table>(f_).steps) {
            if (out.size() > 6) out += ';';
            out += h.get_str() + "=" + v.str();
        }
        return out;
    }

    bool is_exact() const { return !std::holds_alternative<PowerLog>(f_); }
    const PowerLaw* as_power_law() const { return std::get_if<PowerLaw>(&f_); }
    const PowerLog* as_power_log() const { return std::get_if<PowerLog>(&f_); }
    const Table* as_table() const { return std::get_if<Table>(&f_); }

    /// psi(q) when it is rational.
    std::optional<Rational> exact_value(const Integer& q) const {
        check_height(q);
        if (auto* p = std::get_if<PowerLaw>(&f_)) {
            if (p->c.is_zero()) return Rational(0);
            auto root = detail::rational_power(Rational(q), -p->tau);
            if (!root) return std::nullopt;
            return p->c * *root;
        }
        if (auto* t = std::get_if<Table>(&f_)) return table_value(*t, q);
        return std::nullopt;
    }

    Float value(const Integer& q) const {
        check_height(q);
        if (auto e = exact_value(q)) return to_float(*e);
        if (auto* p = std::get_if<PowerLaw>(&f_))
            return to_float(p->c) * boost::multiprecision::pow(to_float(q), -to_float(p->tau));
        const auto& g = std::get<PowerLog>(f_);
        Float fq = to_float(q);
        return to_float(g.c) * boost::multiprecision::pow(fq, -to_float(g.tau)) *
               boost::multiprecision::pow(1 + boost::multiprecision::log(fq), -to_float(g.kappa));
    }

    /// Decides lhs <= psi(q). Exact for pow and table; the float family
    /// refuses to decide when the two sides agree to 40 digits.
    bool bound_holds(const Rational& lhs, const Integer& q) const {
        check_height(q);
        if (auto* p = std::get_if<PowerLaw>(&f_)) {
            if (p->c.is_zero()) return lhs.sign() <= 0;
            if (lhs.sign() <= 0) return true;
            // (lhs / c)^b <= q^(-a) with tau = a/b
            long a = p->tau.numerator().get_si();
            long b = p->tau.denominator().get_si();
            return pow(lhs / p->c, b) <= pow(Rational(q), -a);
        }
        if (auto* t = std::get_if<Table>(&f_)) return lhs <= table_value(*t, q);
        Float rhs = value(q), l = to_float(lhs);
        Float ar = boost::multiprecision::abs(rhs), al = boost::multiprecision::abs(l);
        Float scale = ar < al ? al : ar;
        if (boost::multiprecision::abs(l - rhs) <= scale * Float("1e-40"))
            throw error(errc::precision_exhausted, "cannot separate " + lhs.str() + " from psi(" + q.get_str() + ")");
        return l <= rhs;
    }

    /// psi(q) for reports: "a/b" when rational, else the symbolic form.
    std::string bound_str(const Integer& q) const {
        if (auto e = exact_value(q)) return e->str();
        if (auto* p = std::get_if<PowerLaw>(&f_))
            return p->c.str() + "*" + q.get_str() + "^(" + (-p->tau).str() + ")";
        return format_float(value(q));
    }

    /// Checks monotone non-increase on 1, 2, 4, ..., 2^N.
    void check_monotone(long N) const {
        Float prev = value(Integer(1));
        for (long n = 1; n <= N; ++n) {
            Integer q = ipow(Integer(2), static_cast<unsigned long>(n));
            Float cur = value(q);
            if (cur > prev * (1 + Float("1e-45")))
                throw error(errc::validation, "psi is not monotone non-increasing at q = " + q.get_str());
            prev = cur;
        }
    }

private:
    using Variant = std::variant<PowerLaw, PowerLog, Table>;
    explicit PsiFunction(Variant f) : f_(std::move(f)) {}

    static void check_height(const Integer& q) {
        if (q < 1) throw error(errc::domain, "psi is defined on positive integers");
    }

    static Rational table_value(const Table& t, const Integer& q) {
        Rational out = t.steps.front().second;
        for (const auto& [h, v] : t.steps) {
            if (q < h) break;
            out = v;
        }
        return out;
    }

    Variant f_;
};

/// Right-hand side of the Dirichlet inequality: ||q~||^(-(1+1/d)) for
/// all-finite S; |q0|^(-1/d) (default) or |q0|^(-(1+1/d)) with the real place.
enum class DirichletExponent { reciprocal_d, classic };

inline PsiFunction dirichlet_bound(long d, bool with_infinity, DirichletExponent e = DirichletExponent::reciprocal_d) {
    if (d < 1) throw error(errc::dimension, "d must be >= 1");
    if (with_infinity && e == DirichletExponent::reciprocal_d) return PsiFunction::power_law(1, Rational(1, d));
    return PsiFunction::power_law(1, Rational(d + 1, d));
}

}  // namespace sdioph
