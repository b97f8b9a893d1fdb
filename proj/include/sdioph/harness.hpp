#pragma once

// Experiment orchestration behind the CLI: configuration, the convergence sum
// of the main theorem, the approximability survey and campaign reports.

#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "sdioph/enumeration.hpp"
#include "sdioph/lattice.hpp"
#include "sdioph/measures.hpp"
#include "sdioph/simplex1d.hpp"

namespace sdioph {

using ojson = nlohmann::ordered_json;

/// A positive exponent, exact when rational.
struct Alpha {
    std::optional<Rational> exact;
    Float value;

    static Alpha of(const Rational& a) { return {a, to_float(a)}; }
    static Alpha of(double a) { return {std::nullopt, Float(a)}; }
    std::string str() const { return exact ? exact->str() : format_float(value); }
};

/// The least analytic decay exponent over the components of mu.
inline Alpha measure_alpha(const ProductMeasure& mu) {
    double a = std::numeric_limits<double>::infinity();
    for (const auto& m : mu) a = std::min(a, m.analytic_alpha());
    double r = std::round(a);
    if (r > 0 && std::abs(a - r) < 1e-12) return Alpha::of(Rational(static_cast<long>(r)));
    return Alpha::of(a);
}

// ---------------------------------------------------------------------------
// Convergence sum: term_n = (2^(n(d+1)/d) psi(2^n))^alpha.

enum class Convergence { convergent, divergent };

inline const char* convergence_name(Convergence c) {
    return c == Convergence::convergent ? "convergent" : "divergent";
}

struct BcTerm {
    long n = 0;
    std::optional<Rational> term;
    Float term_value;
    std::optional<Rational> partial;  // exact while every term so far is
    Float partial_value;
};

struct BcSumResult {
    std::vector<BcTerm> terms;  // n = 1..N
    Convergence classification = Convergence::divergent;
    bool boundary = false;  // tau = (d+1)/d
    std::string criterion;
};

namespace detail {

// 2^(n(d+1)/d) psi(2^n) written as R 2^e, for the exact families.
struct ScaledTerm {
    Rational R;
    Rational e;
};

inline std::optional<ScaledTerm> scaled_inner(const PsiFunction& psi, long d, long n) {
    Rational e(Integer(n * (d + 1)), Integer(d));
    if (auto* p = psi.as_power_law()) return ScaledTerm{p->c, e - Rational(n) * p->tau};
    if (psi.as_table()) return ScaledTerm{*psi.exact_value(ipow(Integer(2), static_cast<unsigned long>(n))), e};
    return std::nullopt;
}

}  // namespace detail

inline BcSumResult bc_sum(const PsiFunction& psi, const Alpha& alpha, long d, long N) {
    if (N < 1) throw error(errc::domain, "bc_sum needs N >= 1");
    if (d < 1) throw error(errc::dimension, "d must be >= 1");
    if (alpha.value <= 0) throw error(errc::validation, "alpha must be positive");
    if (N > 4096) throw error(errc::search_too_large, "bc_sum needs N <= 4096");
    psi.check_monotone(N);

    BcSumResult r;
    bool exact = alpha.exact.has_value();
    Rational acc(0);
    Float facc = 0;
    const Float ln2 = boost::multiprecision::log(Float(2));
    for (long n = 1; n <= N; ++n) {
        BcTerm t;
        t.n = n;
        auto st = detail::scaled_inner(psi, d, n);
        if (st && alpha.exact) {
            if (st->R.is_zero()) {
                t.term = Rational(0);
            } else if (auto Ra = detail::rational_power(st->R, *alpha.exact)) {
                Rational ea = st->e * *alpha.exact;
                if (ea.is_integer()) t.term = *Ra * pow2(ea.numerator().get_si());
            }
        }
        if (t.term) {
            t.term_value = to_float(*t.term);
        } else {
            Float v = psi.value(ipow(Integer(2), static_cast<unsigned long>(n)));
            t.term_value = v == 0 ? Float(0)
                                  : boost::multiprecision::exp(alpha.value * (boost::multiprecision::log(v) +
                                                                              Float(n * (d + 1)) / d * ln2));
        }
        exact = exact && t.term.has_value();
        if (exact) {
            acc += *t.term;
            t.partial = acc;
            facc = to_float(acc);
        } else {
            facc += t.term_value;
        }
        t.partial_value = facc;
        r.terms.push_back(std::move(t));
    }

    const Rational crit(Integer(d + 1), Integer(d));
    if (auto* p = psi.as_power_law()) {
        if (p->c.is_zero()) {
            r.classification = Convergence::convergent;
            r.criterion = "psi = 0";
        } else {
            r.boundary = p->tau == crit;
            r.classification = crit < p->tau ? Convergence::convergent : Convergence::divergent;
            r.criterion = "tau = " + p->tau.str() + " against (d+1)/d = " + crit.str();
        }
    } else if (auto* g = psi.as_power_log()) {
        if (g->c.is_zero()) {
            r.classification = Convergence::convergent;
            r.criterion = "psi = 0";
        } else if (g->tau != crit) {
            r.classification = crit < g->tau ? Convergence::convergent : Convergence::divergent;
            r.criterion = "tau = " + g->tau.str() + " against (d+1)/d = " + crit.str();
        } else {
            r.boundary = true;
            bool conv = alpha.exact ? Rational(1) < *alpha.exact * g->kappa : alpha.value * to_float(g->kappa) > 1;
            r.classification = conv ? Convergence::convergent : Convergence::divergent;
            r.criterion = "tau = (d+1)/d; alpha*kappa = " +
                          (alpha.exact ? (*alpha.exact * g->kappa).str() : format_float(alpha.value * to_float(g->kappa))) +
                          " against 1";
        }
    } else {
        const auto& last = psi.as_table()->steps.back();
        r.classification = last.second.is_zero() ? Convergence::convergent : Convergence::divergent;
        r.criterion = "table tail value " + last.second.str();
    }
    return r;
}

// ---------------------------------------------------------------------------
// Configuration.

inline const std::vector<std::string>& campaign_kinds() {
    static const std::vector<std::string> kinds{"simplex1d", "simplex", "dirichlet", "bcsum", "decay", "survey"};
    return kinds;
}

struct ExperimentConfig {
    std::string kind;
    std::string primes = "3";
    bool infty = false;
    long d = 1;
    PsiFunction psi = PsiFunction::power_law(1, 3);
    std::optional<Rational> alpha;  // empty: derived from the measure
    std::string measure;
    long n_min = 1;
    long n_max = 6;
    long n_0 = 1;
    std::size_t samples = 1000;
    std::uint64_t seed = 42;
    std::size_t precision = 24;  // initial digits per sampled coordinate
    std::size_t max_precision = 256;
    Integer height = 1024;  // Dirichlet search bound T
    DirichletOptions dirichlet;
    std::optional<Integer> numerator_bound;
    std::size_t sample_stride = 0;
    std::size_t max_balls = 1000000;
    std::string format = "csv";
    std::string out;
    bool timing = false;

    PlaceSet places() const {
        auto text = detail::trim(primes);
        if (text.empty()) {
            if (!infty) throw error(errc::invalid_place, "no places given");
            return PlaceSet(std::vector<Place>{Place::infinite()});
        }
        PlaceSet S = PlaceSet::parse(text);
        return infty ? S.with_infinity() : S;
    }

    ProductMeasure product_measure() const { return ProductMeasure::parse(measure, places(), static_cast<std::size_t>(d)); }

    /// Sets one key; '-' and '_' are interchangeable. Errors name the key.
    void set(std::string key, const std::string& raw) {
        for (auto& c : key)
            if (c == '-') c = '_';
        const std::string value(detail::trim(raw));
        try {
            assign(key, value);
        } catch (const error& e) {
            if (e.code() == errc::usage) throw;
            throw error(errc::usage, "config key '" + key + "': " + e.what());
        }
    }

    /// Reads `key = value` lines; '#' starts a comment.
    void load(std::istream& in) {
        std::string line;
        long lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto body = detail::trim(line);
            if (body.empty()) continue;
            auto eq = body.find('=');
            if (eq == std::string_view::npos)
                throw error(errc::usage, "config line " + std::to_string(lineno) + ": expected 'key = value'");
            set(std::string(detail::trim(body.substr(0, eq))), std::string(body.substr(eq + 1)));
        }
    }

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw error(errc::usage, "cannot read config file '" + path + "'");
        load(in);
    }

    void validate() const {
        auto bad = [](const std::string& key, const std::string& what) {
            throw error(errc::usage, "config key '" + key + "': " + what);
        };
        if (!kind.empty() && std::find(campaign_kinds().begin(), campaign_kinds().end(), kind) == campaign_kinds().end())
            bad("kind", "unknown campaign kind '" + kind + "'");
        if (d < 1) bad("d", "must be >= 1");
        if (n_min < 0) bad("n_min", "must be >= 0");
        if (n_max < 1) bad("n_max", "must be >= 1");
        if (n_max < n_min) bad("n_max", "must be >= n_min");
        if (n_0 < 0) bad("n_0", "must be >= 0");
        if (alpha && alpha->sign() <= 0) bad("alpha", "must be positive");
        if (height < 1) bad("height", "must be >= 1");
        if (precision < 1) bad("precision", "must be >= 1");
        if (max_precision < precision) bad("max_precision", "must be >= precision");
        if (format != "csv" && format != "json" && format != "jsonl") bad("format", "must be csv, json or jsonl");
        try {
            places();
        } catch (const error& e) {
            bad("primes", e.what());
        }
        try {
            product_measure();
        } catch (const error& e) {
            bad("measure", e.what());
        }
        try {
            psi.check_monotone(n_max + 1);
        } catch (const error& e) {
            bad("psi", e.what());
        }
    }

    ojson to_json() const {
        ojson j;
        j["kind"] = kind;
        j["places"] = places().str();
        j["d"] = d;
        j["psi"] = psi.str();
        j["alpha"] = alpha ? alpha->str() : "auto";
        j["measure"] = product_measure().str();
        j["n_min"] = n_min;
        j["n_max"] = n_max;
        j["n_0"] = n_0;
        j["samples"] = samples;
        j["seed"] = seed;
        j["precision"] = precision;
        j["max_precision"] = max_precision;
        j["height"] = height.get_str();
        j["dirichlet_exponent"] = dirichlet.exponent == DirichletExponent::classic ? "classic" : "reciprocal_d";
        j["selection"] = dirichlet.selection == WitnessSelection::first_found ? "first_found" : "smallest_lhs";
        if (numerator_bound) j["numerator_bound"] = numerator_bound->get_str();
        return j;
    }

private:
    static long parse_long(const std::string& v) {
        Rational r = Rational::parse(v);
        if (!r.is_integer() || !r.numerator().fits_slong_p()) throw error(errc::parse, "expected an integer, got '" + v + "'");
        return r.numerator().get_si();
    }
    static std::size_t parse_count(const std::string& v) {
        long x = parse_long(v);
        if (x < 0) throw error(errc::parse, "expected a nonnegative integer, got '" + v + "'");
        return static_cast<std::size_t>(x);
    }
    static bool parse_bool(const std::string& v) {
        if (v == "true" || v == "1" || v == "yes" || v == "on" || v.empty()) return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw error(errc::parse, "expected a boolean, got '" + v + "'");
    }

    void assign(const std::string& key, const std::string& v) {
        if (key == "kind") kind = v;
        else if (key == "primes") primes = v;
        else if (key == "infty") infty = parse_bool(v);
        else if (key == "places") { primes = v; infty = false; }
        else if (key == "d") d = parse_long(v);
        else if (key == "psi") psi = PsiFunction::parse(v);
        else if (key == "alpha") alpha = v == "auto" ? std::nullopt : std::optional<Rational>(Rational::parse(v));
        else if (key == "measure") measure = v;
        else if (key == "n_min") n_min = parse_long(v);
        else if (key == "n_max") n_max = parse_long(v);
        else if (key == "n_0" || key == "n0") n_0 = parse_long(v);
        else if (key == "samples" || key == "sample_count") samples = parse_count(v);
        else if (key == "seed") {
            if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
                throw error(errc::parse, "expected an unsigned integer, got '" + v + "'");
            seed = std::stoull(v);
        }
        else if (key == "precision") precision = parse_count(v);
        else if (key == "max_precision") max_precision = parse_count(v);
        else if (key == "height") {
            Rational r = Rational::parse(v);
            if (!r.is_integer()) throw error(errc::parse, "expected an integer, got '" + v + "'");
            height = r.numerator();
        }
        else if (key == "dirichlet_exponent") {
            if (v == "classic") dirichlet.exponent = DirichletExponent::classic;
            else if (v == "reciprocal_d") dirichlet.exponent = DirichletExponent::reciprocal_d;
            else throw error(errc::parse, "expected classic or reciprocal_d");
        }
        else if (key == "selection") {
            if (v == "smallest_lhs") dirichlet.selection = WitnessSelection::smallest_lhs;
            else if (v == "first_found") dirichlet.selection = WitnessSelection::first_found;
            else throw error(errc::parse, "expected smallest_lhs or first_found");
        }
        else if (key == "numerator_bound") {
            if (v == "auto") numerator_bound.reset();
            else numerator_bound = Integer(static_cast<long>(parse_long(v)));
        }
        else if (key == "sample_stride") sample_stride = parse_count(v);
        else if (key == "max_balls") max_balls = parse_count(v);
        else if (key == "format") format = v;
        else if (key == "out") out = v;
        else if (key == "timing") timing = parse_bool(v);
        else throw error(errc::usage, "unknown config key '" + key + "'");
    }
};

// ---------------------------------------------------------------------------
// Survey of the sets A_n.

struct SurveyRow {
    long n = 0;
    std::size_t samples = 0;
    std::size_t hits = 0;
    std::optional<double> empirical_mass;  // empty without samples
    std::optional<Rational> envelope;      // exact when available
    Float envelope_value;
    std::size_t witness_count = 0;
    std::size_t truncated = 0;  // points whose search hit a guard
    bool below_n0 = false;
    std::optional<double> runtime;  // seconds, with timing on

    std::optional<double> ratio() const {
        if (!empirical_mass || envelope_value == 0) return std::nullopt;
        return *empirical_mass / static_cast<double>(envelope_value);
    }
};

struct SurveyResult {
    Alpha alpha;
    BcSumResult sum;
    std::vector<SurveyRow> rows;
    std::vector<std::string> warnings;
};

inline SurveyResult approx_survey(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.n_min < 1) throw error(errc::usage, "config key 'n_min': the survey starts at n >= 1");
    const PlaceSet S = cfg.places();
    const ProductMeasure mu = cfg.product_measure();
    SurveyResult out;
    out.alpha = cfg.alpha ? Alpha::of(*cfg.alpha) : measure_alpha(mu);
    out.sum = bc_sum(cfg.psi, out.alpha, cfg.d, cfg.n_max);
    if (out.sum.classification == Convergence::divergent)
        out.warnings.push_back("psi is on the divergent side of the convergence sum (" + out.sum.criterion + ")");
    if (out.sum.terms.back().term_value >= 1)
        out.warnings.push_back("psi(2^n) is not below 2^(-n(d+1)/d) at n = " + std::to_string(cfg.n_max));

    std::vector<DigitPoint> points;
    if (cfg.samples) points = sample(mu, cfg.seed, cfg.samples, cfg.precision);

    struct Slot {
        std::size_t witnesses = 0;
        bool hit = false;
        bool truncated = false;
    };
    for (long n = cfg.n_min; n <= cfg.n_max; ++n) {
        const auto& term = out.sum.terms[static_cast<std::size_t>(n - 1)];
        SurveyRow row;
        row.n = n;
        row.samples = cfg.samples;
        row.envelope = term.term;
        row.envelope_value = term.term_value;
        row.below_n0 = n < cfg.n_0;
        auto t0 = std::chrono::steady_clock::now();
        if (cfg.samples) {
            WitnessPlan plan = make_witness_plan(cfg.psi, n, S);
            plan.threads = 1;
            std::vector<Slot> slots(points.size());
            parallel_for(points.size(), [&](std::size_t i) {
                try {
                    auto ws = psi_witnesses(points[i], mu, cfg.psi, plan, S, cfg.max_precision);
                    slots[i].witnesses = ws.size();
                    slots[i].hit = !ws.empty();
                } catch (const error& e) {
                    if (e.code() != errc::search_too_large && e.code() != errc::precision_exhausted) throw;
                    slots[i].truncated = true;
                }
            });
            for (const auto& s : slots) {
                row.witness_count += s.witnesses;
                row.hits += s.hit;
                row.truncated += s.truncated;
            }
            row.empirical_mass = static_cast<double>(row.hits) / static_cast<double>(cfg.samples);
        }
        if (cfg.timing) row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.rows.push_back(std::move(row));
    }
    std::size_t truncated = 0;
    for (const auto& r : out.rows) truncated += r.truncated;
    if (truncated)
        out.warnings.push_back(std::to_string(truncated) + " point searches were truncated by a guard");
    return out;
}

// ---------------------------------------------------------------------------
// Reports.

/// 12 significant digits, as a JSON number; null when not finite.
inline ojson float_cell(double x) {
    if (!std::isfinite(x)) return nullptr;
    std::ostringstream os;
    os.precision(12);
    os << x;
    return std::stod(os.str());
}
inline ojson float_cell(const Float& x) { return float_cell(static_cast<double>(x)); }

struct Report {
    std::string kind;
    ojson config = ojson::object();
    std::vector<std::string> columns;
    std::vector<ojson> rows;
    ojson summary = ojson::object();
    std::vector<std::string> warnings;
    std::size_t violations = 0;

    bool pass() const { return violations == 0; }
    int exit_code() const { return pass() ? 0 : 2; }

    std::string csv() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
        os << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < columns.size(); ++i) {
                if (i) os << ',';
                os << csv_cell(row.contains(columns[i]) ? row.at(columns[i]) : ojson());
            }
            os << '\n';
        }
        return os.str();
    }

    ojson to_json() const {
        ojson j;
        j["kind"] = kind;
        j["pass"] = pass();
        j["violations"] = violations;
        j["config"] = config;
        j["summary"] = summary;
        j["warnings"] = warnings;
        j["rows"] = rows;
        return j;
    }

    std::string json() const { return to_json().dump(2) + "\n"; }

    std::string jsonl() const {
        std::string out;
        for (const auto& row : rows) out += row.dump() + "\n";
        return out;
    }

    std::string render(const std::string& format) const {
        if (format == "csv") return csv();
        if (format == "json") return json();
        if (format == "jsonl") return jsonl();
        throw error(errc::usage, "unknown format '" + format + "'");
    }

private:
    static std::string csv_cell(const ojson& v) {
        if (v.is_null()) return "";
        if (!v.is_string()) return v.dump();
        const auto& s = v.get_ref<const std::string&>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    }
};

namespace detail {

inline std::string join_integers(const std::vector<Integer>& v) {
    std::string out = "(";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i].get_str();
    return out + ")";
}

inline ojson exact_or_float(const std::optional<Rational>& exact, const Float& value) {
    return exact ? ojson(exact->str()) : ojson(format_float(value));
}

inline std::uint64_t draw(std::mt19937_64& eng, std::uint64_t count) { return eng() % count; }

}  // namespace detail

/// Random rational point with ||x||_S <= 1: denominators up to 2^bits prime
/// to S, numerators bounded by the denominator when the real place is in S.
inline RationalPoint random_unit_point(const PlaceSet& S, std::size_t d, std::uint64_t seed, std::uint64_t index,
                                       long bits = 6) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
    std::mt19937_64 eng(seq);
    const long top = 1L << bits;
    std::vector<Rational> c;
    for (std::size_t i = 0; i < d; ++i) {
        long b;
        while (true) {
            b = 1 + static_cast<long>(detail::draw(eng, static_cast<std::uint64_t>(top)));
            bool coprime = true;
            for (const auto& v : S)
                if (v.is_finite() && Integer(b) % v.prime() == 0) coprime = false;
            if (coprime) break;
        }
        long span = S.contains_infinity() ? b : top;
        long a = static_cast<long>(detail::draw(eng, static_cast<std::uint64_t>(2 * span + 1))) - span;
        c.emplace_back(Integer(a), Integer(b));
    }
    return RationalPoint(std::move(c));
}

inline Report run_simplex1d(const ExperimentConfig& cfg) {
    const PlaceSet S = cfg.places();
    Report rep;
    rep.columns = {"k", "places", "mode", "bound", "minimum", "a", "b", "candidates", "exceeds"};
    for (long k = cfg.n_min; k <= cfg.n_max; ++k) {
        Integer nb = cfg.numerator_bound ? *cfg.numerator_bound : default_numerator_bound(k);
        auto r = min_separation_bruteforce(k, S, nb);
        ojson row;
        row["k"] = k;
        row["places"] = S.str();
        row["mode"] = mode_name(mode_of(S));
        row["bound"] = r.bound.str();
        row["minimum"] = r.minimum.str();
        row["a"] = r.a.str();
        row["b"] = r.b.str();
        row["candidates"] = r.candidates;
        row["exceeds"] = r.exceeds;
        rep.violations += !r.exceeds;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

inline Report run_simplex(const ExperimentConfig& cfg) {
    const PlaceSet S = cfg.places();
    const ProductMeasure K = cfg.product_measure();
    Report rep;
    rep.columns = {"d", "n", "places", "radius", "rounded_down", "balls", "points", "occupied",
                   "nontrivial", "max_points", "failures", "volume_holds", "pass"};
    ojson certs = ojson::array();
    for (long n = cfg.n_min; n <= cfg.n_max; ++n) {
        auto r = S.contains_infinity() ? simplex_campaign_explicit(K, n, cfg.max_balls)
                                       : simplex_campaign(K, n, cfg.sample_stride);
        auto vol = volume_certificate(cfg.d, n, S);
        ojson row;
        row["d"] = cfg.d;
        row["n"] = n;
        row["places"] = S.str();
        row["radius"] = r.radius.str();
        row["rounded_down"] = r.rounded_down;
        row["balls"] = r.balls.get_str();
        row["points"] = r.points;
        row["occupied"] = r.occupied;
        row["nontrivial"] = r.nontrivial;
        row["max_points"] = r.max_points;
        row["failures"] = r.failures;
        row["volume_holds"] = vol.holds;
        row["pass"] = r.pass() && vol.holds;
        rep.violations += r.failures + !vol.holds;
        for (const auto& c : r.certificates) {
            ojson pts = ojson::array();
            for (const auto& p : c) pts.push_back(p.str());
            certs.push_back({{"n", n}, {"points", pts}});
        }
        rep.rows.push_back(std::move(row));
    }
    rep.summary["certificates"] = certs;
    return rep;
}

inline Report run_dirichlet(const ExperimentConfig& cfg) {
    const PlaceSet S = cfg.places();
    Report rep;
    rep.columns = {"index", "x", "found", "q0", "q", "lhs", "rhs"};
    std::size_t found = 0;
    for (std::size_t i = 0; i < cfg.samples; ++i) {
        RationalPoint x = random_unit_point(S, static_cast<std::size_t>(cfg.d), cfg.seed, i);
        auto w = dirichlet_witness(x, cfg.height, S, cfg.dirichlet);
        ojson row;
        row["index"] = i;
        row["x"] = x.str();
        row["found"] = w.has_value();
        row["q0"] = w ? ojson(w->q0.get_str()) : ojson();
        row["q"] = w ? ojson(detail::join_integers(w->q)) : ojson();
        row["lhs"] = w ? ojson(w->lhs.str()) : ojson();
        row["rhs"] = w ? ojson(w->rhs_str) : ojson();
        found += w.has_value();
        rep.rows.push_back(std::move(row));
    }
    rep.violations = cfg.samples - found;
    rep.summary["found"] = found;
    rep.summary["points"] = cfg.samples;
    return rep;
}

inline Report run_bcsum(const ExperimentConfig& cfg) {
    Alpha alpha = cfg.alpha ? Alpha::of(*cfg.alpha) : measure_alpha(cfg.product_measure());
    auto r = bc_sum(cfg.psi, alpha, cfg.d, cfg.n_max);
    Report rep;
    rep.columns = {"n", "term", "term_value", "partial_sum", "partial_value"};
    for (const auto& t : r.terms) {
        if (t.n < cfg.n_min) continue;
        ojson row;
        row["n"] = t.n;
        row["term"] = detail::exact_or_float(t.term, t.term_value);
        row["term_value"] = float_cell(t.term_value);
        row["partial_sum"] = detail::exact_or_float(t.partial, t.partial_value);
        row["partial_value"] = float_cell(t.partial_value);
        rep.rows.push_back(std::move(row));
    }
    rep.summary["alpha"] = alpha.str();
    rep.summary["classification"] = convergence_name(r.classification);
    rep.summary["boundary"] = r.boundary;
    rep.summary["criterion"] = r.criterion;
    return rep;
}

inline Report run_decay(const ExperimentConfig& cfg) {
    const ProductMeasure mu = cfg.product_measure();
    auto fit = estimate_alpha(mu);
    Report rep;
    rep.columns = {"place", "k_r", "k_eps", "sup_ratio", "exponent"};
    for (const auto& g : fit.points) {
        const auto& m = mu.component(g.place);
        ojson row;
        row["place"] = g.place.str();
        row["k_r"] = g.k_r;
        row["k_eps"] = g.k_eps;
        row["sup_ratio"] = g.sup_ratio.str();
        row["exponent"] = float_cell(std::log(g.sup_ratio.to_double()) /
                                     (-static_cast<double>(g.k_eps - g.k_r) * std::log(static_cast<double>(m.base()))));
        rep.rows.push_back(std::move(row));
    }
    rep.summary["alpha"] = float_cell(fit.alpha);
    rep.summary["std_error"] = float_cell(fit.std_error);
    rep.summary["lower"] = float_cell(fit.lower);
    rep.summary["upper"] = float_cell(fit.upper);
    rep.summary["joint_exponent"] = float_cell(fit.joint_exponent);
    rep.summary["l"] = mu.places().l();
    ojson per = ojson::array();
    for (const auto& p : fit.per_place)
        per.push_back({{"place", p.place.str()},
                       {"alpha", float_cell(p.slope)},
                       {"std_error", float_cell(p.std_error)},
                       {"analytic", float_cell(p.analytic)}});
    rep.summary["per_place"] = per;
    for (const auto& m : mu) {
        if (!m.is_real()) continue;
        // sup of mu(B(x,2r))/mu(B(x,r)) over sampled support points and r = b^-k
        Rational sup(0);
        for (const auto& pt : sample(mu, cfg.seed, 16, 16))
            for (long k = 3; k <= 10; ++k)
                sup = max(sup, doubling_ratio(mu, pt, pow(Rational(Integer(static_cast<unsigned long>(m.base()))), -k)));
        rep.summary["doubling_sup"] = sup.str();
    }
    return rep;
}

inline Report run_survey(const ExperimentConfig& cfg) {
    auto s = approx_survey(cfg);
    Report rep;
    rep.columns = {"n", "samples", "empirical_mass", "envelope", "envelope_value", "ratio",
                   "witness_count", "truncated", "below_n0"};
    if (cfg.timing) rep.columns.push_back("runtime_s");
    double max_ratio = 0;
    bool monotone = true;
    std::optional<double> prev;
    for (const auto& r : s.rows) {
        ojson row;
        row["n"] = r.n;
        row["samples"] = r.samples;
        row["empirical_mass"] = r.empirical_mass ? float_cell(*r.empirical_mass) : ojson();
        row["envelope"] = detail::exact_or_float(r.envelope, r.envelope_value);
        row["envelope_value"] = float_cell(r.envelope_value);
        row["ratio"] = r.ratio() ? float_cell(*r.ratio()) : ojson();
        row["witness_count"] = r.witness_count;
        row["truncated"] = r.truncated;
        row["below_n0"] = r.below_n0;
        if (r.runtime) row["runtime_s"] = float_cell(*r.runtime);
        if (r.ratio()) max_ratio = std::max(max_ratio, *r.ratio());
        if (!r.below_n0 && r.empirical_mass) {
            if (prev && *r.empirical_mass > *prev) monotone = false;
            prev = r.empirical_mass;
        }
        rep.rows.push_back(std::move(row));
    }
    rep.summary["alpha"] = s.alpha.str();
    rep.summary["classification"] = convergence_name(s.sum.classification);
    rep.summary["max_ratio"] = cfg.samples ? float_cell(max_ratio) : ojson();
    rep.summary["non_increasing_beyond_n0"] = monotone;
    rep.warnings = s.warnings;
    return rep;
}

/// Validates cfg and runs the campaign `kind`.
inline Report run_campaign(const std::string& kind, const ExperimentConfig& cfg) {
    if (std::find(campaign_kinds().begin(), campaign_kinds().end(), kind) == campaign_kinds().end())
        throw error(errc::usage, "unknown campaign kind '" + kind + "'");
    ExperimentConfig c = cfg;
    c.kind = kind;
    c.validate();
    Report rep;
    if (kind == "simplex1d") rep = run_simplex1d(c);
    else if (kind == "simplex") rep = run_simplex(c);
    else if (kind == "dirichlet") rep = run_dirichlet(c);
    else if (kind == "bcsum") rep = run_bcsum(c);
    else if (kind == "decay") rep = run_decay(c);
    else rep = run_survey(c);
    rep.kind = kind;
    rep.config = c.to_json();
    return rep;
}

}  // namespace sdioph
