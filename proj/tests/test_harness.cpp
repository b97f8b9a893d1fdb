#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace sdioph;
using oracle::Frac;
using testing_support::R;

namespace {

BcSumResult sum(const char* psi, long alpha_num, long alpha_den, long d, long N) {
    return bc_sum(PsiFunction::parse(psi), Alpha::of(Rational(alpha_num, alpha_den)), d, N);
}

std::string error_text(const std::function<void()>& f) {
    try {
        f();
    } catch (const error& e) {
        return e.what();
    }
    return "";
}

int run_cli(const std::string& args, const std::string& out_file = "") {
    std::string cmd = std::string(SDIOPH_CLI) + " " + args + " > " + (out_file.empty() ? "/dev/null" : out_file) +
                      " 2>/dev/null";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string fixture(const char* name) { return std::string(SDIOPH_FIXTURES) + "/" + name; }

class ThreadsEnv {
public:
    explicit ThreadsEnv(const char* value) {
        if (const char* old = std::getenv("SDIOPH_THREADS")) saved_ = old;
        setenv("SDIOPH_THREADS", value, 1);
    }
    ~ThreadsEnv() {
        if (saved_) setenv("SDIOPH_THREADS", saved_->c_str(), 1);
        else unsetenv("SDIOPH_THREADS");
    }

private:
    std::optional<std::string> saved_;
};

}  // namespace

TEST(BcSum, PowerLawTerms) {
    // (2^(2n) 2^(-3n))^1 = 2^-n
    auto r = sum("pow:1,3", 1, 1, 1, 10);
    ASSERT_EQ(r.terms.size(), 10u);
    Frac partial(0);
    for (const auto& t : r.terms) {
        Frac term = oracle::power(2, -static_cast<int>(t.n));
        partial = partial + term;
        EXPECT_EQ(*t.term, R(term));
        EXPECT_EQ(*t.partial, R(partial));
    }
    EXPECT_EQ(r.classification, Convergence::convergent);
    EXPECT_FALSE(r.boundary);

    // d = 2, tau = 3/2 is the boundary: every term is c^alpha
    auto b = sum("pow:2,3/2", 2, 1, 2, 6);
    EXPECT_TRUE(b.boundary);
    EXPECT_EQ(b.classification, Convergence::divergent);
    for (const auto& t : b.terms) EXPECT_EQ(*t.term, Rational(4));

    // alpha = 1/2 with an odd exponent leaves no rational root
    auto f = sum("pow:1,1", 1, 2, 1, 3);
    EXPECT_FALSE(f.terms[0].term);
    EXPECT_NEAR(static_cast<double>(f.terms[0].term_value), std::sqrt(2.0), 1e-12);
    EXPECT_EQ(f.classification, Convergence::divergent);
}

TEST(BcSum, PowerLogAndTables) {
    EXPECT_EQ(sum("powlog:1,2,2", 1, 1, 1, 8).classification, Convergence::convergent);
    EXPECT_EQ(sum("powlog:1,2,1", 1, 1, 1, 8).classification, Convergence::divergent);
    EXPECT_TRUE(sum("powlog:1,2,1", 1, 1, 1, 8).boundary);
    EXPECT_EQ(sum("powlog:1,2,3", 1, 2, 1, 8).classification, Convergence::convergent);
    EXPECT_EQ(sum("powlog:1,5/2,0", 1, 1, 1, 8).classification, Convergence::convergent);
    auto pl = sum("powlog:1,2,2", 1, 1, 1, 4);
    for (const auto& t : pl.terms)
        EXPECT_NEAR(static_cast<double>(t.term_value), std::pow(1 + t.n * std::log(2.0), -2), 1e-12);

    auto tab = sum("table:1=1;4=1/8;16=0", 1, 1, 1, 5);
    EXPECT_EQ(tab.classification, Convergence::convergent);
    EXPECT_EQ(*tab.terms[0].term, Rational(4));       // 2^2 psi(2)
    EXPECT_EQ(*tab.terms[1].term, Rational(2));       // 2^4 / 8
    EXPECT_EQ(*tab.terms[3].term, Rational(0));
    EXPECT_EQ(sum("table:1=1/2", 1, 1, 1, 3).classification, Convergence::divergent);
    EXPECT_EQ(sum("const:0", 1, 1, 1, 3).classification, Convergence::convergent);

    EXPECT_THROW(sum("pow:1,-1", 1, 1, 1, 5), error);
    EXPECT_THROW(sum("pow:1,3", 1, 1, 1, 0), error);
    EXPECT_THROW(sum("pow:1,3", 1, 1, 0, 3), error);
    EXPECT_THROW(bc_sum(PsiFunction::parse("pow:1,3"), Alpha::of(0.0), 1, 3), error);
}

// Power laws: the closed form says convergent iff tau > (d+1)/d. The terms are
// geometric with ratio 2^(alpha((d+1)/d - tau)), so convergence shows up as a
// ratio below one and a partial sum that stops growing.
TEST(BcSum, PropertyClassificationMatchesPartialSums) {
    oracle::Gen g(51);
    for (int t = 0; t < 200; ++t) {
        long d = g.uniform(1, 3);
        Rational tau(g.uniform(0, 12), g.uniform(1, 4));
        Rational alpha(g.uniform(1, 8), g.uniform(1, 4));
        auto psi = PsiFunction::power_law(Rational(1), tau);
        auto r = bc_sum(psi, Alpha::of(alpha), d, 60);
        double ratio = static_cast<double>(r.terms[40].term_value / r.terms[39].term_value);
        double expect = std::pow(2.0, alpha.to_double() * (static_cast<double>(d + 1) / d - tau.to_double()));
        EXPECT_NEAR(ratio, expect, 1e-9 * expect);
        bool conv = Rational(Integer(d + 1), Integer(d)) < tau;
        EXPECT_EQ(r.classification == Convergence::convergent, conv);
        Float tail = 0;
        for (std::size_t i = 40; i < 60; ++i) tail += r.terms[i].term_value;
        EXPECT_LE(boost::multiprecision::abs(r.terms[59].partial_value - r.terms[39].partial_value - tail),
                  r.terms[59].partial_value * Float("1e-45"));
        if (conv)
            EXPECT_LT(tail, r.terms[40].term_value / (1 - Float(ratio)) * (1 + Float("1e-9")));
        else
            EXPECT_GE(tail, 20 * r.terms[0].term_value * (1 - Float("1e-30")));
    }
}

TEST(Config, LoadAndOverride) {
    ExperimentConfig cfg;
    std::istringstream in("# header\nkind = survey\nprimes = 2,3   # trailing\n infty = yes\nn0 = 2\n\nsample-count = 17\n"
                          "alpha = 0.25\npsi = powlog:1,2,3\nselection = first_found\n");
    cfg.load(in);
    EXPECT_EQ(cfg.kind, "survey");
    EXPECT_EQ(cfg.places().str(), "2,3,inf");
    EXPECT_EQ(cfg.n_0, 2);
    EXPECT_EQ(cfg.samples, 17u);
    EXPECT_EQ(*cfg.alpha, Rational(1, 4));
    EXPECT_EQ(cfg.psi.str(), "powlog:1,2,3");
    EXPECT_EQ(cfg.dirichlet.selection, WitnessSelection::first_found);
    cfg.set("places", "5");
    EXPECT_EQ(cfg.places().str(), "5");
    cfg.set("alpha", "auto");
    EXPECT_FALSE(cfg.alpha);
    cfg.validate();
    auto j = cfg.to_json();
    EXPECT_EQ(j["places"], "5");
    EXPECT_EQ(j["alpha"], "auto");

    ExperimentConfig file;
    file.load_file(fixture("valid.conf"));
    EXPECT_EQ(file.n_max, 3);
    EXPECT_EQ(file.seed, 7u);
}

TEST(Config, ErrorsNameTheKey) {
    ExperimentConfig cfg;
    EXPECT_NE(error_text([&] { cfg.set("d", "two"); }).find("config key 'd'"), std::string::npos);
    EXPECT_NE(error_text([&] { cfg.set("psi", "pow:1"); }).find("config key 'psi'"), std::string::npos);
    EXPECT_NE(error_text([&] { cfg.set("seed", "-3"); }).find("config key 'seed'"), std::string::npos);
    EXPECT_NE(error_text([&] { cfg.set("colour", "red"); }).find("unknown config key 'colour'"), std::string::npos);
    EXPECT_NE(error_text([&] { cfg.set("max-precision", "x"); }).find("config key 'max_precision'"), std::string::npos);

    std::istringstream bad("kind = survey\nsamples 40\n");
    EXPECT_NE(error_text([&] { cfg.load(bad); }).find("config line 2"), std::string::npos);
    EXPECT_NE(error_text([&] { cfg.load_file(fixture("missing.conf")); }).find("missing.conf"), std::string::npos);

    auto invalid = [](const char* key, const char* value) {
        ExperimentConfig c;
        c.set(key, value);
        return error_text([&] { c.validate(); });
    };
    EXPECT_NE(invalid("n_max", "0").find("'n_max'"), std::string::npos);
    EXPECT_NE(invalid("n_min", "9").find("'n_max'"), std::string::npos);
    EXPECT_NE(invalid("format", "xml").find("'format'"), std::string::npos);
    EXPECT_NE(invalid("primes", "4").find("'primes'"), std::string::npos);
    EXPECT_NE(invalid("measure", "p:5").find("'measure'"), std::string::npos);
    EXPECT_NE(invalid("psi", "pow:1,-2").find("'psi'"), std::string::npos);
    EXPECT_NE(invalid("alpha", "-1").find("'alpha'"), std::string::npos);
    EXPECT_NE(invalid("kind", "nonsense").find("'kind'"), std::string::npos);
}

TEST(Report, CsvAndJson) {
    Report rep;
    rep.kind = "demo";
    rep.columns = {"a", "b", "c"};
    rep.rows.push_back({{"a", 1}, {"b", "x,y"}, {"c", nullptr}});
    rep.rows.push_back({{"a", 2}, {"b", "say \"hi\""}, {"c", true}});
    EXPECT_EQ(rep.csv(), "a,b,c\n1,\"x,y\",\n2,\"say \"\"hi\"\"\",true\n");
    EXPECT_EQ(rep.jsonl(), "{\"a\":1,\"b\":\"x,y\",\"c\":null}\n{\"a\":2,\"b\":\"say \\\"hi\\\"\",\"c\":true}\n");
    auto j = ojson::parse(rep.json());
    EXPECT_EQ(j["kind"], "demo");
    EXPECT_EQ(j["pass"], true);
    EXPECT_EQ(j["rows"].size(), 2u);
    rep.violations = 1;
    EXPECT_EQ(rep.exit_code(), 2);
    EXPECT_THROW(rep.render("xml"), error);
    EXPECT_TRUE(float_cell(std::nan("")).is_null());
    EXPECT_EQ(float_cell(1.0 / 3.0).dump(), "0.333333333333");
}

TEST(Campaigns, Simplex1dAndSimplex) {
    ExperimentConfig cfg;
    cfg.primes = "2,3";
    cfg.n_min = 0;
    cfg.n_max = 3;
    auto one = run_campaign("simplex1d", cfg);
    EXPECT_TRUE(one.pass());
    ASSERT_EQ(one.rows.size(), 4u);
    EXPECT_EQ(one.rows[0]["bound"], "1/16");
    EXPECT_EQ(one.csv().substr(0, 48), "k,places,mode,bound,minimum,a,b,candidates,excee");

    cfg.d = 2;
    cfg.primes = "3";
    cfg.n_min = 2;
    auto s = run_campaign("simplex", cfg);
    EXPECT_TRUE(s.pass());
    for (const auto& row : s.rows) EXPECT_EQ(row["failures"], 0);
    EXPECT_EQ(s.config["d"], 2);
}

TEST(Campaigns, DirichletDecayBcsum) {
    ExperimentConfig cfg;
    cfg.primes = "2";
    cfg.infty = true;
    cfg.samples = 25;
    cfg.height = 256;
    auto dir = run_campaign("dirichlet", cfg);
    EXPECT_TRUE(dir.pass());
    EXPECT_EQ(dir.summary["found"], 25);
    cfg.height = 1;  // q0 = 1, q = 0 always meets the bound 1
    EXPECT_EQ(run_campaign("dirichlet", cfg).summary["found"], 25);

    ExperimentConfig dec;
    dec.primes = "3";
    dec.measure = "p:3 digits:0,2";
    auto decay = run_campaign("decay", dec);
    EXPECT_NEAR(decay.summary["alpha"].get<double>(), 0.6309, 0.05);

    ExperimentConfig bc;
    bc.psi = PsiFunction::parse("pow:1,2");
    auto b = run_campaign("bcsum", bc);
    EXPECT_EQ(b.summary["classification"], "divergent");
    EXPECT_EQ(b.summary["boundary"], true);
    EXPECT_EQ(b.summary["alpha"], "1");
    EXPECT_THROW(run_campaign("unknown", bc), error);
}

TEST(Survey, EdgeCases) {
    ExperimentConfig cfg;
    cfg.primes = "3";
    cfg.n_max = 3;
    cfg.samples = 0;
    auto s = run_campaign("survey", cfg);
    for (const auto& row : s.rows) {
        EXPECT_TRUE(row["empirical_mass"].is_null());
        EXPECT_TRUE(row["ratio"].is_null());
        EXPECT_FALSE(row["envelope"].is_null());
    }
    EXPECT_EQ(s.rows[0]["envelope"], "1/2");

    cfg.psi = PsiFunction::parse("const:5");
    cfg.samples = 10;
    cfg.n_max = 2;
    auto loud = approx_survey(cfg);
    EXPECT_EQ(loud.warnings.size(), 2u);
    EXPECT_EQ(loud.rows[0].hits, 10u);  // every point is within 5 of an integer

    cfg.n_min = 0;
    EXPECT_THROW(approx_survey(cfg), error);
}

TEST(Determinism, IndependentOfThreadCount) {
    ExperimentConfig cfg;
    cfg.primes = "3";
    cfg.samples = 200;
    cfg.n_max = 4;
    cfg.seed = 5;
    ExperimentConfig dir;
    dir.primes = "3";
    dir.infty = true;
    dir.samples = 30;
    dir.height = 64;
    std::string a, b;
    {
        ThreadsEnv env("1");
        a = run_campaign("survey", cfg).csv() + run_campaign("dirichlet", dir).csv();
    }
    {
        ThreadsEnv env("4");
        b = run_campaign("survey", cfg).csv() + run_campaign("dirichlet", dir).csv();
    }
    EXPECT_EQ(a, b);
}

TEST(Cli, ExitCodesAndOutput) {
    namespace fs = std::filesystem;
    const std::string dir = fs::temp_directory_path() / "sdioph_cli_test";
    fs::create_directories(dir);
    EXPECT_EQ(run_cli("--config " + fixture("valid.conf"), dir + "/a.csv"), 0);
    EXPECT_EQ(run_cli("--config " + fixture("valid.conf"), dir + "/b.csv"), 0);
    EXPECT_EQ(slurp(dir + "/a.csv"), slurp(dir + "/b.csv"));
    EXPECT_EQ(slurp(dir + "/a.csv").substr(0, 2), "n,");

    EXPECT_EQ(run_cli("--config " + fixture("simplex.conf")), 0);
    EXPECT_EQ(run_cli("--config " + fixture("malformed.conf")), 1);
    EXPECT_EQ(run_cli("--config " + fixture("missing.conf")), 1);
    EXPECT_EQ(run_cli("survey --bogus"), 1);
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli("nonsense"), 1);
    EXPECT_EQ(run_cli(""), 1);
    EXPECT_EQ(run_cli("survey --n-max 0"), 1);

    // flags override the file; json output parses
    EXPECT_EQ(run_cli("--config " + fixture("valid.conf") + " --n-max 2 --format json --out " + dir + "/c.json"), 0);
    auto j = ojson::parse(slurp(dir + "/c.json"));
    EXPECT_EQ(j["rows"].size(), 2u);
    EXPECT_EQ(j["config"]["seed"], 7);
    EXPECT_EQ(run_cli("bcsum --set psi=pow:1,3 --set alpha=1 --format jsonl", dir + "/d.jsonl"), 0);
    std::istringstream lines(slurp(dir + "/d.jsonl"));
    std::string first;
    std::getline(lines, first);
    EXPECT_EQ(ojson::parse(first)["term"], "1/2");
    fs::remove_all(dir);
}
