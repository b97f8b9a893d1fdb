#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace sdioph;
using oracle::Frac;
using oracle::i64;
using testing_support::R;

namespace {

ProductMeasure measure(const char* text, const char* places, std::size_t d = 1) {
    return ProductMeasure::parse(text, PlaceSet::parse(places), d);
}

std::string key(const std::vector<Integer>& q, const Integer& q0) {
    std::string s = q0.get_str() + ":";
    for (const auto& x : q) s += x.get_str() + ",";
    return s;
}

std::string key(const std::vector<i64>& q, i64 q0) {
    std::string s = std::to_string(q0) + ":";
    for (auto x : q) s += std::to_string(x) + ",";
    return s;
}

// Every integer vector in [-b, b]^d.
template <class F>
void for_each_box(std::size_t d, i64 b, F f) {
    std::vector<i64> q(d, -b);
    while (true) {
        f(q);
        std::size_t k = 0;
        while (k < d && q[k] == b) q[k++] = -b;
        if (k == d) return;
        ++q[k];
    }
}

i64 height(const std::vector<i64>& q, i64 q0) {
    i64 h = q0 < 0 ? -q0 : q0;
    for (auto x : q) h = std::max(h, x < 0 ? -x : x);
    return h;
}

// Membership of x in the product ball with per-place radii from the oracle snap.
bool oracle_in_ball(const std::vector<Frac>& x, const std::vector<Frac>& c, const Frac& r, const std::vector<i64>& S) {
    for (i64 p : S) {
        std::vector<Frac> diff;
        for (std::size_t i = 0; i < x.size(); ++i) diff.push_back(x[i] - c[i]);
        Frac dist = oracle::snorm(diff, {p});
        if (p == 0 ? !(dist < r) : oracle::snapped(r, p) < dist) return false;
    }
    return true;
}

Frac lhs_of(const std::vector<Frac>& v, const std::vector<i64>& S) {
    Frac n = oracle::snorm(v, S), out(1);
    for (std::size_t t = 0; t < S.size(); ++t) out = out * n;
    return out;
}

}  // namespace

TEST(RadiusSchedule, Examples) {
    EXPECT_EQ(radius_schedule(1, 1, 1).radius, Rational(1, 768));
    EXPECT_FALSE(radius_schedule(1, 1, 1).rounded_down);
    EXPECT_EQ(radius_schedule(0, 2, 1).radius, Rational(1, 96));
    EXPECT_TRUE(radius_schedule(0, 2, 1).rounded_down);
    EXPECT_EQ(radius_schedule(2, 1, 2).radius, Rational(1, 192));
    EXPECT_TRUE(radius_schedule(2, 1, 2).rounded_down);
    EXPECT_THROW(radius_schedule(-1, 1, 1), error);
    EXPECT_THROW(radius_schedule(0, 0, 1), error);
}

TEST(Snap, Examples) {
    EXPECT_EQ(snap_radius(Rational(1, 768), Integer(3)), Rational(1, 2187));
    EXPECT_EQ(snap(Rational(1, 768), Integer(3)).exponent, 7);
    EXPECT_EQ(snap_radius(Rational(1), Integer(5)), Rational(1));
    EXPECT_EQ(snap_radius(Rational(1, 4), Integer(2)), Rational(1, 4));
    EXPECT_EQ(snap(Rational(10), Integer(3)).exponent, -2);
    EXPECT_THROW(snap_radius(Rational(0), Integer(3)), error);
    EXPECT_THROW(snap_radius(Rational(-1, 2), Integer(3)), error);
}

TEST(Snap, PropertyBracketsRadius) {
    oracle::Gen g(11);
    for (int t = 0; t < 2000; ++t) {
        Frac r(g.uniform(1, 5000), g.uniform(1, 5000));
        i64 p = g.small_prime();
        Rational s = snap_radius(R(r), Integer(p));
        EXPECT_EQ(s, R(oracle::snapped(r, p)));
        EXPECT_LE(s, R(r));
        EXPECT_LT(R(r), s * Rational(p));
    }
}

TEST(InBall, Examples) {
    PlaceSet S{3};
    SBall b(RationalPoint{0}, Rational(1, 9), S);
    EXPECT_TRUE(in_ball(RationalPoint{9}, b, S));
    EXPECT_FALSE(in_ball(RationalPoint{Rational(1, 3)}, b, S));
    EXPECT_TRUE(in_ball(RationalPoint{0}, b, S));
    EXPECT_EQ(b.radius_at(0), Rational(1, 9));

    PlaceSet R1({}, true);
    SBall real(RationalPoint{0}, Rational(1, 2), R1);
    EXPECT_FALSE(in_ball(RationalPoint{Rational(1, 2)}, real, R1));
    EXPECT_TRUE(in_ball(RationalPoint{Rational(-1, 3)}, real, R1));
    EXPECT_THROW(in_ball(RationalPoint{0, 0}, b, S), error);
}

TEST(Cover, Examples) {
    Cover z3(measure("", "3"), Rational(1, 9));
    ASSERT_EQ(z3.size(), Integer(9));
    std::set<std::string> centers;
    for (long j = 0; j < 9; ++j) centers.insert(z3.ball(Integer(j)).center().str());
    EXPECT_EQ(centers.size(), 9u);
    for (long j = 0; j < 9; ++j) EXPECT_TRUE(centers.count(RationalPoint{j}.str())) << j;

    Cover cantor(measure("p:3 digits:0,2", "3"), Rational(1, 9));
    ASSERT_EQ(cantor.size(), Integer(4));
    std::set<std::string> cc;
    for (long j = 0; j < 4; ++j) cc.insert(cantor.ball(Integer(j)).center().str());
    EXPECT_EQ(cc, (std::set<std::string>{RationalPoint{0}.str(), RationalPoint{2}.str(), RationalPoint{6}.str(),
                                         RationalPoint{8}.str()}));

    for (long m : {2, 5, 8, 10, 33}) {
        Rational r(1, m);
        Cover line(measure("inf", "inf"), r);
        // ceil(1 / (2r))
        EXPECT_EQ(line.size(), Integer((m + 1) / 2)) << m;
    }

    Cover level(measure("", "3", 2), 2);
    EXPECT_EQ(level.radius(), radius_schedule(2, 2, 1).radius);
    EXPECT_EQ(level.level(), 2);
    EXPECT_EQ(cover_compact(measure("", "3"), 0).size(), 243u);  // r_0 = 1/192 snaps to 3^-5
}

TEST(Cover, RealCoverReachesEveryPointWithTripledBalls) {
    for (const char* text : {"inf", "inf:3 digits:0,2"}) {
        auto K = measure(text, "inf");
        Cover c(K, Rational(1, 20));
        std::vector<SBall> tripled;
        for (Integer j = 0; j < c.size(); ++j) tripled.push_back(c.ball(c.choice_of(j)).with_real_scale(Rational(3)));
        oracle::Gen g(12);
        for (int t = 0; t < 300; ++t) {
            auto x = sample_point(K, 5, static_cast<std::uint64_t>(t), 12).support_value(K, 0);
            bool hit = std::any_of(tripled.begin(), tripled.end(), [&](const SBall& b) { return b.contains(x); });
            EXPECT_TRUE(hit) << x.str();
        }
    }
}

TEST(Cover, FinitePlacesPartitionTheCompact) {
    const char* cases[][2] = {{"", "3"}, {"p:3 digits:0,2", "3"}, {"p:5 digits:1,3,4", "5"},
                              {"p:2 | p:3 digits:0,2", "2,3"}, {"p:3 digits:0,1;2", "3"}};
    for (auto [text, places] : cases) {
        std::size_t d = std::string(text).find(';') != std::string::npos ? 2 : 1;
        auto K = measure(text, places, d);
        for (long n = 0; n <= 2; ++n) {
            auto balls = cover_compact(K, n);
            Rational total(0);
            for (const auto& b : balls) total += ball_measure(K, b);
            EXPECT_EQ(total, Rational(1)) << text << " n=" << n;
            // disjoint: each sampled point lies in exactly one ball, the located one
            Cover c(K, n);
            for (std::uint64_t i = 0; i < 40; ++i) {
                auto pt = sample_point(K, 9, i, 40);
                RationalPoint x = pt.truncated(K, 0);
                if (K.size() > 1) continue;
                auto loc = c.locate(x);
                ASSERT_TRUE(loc);
                int count = 0;
                for (const auto& b : balls) count += b.contains(x);
                EXPECT_EQ(count, 1);
                EXPECT_TRUE(c.ball(*loc).contains(x));
            }
        }
    }
}

TEST(Enumerate, Examples) {
    PlaceSet S{3};
    auto pairs = enumerate_rationals(SBall(RationalPoint{0}, Rational(1, 9), S), HeightWindow{2}, S);
    ASSERT_EQ(pairs.size(), 5u);
    for (const auto& e : pairs) {
        EXPECT_EQ(e.q[0], Integer(0));
        EXPECT_TRUE(Integer(4) <= e.q0 && e.q0 <= Integer(8));
        EXPECT_EQ(e.point, RationalPoint{0});
    }
    auto all = enumerate_rationals(SBall(RationalPoint{0}, Rational(1), S), HeightWindow{0}, S);
    EXPECT_EQ(all.size(), 10u);  // q0 in {1,2}, |q| <= 2

    PlaceSet inf({}, true);
    auto none = enumerate_rationals(SBall(RationalPoint{Rational(1, 4)}, Rational(1, 8), inf),
                                    HeightWindow{0, HeightMode::with_infinity}, inf);
    EXPECT_TRUE(none.empty());

    EXPECT_THROW(enumerate_rationals(SBall(RationalPoint{0}, Rational(1), S), HeightWindow{0, HeightMode::with_infinity}, S),
                 error);
    EXPECT_THROW(enumerate_rationals(SBall(RationalPoint{0}, Rational(1), S), HeightWindow{20}, S, 1000), error);
}

TEST(Enumerate, PropertyMatchesNaiveScan) {
    oracle::Gen g(13);
    int nonempty = 0;
    for (int t = 0; t < 150; ++t) {
        std::size_t d = static_cast<std::size_t>(g.uniform(1, 2));
        auto places = g.places(2);
        bool real = places.back() == 0;
        i64 n = g.uniform(0, d == 1 ? 4 : 2);
        std::vector<Frac> c;
        for (std::size_t i = 0; i < d; ++i) c.push_back(g.rational(4, 6));
        Frac r(1, g.uniform(1, 40));
        if (!real)
            for (auto& x : c) x = Frac(x.num * 3, 1);  // integral centers keep the finite balls populated

        std::set<std::string> expected;
        i64 hi = i64{1} << (n + 1), lo = i64{1} << n;
        for (i64 q0 = real ? lo : 1; q0 <= hi; ++q0)
            for_each_box(d, real ? 6 * hi : hi, [&](const std::vector<i64>& q) {
                i64 h = real ? q0 : height(q, q0);
                if (h < lo || h > hi) return;
                std::vector<Frac> x;
                for (auto qi : q) x.emplace_back(qi, q0);
                if (oracle_in_ball(x, c, r, places)) expected.insert(key(q, q0));
            });

        PlaceSet S = testing_support::S_of(places);
        SBall ball(RationalPoint(R(c)), R(r), S);
        HeightWindow w{n, mode_of(S)};
        std::set<std::string> got;
        for (const auto& e : enumerate_rationals(ball, w, S)) {
            EXPECT_TRUE(got.insert(key(e.q, e.q0)).second);
            EXPECT_EQ(e.point, RationalPoint::from_integers(e.q, e.q0));
        }
        EXPECT_EQ(got, expected) << oracle::places_text(places) << " n=" << n << " r=" << r.str();
        std::set<std::string> naive;
        for (const auto& e : enumerate_rationals_naive(ball, w, S)) naive.insert(key(e.q, e.q0));
        EXPECT_EQ(naive, expected);
        nonempty += !expected.empty();
    }
    EXPECT_GT(nonempty, 50);
}

TEST(Simplex, Examples) {
    PlaceSet S{3};
    auto v = verify_simplex_lemma(SBall(RationalPoint{0}, Rational(1, 9), S), HeightWindow{2}, S);
    EXPECT_TRUE(v.pass);
    ASSERT_TRUE(v.hyperplane);
    EXPECT_EQ(v.hyperplane->str(), "(1,0)");
    EXPECT_EQ(v.points.size(), 1u);
    EXPECT_EQ(v.pairs, 5u);

    // radius 1 ignores the schedule; two distinct rationals already span the line
    auto big = verify_simplex_lemma(SBall(RationalPoint{0}, Rational(1), S), HeightWindow{0}, S);
    EXPECT_FALSE(big.pass);
    ASSERT_EQ(big.certificate.size(), 2u);
    EXPECT_TRUE(affine_independent(big.certificate));

    for (long n = 2; n <= 4; ++n) {
        auto res = simplex_campaign(measure("", "3", 2), n);
        EXPECT_TRUE(res.pass()) << n;
        EXPECT_EQ(res.balls, ipow(Integer(3), 2 * static_cast<unsigned long>(snap(res.radius, Integer(3)).exponent)));
    }
}

TEST(Simplex, FastCampaignMatchesExplicitBalls) {
    for (auto [places, n_max] : {std::pair{"3", 3L}, std::pair{"2,3", 2L}}) {
        for (long n = 1; n <= n_max; ++n) {
            auto K = measure("", places);
            auto fast = simplex_campaign(K, n);
            auto slow = simplex_campaign_explicit(K, n);
            EXPECT_EQ(fast.balls, slow.balls);
            EXPECT_EQ(fast.points, slow.points) << places << " " << n;
            EXPECT_EQ(fast.occupied, slow.occupied);
            EXPECT_EQ(fast.failures, 0u);
            EXPECT_EQ(slow.failures, 0u);
        }
    }
}

namespace {

struct Brute {
    std::optional<Frac> best;
    std::vector<i64> best_q;
    i64 best_q0 = 0;
    std::vector<i64> first_q;
    i64 first_q0 = 0;
    i64 first_h = 0;
};

// Exhaustive Dirichlet search over q0 in [1, T] and q in [-T, T]^d.
Brute brute_dirichlet(const std::vector<Frac>& x, i64 T, const std::vector<i64>& S) {
    const std::size_t d = x.size();
    const bool real = S.back() == 0;
    Brute b;
    for (i64 q0 = 1; q0 <= T; ++q0)
        for_each_box(d, T, [&](const std::vector<i64>& q) {
            std::vector<Frac> v;
            for (std::size_t i = 0; i < d; ++i) v.push_back(Frac(q0) * x[i] + Frac(q[i]));
            Frac lhs = lhs_of(v, S);
            i64 h = height(q, q0);
            // lhs^d <= q0^-1 with the real place, lhs^d <= H^-(d+1) otherwise
            Frac ld(1);
            for (std::size_t t = 0; t < d; ++t) ld = ld * lhs;
            Frac rhs = real ? Frac(1, q0) : oracle::power(h, -static_cast<int>(d + 1));
            if (!(ld <= rhs)) return;
            if (!b.best || lhs < *b.best) {
                b.best = lhs;
                b.best_q = q;
                b.best_q0 = q0;
            }
            bool earlier = b.first_h == 0 || h < b.first_h || (h == b.first_h && q0 < b.first_q0) ||
                           (h == b.first_h && q0 == b.first_q0 && q < b.first_q);
            if (earlier) {
                b.first_h = h;
                b.first_q = q;
                b.first_q0 = q0;
            }
        });
    return b;
}

}  // namespace

TEST(Dirichlet, Examples) {
    auto w0 = dirichlet_witness(RationalPoint{0}, Integer(1), PlaceSet{3});
    ASSERT_TRUE(w0);
    EXPECT_EQ(w0->q0, Integer(1));
    EXPECT_EQ(w0->q[0], Integer(0));
    EXPECT_EQ(w0->lhs, Rational(0));

    auto w1 = dirichlet_witness(RationalPoint{Rational(1, 3)}, Integer(3), PlaceSet({}, true));
    ASSERT_TRUE(w1);
    EXPECT_EQ(w1->q0, Integer(3));
    EXPECT_EQ(w1->q[0], Integer(-1));
    EXPECT_EQ(w1->lhs, Rational(0));

    auto b = brute_dirichlet({Frac(1, 2)}, 4, {3});
    auto w2 = dirichlet_witness(RationalPoint{Rational(1, 2)}, Integer(4), PlaceSet{3});
    ASSERT_TRUE(b.best && w2);
    EXPECT_EQ(w2->lhs, R(*b.best));
    EXPECT_LE(w2->lhs, *w2->rhs);
    EXPECT_NE(w2->to_json().find("\"q0\":\"" + w2->q0.get_str() + "\""), std::string::npos);

    EXPECT_THROW(dirichlet_witness(RationalPoint{Rational(1, 3)}, Integer(4), PlaceSet{3}), error);
    EXPECT_THROW(dirichlet_witness(RationalPoint{0}, Integer(0), PlaceSet{3}), error);
}

TEST(Dirichlet, PropertyMatchesExhaustiveSearch) {
    oracle::Gen g(14);
    for (int t = 0; t < 120; ++t) {
        std::size_t d = t % 4 == 3 ? 2 : 1;
        auto places = g.places(2);
        i64 T = d == 1 ? 40 : 10;
        std::vector<Frac> x;
        while (x.size() < d) {
            Frac c = g.rational(30, 30);
            if (oracle::snorm({c}, places) <= Frac(1)) x.push_back(c);
        }
        PlaceSet S = testing_support::S_of(places);
        auto b = brute_dirichlet(x, T, places);
        auto best = dirichlet_witness(RationalPoint(R(x)), Integer(T), S);
        DirichletOptions first;
        first.selection = WitnessSelection::first_found;
        auto found = dirichlet_witness(RationalPoint(R(x)), Integer(T), S, first);
        ASSERT_EQ(best.has_value(), b.best.has_value());
        if (!best) continue;
        EXPECT_EQ(best->lhs, R(*b.best));
        ASSERT_TRUE(found);
        EXPECT_EQ(found->q0, Integer(b.first_q0));
        for (std::size_t i = 0; i < d; ++i) EXPECT_EQ(found->q[i], Integer(b.first_q[i]));
    }
}

namespace {

// Exhaustive psi-witness set for psi(q) = c q^-tau, tau a non-negative integer.
std::set<std::string> brute_psi(const std::vector<Frac>& x, const Frac& c, int tau, i64 n, const std::vector<i64>& S) {
    const bool real = S.back() == 0;
    const i64 lo = i64{1} << n, hi = i64{1} << (n + 1);
    std::set<std::string> out;
    Frac reach = c + Frac(1);
    for (const auto& xi : x) reach = reach + oracle::abs_at(xi, 0);
    i64 box = real ? static_cast<i64>(reach.num / reach.den + 1) * hi : hi;
    for (i64 q0 = real ? lo : 1; q0 <= hi; ++q0)
        for_each_box(x.size(), box, [&](const std::vector<i64>& q) {
            i64 h = real ? q0 : height(q, q0);
            if (h < lo || h > hi) return;
            std::vector<Frac> v;
            for (std::size_t i = 0; i < x.size(); ++i) v.push_back(x[i] + Frac(q[i], q0));
            if (lhs_of(v, S) <= c * oracle::power(h, -tau)) out.insert(key(q, q0));
        });
    return out;
}

std::set<std::string> keys(const std::vector<Witness>& ws) {
    std::set<std::string> out;
    for (const auto& w : ws) out.insert(key(w.q, w.q0));
    return out;
}

}  // namespace

TEST(PsiWitnesses, Examples) {
    auto psi = PsiFunction::parse("pow:1,3");
    auto z = psi_witnesses(RationalPoint{0}, psi, 0, PlaceSet{3});
    auto origin = std::find_if(z.begin(), z.end(), [](const Witness& w) { return w.q0 == 1 && w.q[0] == 0; });
    ASSERT_NE(origin, z.end());
    EXPECT_EQ(origin->lhs, Rational(0));
    EXPECT_EQ(*origin->rhs, Rational(1));

    auto half = psi_witnesses(RationalPoint{Rational(1, 2)}, psi, 1, PlaceSet{3});
    EXPECT_EQ(keys(half), brute_psi({Frac(1, 2)}, Frac(1), 3, 1, {3}));
    for (const auto& w : half) {
        EXPECT_LE(w.lhs, *w.rhs);
        EXPECT_EQ(w.n, 1);
    }

    EXPECT_TRUE(psi_witnesses(RationalPoint{Rational(1, 17)}, PsiFunction::parse("const:0"), 0, PlaceSet{3}).empty());
    EXPECT_TRUE(psi_witnesses(RationalPoint{Rational(1, 17)}, PsiFunction::parse("const:0"), 2, PlaceSet({3}, true)).empty());
}

TEST(PsiWitnesses, PropertyMatchesExhaustiveScan) {
    oracle::Gen g(15);
    for (int t = 0; t < 120; ++t) {
        std::size_t d = t % 5 == 4 ? 2 : 1;
        auto places = g.places(2);
        i64 n = g.uniform(0, d == 1 ? 3 : 1);
        std::vector<Frac> x;
        for (std::size_t i = 0; i < d; ++i) x.push_back(g.rational(6, 12));
        Frac c(g.uniform(1, 4), g.uniform(1, 2));
        int tau = static_cast<int>(g.uniform(0, 3));
        auto psi = PsiFunction::power_law(R(c), Rational(tau));
        PlaceSet S = testing_support::S_of(places);
        WitnessPlan plan = make_witness_plan(psi, n, S);
        auto ws = psi_witnesses(RationalPoint(R(x)), psi, plan, S);
        EXPECT_EQ(keys(ws), brute_psi(x, c, tau, n, places))
            << oracle::places_text(places) << " n=" << n << " x=" << x[0].str() << " psi=" << psi.str();
        for (std::size_t i = 1; i < ws.size(); ++i) EXPECT_FALSE(detail::scan_less(ws[i], ws[i - 1]));
        plan.threads = 1;
        auto serial = psi_witnesses(RationalPoint(R(x)), psi, plan, S);
        ASSERT_EQ(serial.size(), ws.size());
        for (std::size_t i = 0; i < ws.size(); ++i) EXPECT_EQ(serial[i].to_json(), ws[i].to_json());
    }
}

TEST(PsiWitnesses, SampledPointsAgreeWithDeepTruncation) {
    auto psi = PsiFunction::parse("pow:1,3");
    for (const char* places : {"3", "inf", "2,3"}) {
        PlaceSet S = PlaceSet::parse(places);
        auto mu = ProductMeasure::parse("", S, 1);
        if (S.size() > 1) continue;  // the truncation below is per component
        for (std::uint64_t i = 0; i < 20; ++i) {
            auto pt = sample_point(mu, 21, i, 8);
            auto deep = sample_point(mu, 21, i, 240).truncated(mu, 0);
            for (long n = 1; n <= 3; ++n) {
                auto ws = psi_witnesses(pt, mu, psi, n, S);
                auto ref = psi_witnesses(deep, psi, n, S);
                EXPECT_EQ(keys(ws), keys(ref)) << places << " point " << i << " n=" << n;
                for (const auto& w : ws) EXPECT_GE(w.precision, 8u);
            }
        }
    }
}
