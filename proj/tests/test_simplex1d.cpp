#include <gtest/gtest.h>

#include "support.hpp"

using namespace sdioph;
using testing_support::R;

TEST(SeparationBound, Examples) {
    EXPECT_EQ(separation_lower_bound(1, PlaceSet{2, 3}), Rational(1, 64));
    EXPECT_EQ(separation_lower_bound(0, PlaceSet({2}, true)), Rational(1, 4));
    EXPECT_EQ(separation_lower_bound(3, PlaceSet{5}), Rational(1, 1024));
    EXPECT_THROW(separation_lower_bound(-1, PlaceSet{5}), error);
}

TEST(CheckPair, Examples) {
    auto v = check_pair(Rational(1, 2), Rational(1, 3), 1, PlaceSet{2, 3});
    EXPECT_TRUE(v.hypotheses_hold());
    EXPECT_EQ(v.distance, Rational(9));
    EXPECT_TRUE(v.exceeds);

    auto w = check_pair(Rational(1, 2), Rational(1, 3), 1, PlaceSet({2}, true));
    EXPECT_TRUE(w.hypotheses_hold());
    EXPECT_EQ(w.distance, Rational(4));
    EXPECT_EQ(w.bound, Rational(1, 16));
    EXPECT_TRUE(w.exceeds);

    auto h = check_pair(Rational(1, 2), Rational(5, 2), 1, PlaceSet{2});
    EXPECT_TRUE(h.a_in_class);
    EXPECT_FALSE(h.b_in_class);
    EXPECT_FALSE(h.hypotheses_hold());

    EXPECT_THROW(check_pair(Rational(1, 2), Rational(2, 4), 1, PlaceSet{2}), error);
}

TEST(HeightClassTest, HalfOpenWindow) {
    HeightClass c(2, HeightMode::all_finite);
    EXPECT_TRUE(c.contains(Rational(4, 3)));
    EXPECT_TRUE(c.contains(Rational(7, 5)));
    EXPECT_FALSE(c.contains(Rational(8, 5)));
    EXPECT_FALSE(c.contains(Rational(3, 2)));
    HeightClass w(2, HeightMode::with_infinity);
    EXPECT_TRUE(w.contains(Rational(100, 7)));
    EXPECT_FALSE(w.contains(Rational(1, 8)));
    EXPECT_THROW(HeightClass(-1, HeightMode::all_finite), error);
}

TEST(Bruteforce, Examples) {
    auto a = min_separation_bruteforce(1, PlaceSet{2, 3}, Integer(4));
    EXPECT_GT(a.minimum, Rational(1, 64));
    EXPECT_TRUE(a.exceeds);
    auto b = min_separation_bruteforce(0, PlaceSet({2}, true), Integer(4));
    EXPECT_GT(b.minimum, Rational(1, 4));
    auto c = min_separation_bruteforce(2, PlaceSet{2}, Integer(8));
    EXPECT_GT(c.minimum, Rational(1, 256));
    // the reported pair achieves the minimum
    for (const auto& r : {a, b, c}) EXPECT_NE(r.a, r.b);
    EXPECT_EQ(pow(snorm(RationalPoint{a.a - a.b}, PlaceSet{2, 3}), 2), a.minimum);
}

TEST(Bruteforce, Guards) {
    EXPECT_THROW(min_separation_bruteforce(9, PlaceSet{2}, Integer(4096)), error);
    EXPECT_THROW(min_separation_bruteforce(2, PlaceSet{2}, Integer(7)), error);
    EXPECT_EQ(min_separation_bruteforce(0, PlaceSet{2}, Integer(2)).candidates, 3u);  // -1, 0, 1
}

TEST(Bruteforce, MatchesOracle) {
    const std::vector<std::vector<oracle::i64>> sets{{2}, {3}, {2, 3}, {5}, {2, 0}, {3, 0}, {2, 3, 0}};
    for (const auto& places : sets) {
        PlaceSet S = testing_support::S_of(places);
        for (int k = 0; k <= 3; ++k) {
            oracle::i64 bound = 4 * (oracle::i64{1} << (k + 1));
            auto r = min_separation_bruteforce(k, S, Integer(static_cast<long>(bound)));
            EXPECT_EQ(r.minimum, R(oracle::min_separation(k, places, bound))) << S.str() << " k=" << k;
        }
    }
}

TEST(Property, CheckPairSymmetric) {
    oracle::Gen g(31);
    for (int t = 0; t < 1000; ++t) {
        auto places = g.places(3);
        PlaceSet S = testing_support::S_of(places);
        auto a = R(g.rational(40, 40)), b = R(g.rational(40, 40));
        if (a == b) continue;
        long k = static_cast<long>(g.uniform(0, 5));
        auto u = check_pair(a, b, k, S), v = check_pair(b, a, k, S);
        EXPECT_EQ(u.distance, v.distance);
        EXPECT_EQ(u.exceeds, v.exceeds);
        EXPECT_EQ(u.hypotheses_hold(), v.hypotheses_hold());
    }
}

TEST(Property, LargerNumeratorBoundNeverRaisesMinimum) {
    for (const char* s : {"2,inf", "3,inf", "inf", "2,3,inf"}) {
        PlaceSet S = PlaceSet::parse(s);
        for (long k = 0; k <= 3; ++k) {
            Rational prev;
            bool first = true;
            for (long mult = 1; mult <= 8; mult *= 2) {
                auto r = min_separation_bruteforce(k, S, Integer(mult) * ipow(Integer(2), k + 1));
                if (!first) EXPECT_LE(r.minimum, prev) << s << " k=" << k;
                prev = r.minimum;
                first = false;
            }
        }
    }
}

TEST(Property, PairsInClassExceedBound) {
    oracle::Gen g(32);
    int checked = 0;
    for (int t = 0; t < 4000; ++t) {
        auto places = g.places(3);
        PlaceSet S = testing_support::S_of(places);
        long k = static_cast<long>(g.uniform(0, 6));
        long top = 1L << (k + 1);
        auto a = Rational(Integer(g.uniform(-top, top)), Integer(g.uniform(1, top)));
        auto b = Rational(Integer(g.uniform(-top, top)), Integer(g.uniform(1, top)));
        if (a == b) continue;
        auto v = check_pair(a, b, k, S);
        if (!v.hypotheses_hold()) continue;
        ++checked;
        EXPECT_TRUE(v.exceeds) << a << " " << b << " k=" << k << " S=" << S.str();
    }
    EXPECT_GT(checked, 200);
}
