#include <gtest/gtest.h>

#include "support.hpp"

using namespace sdioph;
using testing_support::R;
using testing_support::S_of;

TEST(PlaceSetText, ParseOrdersAndPrints) {
    EXPECT_EQ(PlaceSet::parse("inf,3,2").str(), "2,3,inf");
    EXPECT_EQ(PlaceSet::parse("5").l(), 1);
    EXPECT_TRUE(PlaceSet::parse("2,inf").contains_infinity());
    EXPECT_EQ(PlaceSet::parse("3").with_infinity().str(), "3,inf");
    EXPECT_THROW(PlaceSet::parse("2,2"), error);
    EXPECT_THROW(PlaceSet::parse("4"), error);
    EXPECT_THROW(PlaceSet::parse("x"), error);
    EXPECT_THROW(PlaceSet::parse(""), error);
}

TEST(Snorm, Examples) {
    EXPECT_EQ(snorm(RationalPoint{Rational(1, 6)}, PlaceSet{2, 3}), Rational(3));
    EXPECT_EQ(snorm(RationalPoint::zero(3), PlaceSet{5}), Rational(0));
    EXPECT_EQ(snorm(RationalPoint{Rational(1, 6)}, PlaceSet({2, 3}, true)), Rational(3));
}

TEST(Content, Examples) {
    EXPECT_EQ(content(Rational(1, 6), PlaceSet({2, 3}, true)), Rational(1));
    EXPECT_EQ(content(Rational(1), PlaceSet({7}, true)), Rational(1));
    EXPECT_EQ(content(Rational(-1, 6), PlaceSet{2, 3}), Rational(6));
    EXPECT_EQ(content(Rational(0), PlaceSet{2}), Rational(0));
}

TEST(ProductFormula, Examples) {
    EXPECT_TRUE(product_formula_check(Rational(1, 6)));
    EXPECT_TRUE(product_formula_check(Rational(-35, 4)));
    EXPECT_TRUE(product_formula_check(Rational(1)));
    EXPECT_THROW(product_formula_check(Rational(0)), error);
}

TEST(Property, ProductFormulaHolds) {
    oracle::Gen g(21);
    for (int t = 0; t < 2000; ++t) EXPECT_TRUE(product_formula_check(R(g.nonzero_rational(1 << 24, 1 << 24))));
}

TEST(Property, SnormMatchesOracleAndIgnoresOrder) {
    oracle::Gen g(22);
    for (int t = 0; t < 1500; ++t) {
        auto places = g.places(3);
        std::size_t d = static_cast<std::size_t>(g.uniform(1, 3));
        std::vector<oracle::Frac> x;
        for (std::size_t i = 0; i < d; ++i) x.push_back(g.rational(500, 500));
        PlaceSet S = S_of(places);
        EXPECT_EQ(snorm(RationalPoint(R(x)), S), R(oracle::snorm(x, places)));
        auto shuffled = places;
        std::shuffle(shuffled.begin(), shuffled.end(), g.engine());
        std::vector<Place> vs;
        for (auto p : shuffled) vs.push_back(p == 0 ? Place::infinite() : Place::finite(p));
        EXPECT_EQ(snorm(RationalPoint(R(x)), PlaceSet(vs)), snorm(RationalPoint(R(x)), S));
    }
}

TEST(Property, SnormTriangleAndUltrametric) {
    oracle::Gen g(23);
    for (int t = 0; t < 1500; ++t) {
        auto places = g.places(3);
        PlaceSet S = S_of(places);
        std::size_t d = static_cast<std::size_t>(g.uniform(1, 3));
        std::vector<Rational> a, b;
        for (std::size_t i = 0; i < d; ++i) {
            a.push_back(R(g.rational(300, 300)));
            b.push_back(R(g.rational(300, 300)));
        }
        RationalPoint x(a), y(b);
        Rational lhs = snorm(x + y, S);
        if (S.contains_infinity())
            EXPECT_LE(lhs, snorm(x, S) + snorm(y, S));
        else
            EXPECT_LE(lhs, max(snorm(x, S), snorm(y, S)));
    }
}

TEST(Property, ContentMultiplicative) {
    oracle::Gen g(24);
    for (int t = 0; t < 1500; ++t) {
        auto places = g.places(3);
        auto x = g.rational(10000, 10000), y = g.rational(10000, 10000);
        PlaceSet S = S_of(places);
        EXPECT_EQ(content(R(x) * R(y), S), content(R(x), S) * content(R(y), S));
        EXPECT_EQ(content(R(x), S), R(oracle::content(x, places)));
    }
}

TEST(Property, IntegersHaveFiniteSnormAtMostOne) {
    oracle::Gen g(25);
    for (int t = 0; t < 1500; ++t) {
        auto places = g.places(3, false);
        std::vector<Rational> c;
        for (int i = 0; i < 3; ++i) c.emplace_back(static_cast<long>(g.uniform(-100000, 100000)));
        EXPECT_LE(snorm(RationalPoint(c), S_of(places)), Rational(1));
    }
}
