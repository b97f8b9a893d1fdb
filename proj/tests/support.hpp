#pragma once

// Conversions between the test oracles and library types.

#include "oracles.hpp"
#include "sdioph/sdioph.hpp"

namespace testing_support {

inline sdioph::Rational R(const oracle::Frac& f) { return sdioph::Rational::parse(f.str()); }

inline std::vector<sdioph::Rational> R(const std::vector<oracle::Frac>& v) {
    std::vector<sdioph::Rational> out;
    for (const auto& f : v) out.push_back(R(f));
    return out;
}

inline sdioph::PlaceSet S_of(const std::vector<oracle::i64>& places) {
    return sdioph::PlaceSet::parse(oracle::places_text(places));
}

}  // namespace testing_support
