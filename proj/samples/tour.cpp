// A short walk through the library: separation in one dimension, the
// rationals of a small 3-adic ball, and a Dirichlet witness.

#include <iostream>

#include "sdioph/sdioph.hpp"

using namespace sdioph;

int main() {
    PlaceSet S{2, 3};

    auto sep = min_separation_bruteforce(3, S, default_numerator_bound(3));
    std::cout << "k = 3, S = {2,3}: minimum " << sep.minimum.str() << " at (" << sep.a.str() << ", " << sep.b.str()
              << "), bound " << sep.bound.str() << "\n";

    PlaceSet S3{3};
    SBall ball(RationalPoint{0}, radius_schedule(2, 1, 1).radius, S3);
    auto verdict = verify_simplex_lemma(ball, HeightWindow{2}, S3);
    std::cout << "ball of radius " << ball.radius_at(0).str() << " around 0 holds " << verdict.points.size()
              << " rational(s) of height in [4, 8]; " << (verdict.pass ? "on " + verdict.hyperplane->str() : "spanning")
              << "\n";

    auto w = dirichlet_witness(RationalPoint{Rational(2, 7)}, Integer(64), PlaceSet({3}, true));
    if (w) std::cout << "Dirichlet witness for 2/7 over {3, inf}: " << w->to_json() << "\n";
}
