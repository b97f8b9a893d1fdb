#pragma once

// Everything: exact numbers, places, the simplex lemmas, enumeration,
// digit measures and the experiment harness.

#include "sdioph/exactnum.hpp"
#include "sdioph/places.hpp"
#include "sdioph/ball.hpp"
#include "sdioph/psi.hpp"
#include "sdioph/simplex1d.hpp"
#include "sdioph/lattice.hpp"
#include "sdioph/measures.hpp"
#include "sdioph/enumeration.hpp"
#include "sdioph/harness.hpp"
