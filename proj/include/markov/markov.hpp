#pragma once

// Umbrella header for the finite-state Markov chain toolkit.

#include "markov/contraction.hpp"
#include "markov/coupling.hpp"
#include "markov/errors.hpp"
#include "markov/estimators.hpp"
#include "markov/graph.hpp"
#include "markov/io.hpp"
#include "markov/kernel.hpp"
#include "markov/lp.hpp"
#include "markov/metrics.hpp"
#include "markov/rng.hpp"
#include "markov/structure.hpp"
