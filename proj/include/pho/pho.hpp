#pragma once

/// @file
/// @brief Umbrella header for the core library (no YAML dependency).

#include "algorithms.hpp"
#include "derivatives.hpp"
#include "nlp.hpp"
#include "problems/cartpole.hpp"
#include "problems/synthetic.hpp"
#include "rng.hpp"
#include "solver.hpp"
#include "tree.hpp"
