#pragma once

// Closed testing procedures: closure-adjusted p-values over the full
// intersection lattice, confidence bounds on the number of true nulls,
// shortcut algorithms, logical-constraint deduplication, Monte-Carlo
// composite nulls, and permutation p-values.

#include "ctp/bounds.hpp"
#include "ctp/closure.hpp"
#include "ctp/constraints.hpp"
#include "ctp/covariance.hpp"
#include "ctp/errors.hpp"
#include "ctp/family.hpp"
#include "ctp/io.hpp"
#include "ctp/local_tests.hpp"
#include "ctp/monte_carlo.hpp"
#include "ctp/permutation.hpp"
#include "ctp/rng.hpp"
#include "ctp/shortcuts.hpp"
#include "ctp/stats.hpp"
#include "ctp/subset.hpp"
