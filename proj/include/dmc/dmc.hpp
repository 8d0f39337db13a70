#pragma once

// Umbrella header for the library.
#include "dmc/analysis.hpp"
#include "dmc/climate.hpp"
#include "dmc/config.hpp"
#include "dmc/control.hpp"
#include "dmc/convergence.hpp"
#include "dmc/errors.hpp"
#include "dmc/grid.hpp"
#include "dmc/io.hpp"
#include "dmc/nonlinearity.hpp"
#include "dmc/norms.hpp"
#include "dmc/operator.hpp"
#include "dmc/plan.hpp"
#include "dmc/profile.hpp"
#include "dmc/solver.hpp"
#include "dmc/spectral.hpp"
#include "dmc/synthesis.hpp"
#include "dmc/tridiagonal.hpp"
