#pragma once

// Umbrella header.

#include "delaylqr/bounds.hpp"
#include "delaylqr/common.hpp"
#include "delaylqr/config.hpp"
#include "delaylqr/controllers.hpp"
#include "delaylqr/costs.hpp"
#include "delaylqr/csv.hpp"
#include "delaylqr/experiments.hpp"
#include "delaylqr/oracle.hpp"
#include "delaylqr/pattern.hpp"
#include "delaylqr/predictions.hpp"
#include "delaylqr/presets.hpp"
#include "delaylqr/problem.hpp"
#include "delaylqr/riccati.hpp"
#include "delaylqr/rng.hpp"
#include "delaylqr/sim.hpp"
#include "delaylqr/svg.hpp"
#include "delaylqr/trace.hpp"
