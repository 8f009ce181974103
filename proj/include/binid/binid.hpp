#ifndef BINID_BINID_HPP
#define BINID_BINID_HPP

/// Umbrella header: recursive identification from binary-valued observations
/// (projected quasi-Newton estimator), the adaptive predictor and tracking
/// controller built on it, and the simulation harness.

#include "binid/adaptation.hpp"
#include "binid/config.hpp"
#include "binid/errors.hpp"
#include "binid/estimator.hpp"
#include "binid/geometry.hpp"
#include "binid/linalg.hpp"
#include "binid/noise.hpp"
#include "binid/normal.hpp"
#include "binid/plots.hpp"
#include "binid/rng.hpp"
#include "binid/sim.hpp"

#endif // BINID_BINID_HPP
