#pragma once

// Convenience header pulling in the whole library.

namespace covshrink {
inline constexpr const char* kLibraryVersion = "0.1.0";
}

#include "covshrink/baselines.hpp"
#include "covshrink/calibration.hpp"
#include "covshrink/classifier.hpp"
#include "covshrink/csv.hpp"
#include "covshrink/divergence.hpp"
#include "covshrink/errors.hpp"
#include "covshrink/experiments.hpp"
#include "covshrink/extended_real.hpp"
#include "covshrink/lambert_w.hpp"
#include "covshrink/matrix.hpp"
#include "covshrink/portfolio.hpp"
#include "covshrink/rng.hpp"
#include "covshrink/shrinkage.hpp"
#include "covshrink/spectral.hpp"
