#pragma once

// Umbrella header.
#include "peakevd/evd.hpp"
#include "peakevd/experiments.hpp"
#include "peakevd/inference.hpp"
#include "peakevd/mle.hpp"
#include "peakevd/mqr.hpp"
#include "peakevd/optim.hpp"
#include "peakevd/profiles.hpp"
#include "peakevd/rng.hpp"
#include "peakevd/serialize.hpp"
#include "peakevd/starts.hpp"
#include "peakevd/types.hpp"
