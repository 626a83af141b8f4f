#pragma once

// Umbrella header: variational Bayesian neural-network regression with
// uncertainty over both the weights and the likelihood variance, plus the
// fixed-variance and frequentist baselines and the experiment pipeline.

#include "vbnet/data.hpp"
#include "vbnet/errors.hpp"
#include "vbnet/experiment.hpp"
#include "vbnet/inference.hpp"
#include "vbnet/likelihood.hpp"
#include "vbnet/math.hpp"
#include "vbnet/matrix.hpp"
#include "vbnet/net.hpp"
#include "vbnet/objective.hpp"
#include "vbnet/priors.hpp"
#include "vbnet/rng.hpp"
#include "vbnet/trainer.hpp"
#include "vbnet/variational.hpp"
