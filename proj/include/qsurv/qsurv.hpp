// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "qsurv/autodiff.hpp"
#include "qsurv/checkpoint.hpp"
#include "qsurv/data.hpp"
#include "qsurv/errors.hpp"
#include "qsurv/experiments.hpp"
#include "qsurv/metrics.hpp"
#include "qsurv/model.hpp"
#include "qsurv/quadrature.hpp"
#include "qsurv/random.hpp"
#include "qsurv/simulation.hpp"
#include "qsurv/special.hpp"
#include "qsurv/training.hpp"
#include "qsurv/version.hpp"
