#pragma once

#include "dsm/baselines.hpp"
#include "dsm/cli.hpp"
#include "dsm/engine.hpp"
#include "dsm/errors.hpp"
#include "dsm/metrics.hpp"
#include "dsm/model.hpp"
#include "dsm/pareto.hpp"
#include "dsm/scenario.hpp"
