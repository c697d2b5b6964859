#pragma once

#include "reshi/error.hpp"
#include "reshi/domain.hpp"
#include "reshi/csv.hpp"
#include "reshi/profiling.hpp"
#include "reshi/regression_tree.hpp"
#include "reshi/recommender.hpp"
#include "reshi/workflow_io.hpp"
#include "reshi/error_model.hpp"
#include "reshi/schedulers.hpp"
#include "reshi/simulator.hpp"
#include "reshi/experiment.hpp"
#include "reshi/report.hpp"
#include "reshi/fixtures.hpp"
