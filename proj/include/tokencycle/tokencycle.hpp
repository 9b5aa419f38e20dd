#pragma once

#include "tokencycle/comparison.hpp"
#include "tokencycle/distributions.hpp"
#include "tokencycle/errors.hpp"
#include "tokencycle/gbm.hpp"
#include "tokencycle/model.hpp"
#include "tokencycle/montecarlo.hpp"
#include "tokencycle/random.hpp"
#include "tokencycle/scenario_io.hpp"
#include "tokencycle/schedule.hpp"
#include "tokencycle/sensitivity.hpp"
#include "tokencycle/statistics.hpp"
#include "tokencycle/version.hpp"
