#pragma once

#include "cotrack/baseline_compare.hpp"
#include "cotrack/config.hpp"
#include "cotrack/connectivity.hpp"
#include "cotrack/core.hpp"
#include "cotrack/estimation.hpp"
#include "cotrack/io.hpp"
#include "cotrack/models.hpp"
#include "cotrack/planner.hpp"
#include "cotrack/runner.hpp"
#include "cotrack/safety_filter.hpp"
#include "cotrack/simulator.hpp"
