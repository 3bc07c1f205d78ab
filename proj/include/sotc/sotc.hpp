#pragma once

#include "agents.hpp"
#include "harness.hpp"
#include "interval.hpp"
#include "interval_model.hpp"
#include "network.hpp"
#include "random.hpp"
#include "selection.hpp"
#include "sensing.hpp"
#include "statistics.hpp"
