#pragma once

#include "wakeup/analysis.hpp"
#include "wakeup/array_io.hpp"
#include "wakeup/error.hpp"
#include "wakeup/harness.hpp"
#include "wakeup/model.hpp"
#include "wakeup/protocols.hpp"
#include "wakeup/rng.hpp"
#include "wakeup/schedules.hpp"
