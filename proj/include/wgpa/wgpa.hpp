#pragma once

// Umbrella header for the gradual service-procurement auction library.

#include "wgpa/alloc_search.hpp"
#include "wgpa/mechanism.hpp"
#include "wgpa/model.hpp"
#include "wgpa/payments.hpp"
#include "wgpa/random.hpp"
#include "wgpa/simharness.hpp"
#include "wgpa/strategy_eval.hpp"
#include "wgpa/time_opt.hpp"
