#pragma once

#include "broxopt/core.hpp"
#include "broxopt/envelope.hpp"
#include "broxopt/experiments.hpp"
#include "broxopt/methods.hpp"
#include "broxopt/minimizer_set.hpp"
#include "broxopt/oracles.hpp"
#include "broxopt/problem_json.hpp"
#include "broxopt/problems.hpp"
#include "broxopt/theory.hpp"
#include "broxopt/trace.hpp"
#include "broxopt/trace_io.hpp"
