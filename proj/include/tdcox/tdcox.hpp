#pragma once

// Penalized Cox regression for counting-process (start, stop] data.

#include "errors.hpp"
#include "survdata.hpp"
#include "likelihood.hpp"
#include "penalty.hpp"
#include "solver.hpp"
#include "parallel.hpp"
#include "predict.hpp"
#include "crossval.hpp"
#include "simtdc.hpp"
