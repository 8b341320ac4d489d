#pragma once

#include "mcgrad/bench.hpp"
#include "mcgrad/discrete.hpp"
#include "mcgrad/distributions.hpp"
#include "mcgrad/errors.hpp"
#include "mcgrad/estimators.hpp"
#include "mcgrad/flows.hpp"
#include "mcgrad/importance.hpp"
#include "mcgrad/numeric.hpp"
#include "mcgrad/oracle.hpp"
#include "mcgrad/param_vector.hpp"
#include "mcgrad/rng.hpp"
#include "mcgrad/test_function.hpp"
