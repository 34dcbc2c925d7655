#ifndef FASTW1_FASTW1_HPP
#define FASTW1_FASTW1_HPP

#include "fastw1/bench.hpp"
#include "fastw1/colt.hpp"
#include "fastw1/colt_block.hpp"
#include "fastw1/common.hpp"
#include "fastw1/data_io.hpp"
#include "fastw1/dense.hpp"
#include "fastw1/oracles.hpp"
#include "fastw1/solvers.hpp"
#include "fastw1/w1_cost.hpp"

#endif  // FASTW1_FASTW1_HPP
