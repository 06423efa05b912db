#pragma once

#include "adrqn/harness/checkpoint.hpp"
#include "adrqn/harness/config.hpp"
#include "adrqn/harness/csv.hpp"
#include "adrqn/harness/drivers.hpp"
#include "adrqn/harness/evaluate.hpp"
#include "adrqn/harness/gradient_suite.hpp"
#include "adrqn/harness/seeding.hpp"
#include "adrqn/harness/stats.hpp"
#include "adrqn/harness/train.hpp"
