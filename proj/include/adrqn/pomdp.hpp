#pragma once

#include "adrqn/pomdp/belief.hpp"
#include "adrqn/pomdp/model.hpp"
#include "adrqn/pomdp/parser.hpp"
#include "adrqn/pomdp/value_iteration.hpp"
