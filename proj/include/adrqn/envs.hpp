#pragma once

#include "adrqn/envs/environment.hpp"
#include "adrqn/envs/factory.hpp"
#include "adrqn/envs/minipong.hpp"
#include "adrqn/envs/pomdp_env.hpp"
#include "adrqn/envs/tmaze.hpp"
#include "adrqn/envs/wrappers.hpp"
