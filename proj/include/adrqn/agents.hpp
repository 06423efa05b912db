#pragma once

#include "adrqn/agents/network.hpp"
#include "adrqn/agents/training.hpp"
