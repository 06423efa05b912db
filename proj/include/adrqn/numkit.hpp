#pragma once

#include "adrqn/numkit/adam.hpp"
#include "adrqn/numkit/archive.hpp"
#include "adrqn/numkit/conv2d.hpp"
#include "adrqn/numkit/dense.hpp"
#include "adrqn/numkit/grad_check.hpp"
#include "adrqn/numkit/loss.hpp"
#include "adrqn/numkit/lstm.hpp"
#include "adrqn/numkit/parameter.hpp"
#include "adrqn/numkit/tensor.hpp"
