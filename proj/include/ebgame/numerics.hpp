#pragma once

#include "ebgame/numerics/graph.hpp"
#include "ebgame/numerics/nn.hpp"
#include "ebgame/numerics/ops.hpp"
#include "ebgame/numerics/optim.hpp"
#include "ebgame/numerics/tensor.hpp"
