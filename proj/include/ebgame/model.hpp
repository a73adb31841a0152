#pragma once

#include "ebgame/model/checkpoint.hpp"
#include "ebgame/model/networks.hpp"
#include "ebgame/model/patches.hpp"
