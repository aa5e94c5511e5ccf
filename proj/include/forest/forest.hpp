#pragma once

#include "forest/model.hpp"
#include "forest/regime.hpp"
#include "forest/noise.hpp"
#include "forest/sde.hpp"
#include "forest/analysis.hpp"
#include "forest/ensemble.hpp"
#include "forest/io.hpp"
