#pragma once

#include "potforecast/core.hpp"
#include "potforecast/errors.hpp"
#include "potforecast/forecaster.hpp"
#include "potforecast/game.hpp"
#include "potforecast/minimax.hpp"
#include "potforecast/potentials.hpp"
#include "potforecast/randomized.hpp"
#include "potforecast/rng.hpp"
#include "potforecast/transcript_io.hpp"
