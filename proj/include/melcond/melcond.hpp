#pragma once

// Umbrella header for the conditioning toolkit.

#include "melcond/types.hpp"
#include "melcond/serialize.hpp"
#include "melcond/dsp.hpp"
#include "melcond/wav.hpp"
#include "melcond/io.hpp"
#include "melcond/pitch.hpp"
#include "melcond/text.hpp"
#include "melcond/rhythm.hpp"
#include "melcond/score.hpp"
#include "melcond/metrics.hpp"
#include "melcond/synth.hpp"
