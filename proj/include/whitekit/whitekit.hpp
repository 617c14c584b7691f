#pragma once

#include "whitekit/error.hpp"
#include "whitekit/io.hpp"
#include "whitekit/linalg.hpp"
#include "whitekit/matrix.hpp"
#include "whitekit/metrics.hpp"
#include "whitekit/probes.hpp"
#include "whitekit/serialize.hpp"
#include "whitekit/synth.hpp"
#include "whitekit/whitening.hpp"
