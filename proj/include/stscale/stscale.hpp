#pragma once

#include "stscale/errors.hpp"
#include "stscale/io.hpp"
#include "stscale/levy.hpp"
#include "stscale/montecarlo.hpp"
#include "stscale/spacetime.hpp"
#include "stscale/volterra.hpp"
