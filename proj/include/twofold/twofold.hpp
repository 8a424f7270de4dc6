#pragma once

// Umbrella header for the twofold library.

#include "twofold/bifurcation.hpp"
#include "twofold/classify.hpp"
#include "twofold/core.hpp"
#include "twofold/error.hpp"
#include "twofold/flow.hpp"
#include "twofold/maps.hpp"
#include "twofold/oracle_family.hpp"
#include "twofold/parallel.hpp"
#include "twofold/roots.hpp"
#include "twofold/svg.hpp"
#include "twofold/system_io.hpp"
