#pragma once

/// Umbrella header for the pcurv library.

#include "pcurv/errors.hpp"
#include "pcurv/grid.hpp"
#include "pcurv/symfunc.hpp"
#include "pcurv/conformal.hpp"
#include "pcurv/radial_pde.hpp"
#include "pcurv/exhaustion.hpp"
#include "pcurv/barriers.hpp"
