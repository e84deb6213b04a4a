#pragma once

#include "mflq/errors.hpp"
#include "mflq/matrix_core.hpp"
#include "mflq/riccati.hpp"
#include "mflq/bvp_dichotomy.hpp"
#include "mflq/problem.hpp"
#include "mflq/social_opt.hpp"
#include "mflq/mfg.hpp"
#include "mflq/contraction.hpp"
#include "mflq/population_sim.hpp"
