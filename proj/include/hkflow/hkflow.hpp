#pragma once

#include "hkflow/bound_model.hpp"
#include "hkflow/config.hpp"
#include "hkflow/diagnostics.hpp"
#include "hkflow/equilibrium.hpp"
#include "hkflow/errors.hpp"
#include "hkflow/expression.hpp"
#include "hkflow/fitness.hpp"
#include "hkflow/functionals.hpp"
#include "hkflow/grid.hpp"
#include "hkflow/inequality_lab.hpp"
#include "hkflow/parallel.hpp"
#include "hkflow/profile.hpp"
#include "hkflow/quadrature.hpp"
#include "hkflow/run.hpp"
#include "hkflow/solver.hpp"
#include "hkflow/trajectory.hpp"
