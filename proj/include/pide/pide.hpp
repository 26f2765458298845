#pragma once

/// Umbrella header: variable-step IMEX BDF2 solver for 1-D parabolic
/// integro-differential equations with graded time meshes.

#include "pide/grid.hpp"
#include "pide/harness.hpp"
#include "pide/integral.hpp"
#include "pide/kernels.hpp"
#include "pide/mesh.hpp"
#include "pide/problems.hpp"
#include "pide/stepper.hpp"
#include "pide/tridiag.hpp"
