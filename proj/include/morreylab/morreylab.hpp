#pragma once

// Umbrella header.

#include "morreylab/checks.hpp"
#include "morreylab/error.hpp"
#include "morreylab/field.hpp"
#include "morreylab/fit.hpp"
#include "morreylab/geometry.hpp"
#include "morreylab/heat_kernel.hpp"
#include "morreylab/hmf.hpp"
#include "morreylab/morrey.hpp"
#include "morreylab/oracle.hpp"
#include "morreylab/profiles.hpp"
#include "morreylab/runner.hpp"
#include "morreylab/scenario.hpp"
#include "morreylab/semilinear.hpp"
#include "morreylab/spectral.hpp"
#include "morreylab/version.hpp"
