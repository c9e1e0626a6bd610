#pragma once

// Umbrella header for the continuous-variable teleportation network library.

#include "exact.hpp"          // IWYU pragma: export
#include "gaussian_state.hpp" // IWYU pragma: export
#include "linear_form.hpp"    // IWYU pragma: export
#include "network.hpp"        // IWYU pragma: export
#include "rng.hpp"            // IWYU pragma: export
#include "symplectic.hpp"     // IWYU pragma: export
#include "teleport.hpp"       // IWYU pragma: export
