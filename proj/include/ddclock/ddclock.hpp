#pragma once

#include "ddclock/errors.hpp"
#include "ddclock/kernels.hpp"
#include "ddclock/lattice.hpp"
#include "ddclock/oracle.hpp"
#include "ddclock/ramsey.hpp"
#include "ddclock/resonance.hpp"
#include "ddclock/rng.hpp"
#include "ddclock/shift.hpp"
#include "ddclock/summation.hpp"
#include "ddclock/vec3.hpp"
