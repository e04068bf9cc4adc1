#pragma once
// Umbrella header for the lorentz library.

#include "lorentz/common.hpp"
#include "lorentz/expression.hpp"
#include "lorentz/harmonics.hpp"
#include "lorentz/liealg.hpp"
#include "lorentz/renorm.hpp"
#include "lorentz/reps.hpp"
#include "lorentz/shearing.hpp"
#include "lorentz/special.hpp"
#include "lorentz/timechange.hpp"
