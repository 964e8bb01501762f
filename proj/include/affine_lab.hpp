// Umbrella header.
#pragma once

#include "affine_lab/params.hpp"
#include "affine_lab/rng.hpp"
#include "affine_lab/ode.hpp"
#include "affine_lab/transform.hpp"
#include "affine_lab/noise.hpp"
#include "affine_lab/sde.hpp"
#include "affine_lab/parallel.hpp"
#include "affine_lab/presets.hpp"
#include "affine_lab/validate.hpp"
#include "affine_lab/config.hpp"
#include "affine_lab/cli.hpp"
