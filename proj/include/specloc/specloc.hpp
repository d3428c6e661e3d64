#pragma once

#include "specloc/errors.hpp"
#include "specloc/rng.hpp"
#include "specloc/patterns.hpp"
#include "specloc/sampler.hpp"
#include "specloc/quadrature.hpp"
#include "specloc/semicircle.hpp"
#include "specloc/spectral.hpp"
#include "specloc/deloc.hpp"
#include "specloc/sphere.hpp"
#include "specloc/subspace.hpp"
#include "specloc/dyson.hpp"
#include "specloc/harness.hpp"
