#pragma once

#include "gcrit/errors.hpp"
#include "gcrit/geometry.hpp"
#include "gcrit/special.hpp"
#include "gcrit/types.hpp"
#include "gcrit/parallel.hpp"
#include "gcrit/spectral_models.hpp"
#include "gcrit/theory.hpp"
#include "gcrit/field_sampler.hpp"
#include "gcrit/critical_finder.hpp"
#include "gcrit/stats.hpp"
#include "gcrit/empirical_stats.hpp"
#include "gcrit/kacrice.hpp"
