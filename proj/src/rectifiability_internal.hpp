#pragma once

#include "pgmt/rectifiability.hpp"
#include "spatial_index.hpp"

namespace pgmt::detail {

// beta_numbers on a prebuilt index of the support atoms.
BetaPair beta_with_index(const SpatialIndex& index, const Point& center, double r, const BetaOptions& opts);

} // namespace pgmt::detail
