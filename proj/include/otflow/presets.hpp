#pragma once

#include "otflow/mmspace.hpp"

#include <map>
#include <string>

namespace otflow {

using PresetParams = std::map<std::string, double>;

/// Deterministic fields evaluated on the space's coordinate x (i/n without a generator).
///   constant    value (1)
///   cosine_mode offset (1) + amplitude (1) cos(2 pi k x), k (1)
///   bump        exp(-d(x, x_c)^2 / (2 width^2)), center (0.5), width (0.1); x_c nearest point to center
///   ramp        x
///   indicator   1 on lo <= x < hi, lo (0), hi (0.5)
///   dirac_like  1 / m_at at index at (0)
/// Throws UnknownPreset.
ScalarField preset_field(const std::string& kind, const PresetParams& params, const MetricMeasureSpace& space);

/// preset_field normalized to sum f m = 1, the heaviest entry absorbing the rounding.
DensityField preset_density(const std::string& kind, const PresetParams& params, const MetricMeasureSpace& space);

}  // namespace otflow
