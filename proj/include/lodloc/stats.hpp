#pragma once

#include <vector>

namespace lodloc {

/// Median with the midpoint rule for even counts.
double median(std::vector<double> values);

/// Percent change relative to the LoD3 value, rounded to integer percent:
/// round(100 * (lod3 - lod2) / lod3). This is the direction the feature
/// tables use (20 -> 65 gives 69%).
int compute_gain(double lod2_value, double lod3_value);

/// Gain for standard deviations, where smaller is better: equals
/// compute_gain applied to the accuracies 1/sigma, which reduces to
/// round(100 * (lod2 - lod3) / lod2).
int sigma_gain(double lod2_sigma, double lod3_sigma);

}  // namespace lodloc
