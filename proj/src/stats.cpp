#include "lodloc/stats.hpp"

#include <algorithm>
#include <cmath>

#include "lodloc/errors.hpp"

namespace lodloc {

double median(std::vector<double> values) {
    if (values.empty()) throw EmptySetError("median of an empty list");
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

int compute_gain(double lod2_value, double lod3_value) {
    if (lod3_value == 0)
        throw DivisionByZeroError("compute_gain: LoD3 value must be nonzero");
    return static_cast<int>(std::lround(100.0 * (lod3_value - lod2_value) / lod3_value));
}

int sigma_gain(double lod2_sigma, double lod3_sigma) {
    if (lod2_sigma == 0)
        throw DivisionByZeroError("sigma_gain: LoD2 sigma must be nonzero");
    return static_cast<int>(std::lround(100.0 * (lod2_sigma - lod3_sigma) / lod2_sigma));
}

}  // namespace lodloc
