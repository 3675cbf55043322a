#pragma once

#include <vector>

#include "pamlab/common.hpp"
#include "pamlab/quadrature.hpp"
#include "pamlab/rng.hpp"

namespace pamlab {

// One sampled standard Brownian path on a uniform grid over [0, T].
// Values are never interpolated: callers must query grid nodes exactly
// (integration grids are constructed so every needed time is a node).
struct BrownianPath {
    double dt = 0.0;
    std::vector<double> values;  // values[k] = B(k*dt), values[0] = 0

    int nodes() const { return static_cast<int>(values.size()); }
    double t_end() const { return dt * (nodes() - 1); }

    double value_at_index(int k) const { return values[static_cast<std::size_t>(k)]; }

    // Throws ContractViolation if s is not a grid node (grid-misalignment bug
    // in the caller).
    double value_at(double s) const;
};

BrownianPath sample_path(Rng& rng, const TimeGrid& grid);
inline BrownianPath sample_path(Rng& rng, double T, int steps) {
    TimeGrid g{T, steps};
    return sample_path(rng, g);
}

}  // namespace pamlab
