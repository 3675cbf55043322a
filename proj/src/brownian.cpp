#include "pamlab/brownian.hpp"

#include <cmath>

namespace pamlab {

double BrownianPath::value_at(double s) const {
    const double u = s / dt;
    const double k = std::round(u);
    if (std::abs(u - k) > 1e-9 || k < 0 || k >= nodes())
        throw ContractViolation(
            "BrownianPath::value_at: off-node time query (grid misalignment)");
    return values[static_cast<std::size_t>(k)];
}

BrownianPath sample_path(Rng& rng, const TimeGrid& grid) {
    if (grid.cells < 1 || !(grid.t_end > 0.0))
        throw ContractViolation("sample_path: invalid grid");
    BrownianPath p;
    p.dt = grid.dt();
    p.values.resize(static_cast<std::size_t>(grid.cells) + 1);
    p.values[0] = 0.0;
    const double sd = std::sqrt(p.dt);
    double acc = 0.0;
    for (int k = 1; k <= grid.cells; ++k) {
        acc += sd * rng.normal();
        p.values[static_cast<std::size_t>(k)] = acc;
    }
    return p;
}

}  // namespace pamlab
