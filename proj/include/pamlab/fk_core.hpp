#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pamlab/brownian.hpp"
#include "pamlab/noise_model.hpp"
#include "pamlab/quadrature.hpp"

namespace pamlab::fk {

// Regularization, grids and sample counts for the exponential-functional
// Monte Carlo.
struct FkConfig {
    double eps = 0.5;        // spectral regularization, > 0
    int cells_per_unit = 64; // time cells per unit time (M)
    double z_max = 12.0;     // spatial-shift truncation
    int z_panels = 10;       // composite Gauss panels on [0, z_max], mirrored
    int z_rule = 6;          // Gauss order per panel
    int n_paths = 4000;      // path-pair replicates
    bool antithetic = true;  // reuse each path pair with flipped sign
    std::uint64_t seed = 1;
    int threads = 1;
    int chaos_max = 8;
};

void validate_config(const FkConfig& cfg);

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;  // sample standard deviation / sqrt(n)
    long n = 0;
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// The coupling functional of two Brownian paths
// ---------------------------------------------------------------------------

// I(z) = int_0^{ti} int_0^{tj} gamma0(r-v) Q_eps(B^i_{ti-r} - B^j_{tj-v} + z)
// over the midpoint product grid. Paths must be sampled on the half-step grid
// (2*M*t steps over [0,t]) so every required time is a node.
double eval_coupling(const NoiseSpec& spec, const BrownianPath& path_i,
                     const BrownianPath& path_j, double ti, double tj, double z,
                     const FkConfig& cfg);

// Deterministic Brownian expectation of eval_coupling: triple quadrature of
//   iint gamma0(r-v) int e^{-eps xi^2} phi(xi) cos(z xi)
//        e^{-((ti-r)+(tj-v)) xi^2 / 2} dxi dr dv,
// refined by cell doubling until the relative change is below 1e-4.
// Independent of the Monte Carlo path (shares only the cell-mass weights).
double coupling_mean_oracle(const NoiseSpec& spec, double ti, double tj,
                            double z, double eps, int base_cells = 64);

// ---------------------------------------------------------------------------
// Shared per-(replicate, z) samples of I
// ---------------------------------------------------------------------------

// One path-pair ensemble evaluated on the whole z grid (common random
// numbers across z). Row r holds replicate r's profile.
struct CouplingSamples {
    double t1 = 0, t2 = 0, eps = 0;
    std::uint64_t seed = 0;
    std::vector<double> z, w;  // quadrature nodes/weights on [-z_max, z_max]
    std::size_t n_rep = 0;
    std::vector<double> values;  // n_rep x z.size(), row-major

    double at(std::size_t r, std::size_t k) const { return values[r * z.size() + k]; }
    std::size_t center_index() const;  // node nearest z = 0
};

CouplingSamples sample_coupling_profile(const NoiseSpec& spec, double t1,
                                        double t2, const FkConfig& cfg);

// Per-replicate z-integral of fn(I(z)), optionally weighted by the finite-R
// interval-overlap factor max(0, 1 - |z|/(2R)).
McEstimate integrate_profile(const CouplingSamples& s,
                             const std::function<double(double)>& fn,
                             std::optional<double> geometric_R = std::nullopt);

// Pointwise per-z mean/se of fn(I(z)) for profile reports.
void per_z_stats(const CouplingSamples& s,
                 const std::function<double(double)>& fn,
                 std::vector<double>& mean, std::vector<double>& se);

// ---------------------------------------------------------------------------
// Named quantities
// ---------------------------------------------------------------------------

// E[ prod_i u(t_i, x_i) ] = E[ exp( sum_{i<j} I^{i,j}(x_i - x_j) ) ],
// Monte Carlo over independent k-tuples of paths. k = 1 returns exactly 1.
// Throws ExpOverflow if any replicate exceeds the exp guard.
struct MomentPoint {
    double t = 0, x = 0;
};
McEstimate moment_estimate(const NoiseSpec& spec,
                           const std::vector<MomentPoint>& points,
                           const FkConfig& cfg);

// Limit covariance E[G_{t1} G_{t2}] = 2 int E[g(I(z))] dz, g(x) = e^x - x - 1.
// tail_ratio is the endpoint/center ratio of the per-z mean of g; values
// above 1e-3 reject the configured z_max.
struct CovarianceEstimate {
    McEstimate value;
    double tail_ratio = 0.0;
};
CovarianceEstimate limiting_covariance(const NoiseSpec& spec, double t1,
                                       double t2, const FkConfig& cfg);

// Per-chaos limit (1/p!) int E[I(z)^p] dz for p >= 2.
McEstimate chaos_covariance(const NoiseSpec& spec, double t1, double t2, int p,
                            const FkConfig& cfg);
McEstimate chaos_from_samples(const CouplingSamples& s, int p,
                              std::optional<double> geometric_R = std::nullopt);

// Deterministic first-chaos variance density
//   (2R)^{-1} Var[Pi_1 A_t(R)] =
//   2 pi iint gamma0(r-v) int ell_R(xi) phi(xi) e^{-(r+v) xi^2/2} dxi dr dv,
// one value per requested R.
std::vector<double> first_chaos_decay(const NoiseSpec& spec, double t,
                                      const std::vector<double>& R_list,
                                      int cells_per_unit = 64);

}  // namespace pamlab::fk
