#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pamlab/fk_core.hpp"
#include "pamlab/noise_model.hpp"

namespace pamlab::bounds {

using fk::McEstimate;

// Weight Theta of the moment functionals: 1, the heat kernel G(a, .),
// the Fejer kernel ell_R, or ell_R restricted to {|x| >= delta}.
struct WeightTheta {
    enum class Kind { Unit, HeatKernel, Fejer, FejerComplement };
    Kind kind = Kind::Unit;
    double a = 0.0;      // HeatKernel width, in (0,1)
    double R = 0.0;      // Fejer scale
    double delta = 0.0;  // FejerComplement cut

    double operator()(double x) const;
    bool integrable() const { return kind != Kind::Unit; }
    static WeightTheta unit() { return {}; }
    static WeightTheta heat(double a) { return {Kind::HeatKernel, a, 0, 0}; }
    static WeightTheta fejer(double R) { return {Kind::Fejer, 0, R, 0}; }
    static WeightTheta fejer_complement(double R, double delta) {
        return {Kind::FejerComplement, 0, R, delta};
    }
    std::string name() const;
};

// ---------------------------------------------------------------------------
// Monte Carlo evaluation of the moment functionals
// ---------------------------------------------------------------------------

// K1(Theta, p, t) = p! int_{SIM_p(t)} dw int deta Theta(eta_p)
//                   e^{-(1/2) sum w_k eta_k^2} prod phi(eta_j - eta_{j-1}).
// Importance sampling: w uniform on the simplex (weight t^p), eta_k Gaussian
// with variance 1/w_k (weight sqrt(2 pi / w_k) each). Unbiased.
McEstimate k1p(const NoiseSpec& spec, const WeightTheta& theta, int p, double t,
               long n_samples, std::uint64_t seed, int threads = 1);

// K2(Theta, p, t) = p! int_{SIM_p(t)} dw ( int deta ... e^{-sum w eta^2} )^{1/(2H0)}.
// Nested estimator: uniform outer simplex points, inner Gaussian importance
// estimate raised to the concave power. The jackknife bias proxy of the
// nonlinearity is reported alongside.
struct K2Estimate {
    McEstimate est;
    double jackknife_bias = 0.0;
};
K2Estimate k2p(const NoiseSpec& spec, const WeightTheta& theta, int p, double t,
               long n_outer, long n_inner, std::uint64_t seed, int threads = 1);

// Deterministic closed form for p = 1 (quadrature oracle for tests and
// constant calibration): K2(1, 1, t) via the exact inner Gaussian integral.
double k2_p1_quadrature(const NoiseSpec& spec, double t);

// ---------------------------------------------------------------------------
// Explicit bound right-hand sides
// ---------------------------------------------------------------------------

enum class BoundKind {
    K1Unit,      // K1(1,t)     <= (p!/2k0) (8 k0 C_N)^p e^{t D_N/(2 C_N)}
    K1Weighted,  // K1(Theta,t) <= p! t (int Theta (1+phi)) (1/2)(8 k0 C_N)^{p-1} e^{...}
    K2Weighted,  // K2(Theta,t) <= p! C_Theta C1^p t^{...}/Gamma(...)
    K2Unit,      // K2(1,t)     <= p! C2^p t^{p h}/Gamma(p h + 1)
};
std::string bound_kind_name(BoundKind k);

// log of the bound value. K1 bounds require H1-family specs (tail constants);
// N selects the split frequency. K2 bounds require the H2 family.
double bound_rhs_log(const NoiseSpec& spec, BoundKind kind, int p, double t,
                     std::optional<double> N = std::nullopt,
                     std::optional<WeightTheta> theta = std::nullopt);

// K1 arithmetic with injected constants (testable pure formulas).
double k1_unit_bound_log(int p, double t, double kappa0, const TailConstants& c);
double k1_weighted_bound_log(int p, double t, double kappa0,
                             const TailConstants& c, double theta_prefactor);

// int Theta(x) (1 + phi(x)) dx (K1 route) or int Theta(x)(1+|x|^{1-2H1}) dx
// (K2 route; identical for H2 specs). Unit weight is rejected.
double theta_prefactor(const NoiseSpec& spec, const WeightTheta& theta);

// Explicit constant of the K2 bounds, from the concavity-expansion +
// Dirichlet-integral derivation; depends only on (H0, H1). The p = 1 value
// of the resulting bound coincides with the exact K2(1,1,t).
double derived_c2(const NoiseSpec& spec, int p_max = 8);

// smallest N (by doubling) with 8 kappa0 Gamma_t C_N < 1
double auto_split_frequency(const NoiseSpec& spec, double t);

// ---------------------------------------------------------------------------
// Concavity expansion
// ---------------------------------------------------------------------------

// The index family A_p of the expansion
//   x_1 prod_{j=2}^p (x_j + x_{j-1}) = sum_{beta in A_p} prod_k x_k^{beta_k},
// enumerated exactly (p <= 16; cardinality 2^{p-1}).
std::vector<std::vector<int>> concavity_expansion(int p);

// sum over A_p of prod_j g(beta_j) without enumeration (linear DP),
// optionally with a distinct weight for the final position.
double expansion_weighted_sum(int p, const std::function<double(int)>& g);
double expansion_weighted_sum_split(int p, const std::function<double(int)>& g,
                                    const std::function<double(int)>& g_last);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct BoundReport {
    BoundKind which = BoundKind::K1Unit;
    int p = 0;
    double t = 0.0;
    std::string theta;
    double estimate = 0.0;
    double se = 0.0;
    double bound_log = 0.0;  // bounds can overflow doubles; kept in logs
    double bound = 0.0;      // exp(bound_log), +inf if out of range
    double margin = 0.0;     // bound - estimate (inf when bound overflows)
    bool pass = false;       // estimate - 3 se <= bound
};

// int ell_R phi for each R (Fejer-weighted density mass).
std::vector<double> lemma_fejer_curve(const NoiseSpec& spec,
                                      const std::vector<double>& R_list);

}  // namespace pamlab::bounds
