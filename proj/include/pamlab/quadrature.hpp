#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pamlab/common.hpp"
#include "pamlab/rng.hpp"

namespace pamlab {

struct NoiseSpec;

// ---------------------------------------------------------------------------
// Generic 1-D engines
// ---------------------------------------------------------------------------

// Gauss-Legendre rule on [-1,1]; nodes/weights computed once per order and
// cached. Supported orders: any n in [2, 64].
struct GaussRule {
    std::vector<double> x, w;
};
const GaussRule& gauss_legendre(int n);

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int n);

// Adaptive bisection with a fixed-order rule; error estimated by comparing a
// whole-interval pass against the two halves.
double adaptive_integral(const std::function<double(double)>& f, double a,
                         double b, double rel_tol, int max_depth = 24);

// \int_a^infty f, via truncation windows that double in size until the
// relative change is below rel_tol. Throws DivergentIntegral if the partial
// sums keep drifting after the window cap.
double tail_integral(const std::function<double(double)>& f, double a,
                     double rel_tol);

// ---------------------------------------------------------------------------
// Time grids
// ---------------------------------------------------------------------------

// Uniform grid on [0, t_end] with `cells` cells; node k sits at k*dt.
struct TimeGrid {
    double t_end = 0.0;
    int cells = 0;

    double dt() const { return cells > 0 ? t_end / cells : 0.0; }
    int nodes() const { return cells + 1; }
    double node(int k) const { return k * dt(); }
};

// ---------------------------------------------------------------------------
// Regularized spectral kernel Q_eps
// ---------------------------------------------------------------------------

// Q_eps(x) = 2 * int_0^inf e^{-eps xi^2} phi(xi) cos(x xi) dxi.
// Real and even; eps must be positive.
double q_eps(const NoiseSpec& spec, double eps, double x);

// Cubic-spline cache of Q_eps over [-x_max, x_max]. Values are stored on
// |x| so the table is even by construction.
class QEpsTable {
public:
    QEpsTable() = default;

    double eps() const { return eps_; }
    double x_max() const { return x_max_; }
    int size() const { return static_cast<int>(y_.size()); }
    double q0() const { return y_.empty() ? 0.0 : y_[0]; }

    // Throws ContractViolation when |x| exceeds the tabulated range.
    double eval(double x) const;
    bool covers(double x) const { return std::abs(x) <= x_max_; }

    friend QEpsTable build_q_table(const NoiseSpec&, double, double, int);

private:
    double eps_ = 0.0;
    double x_max_ = 0.0;
    double h_ = 0.0;
    std::vector<double> y_;   // values on 0, h, 2h, ..., x_max
    std::vector<double> m_;   // spline second derivatives
};

// Builds the table and verifies it against direct q_eps at 100 deterministic
// probe points (relative 1e-6); refines the grid up to 5 times on mismatch.
QEpsTable build_q_table(const NoiseSpec& spec, double eps, double x_max,
                        int points);

// ---------------------------------------------------------------------------
// Singular double-time product integration
// ---------------------------------------------------------------------------

// sum over cells of f(midpoint) * exact gamma0 cell mass, over
// [0,ti] x [0,tj] with Mi x Mj uniform cells. First-order accurate in the
// cell width for Lipschitz f; exact when f is constant.
double singular_double_integral(const NoiseSpec& spec,
                                const std::function<double(double, double)>& f,
                                double ti, double tj, int Mi, int Mj);

// ---------------------------------------------------------------------------
// Simplex sampling
// ---------------------------------------------------------------------------

// Uniform sample on SIM_p(t) = {w >= 0 : w_1 + ... + w_p <= t}, via
// normalized exponential spacings. Integration weight is t^p / p!.
void sample_simplex(Rng& rng, int p, double t, double* w);

}  // namespace pamlab
