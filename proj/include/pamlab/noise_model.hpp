#pragma once

#include <string>
#include <vector>

#include "pamlab/common.hpp"

namespace pamlab {

// Monotone (Fritsch-Carlson) piecewise-cubic table on strictly increasing
// nonnegative abscissae; evaluated on |x| (even extension), constant beyond
// the last node.
struct KernelTable {
    std::vector<double> x, y, d;  // nodes, values, node slopes

    bool empty() const { return x.empty(); }
    double eval(double xi) const;
    static KernelTable from_columns(std::vector<double> x, std::vector<double> y);
    static KernelTable load_csv(const std::string& path);
};

enum class Family { H1, H2 };

// The covariance model of the driving noise: temporal kernel gamma0 and
// spatial spectral density phi (measure mu(dxi) = phi(xi) dxi).
//
// Family H2 is the rough fractional model gamma0(t) = |t|^{2H0-2},
// phi(xi) = |xi|^{1-2H1} with H0 in (1/2,1), H1 in (0,1/2), H0+H1 > 3/4.
// Family H1 supplies phi as a named closed form or a table, with a declared
// concavity constant kappa0, plus a locally integrable gamma0.
struct NoiseSpec {
    Family family = Family::H2;

    // H2 parameters
    double hurst_time = 0.75;   // H0
    double hurst_space = 0.25;  // H1

    // H1 spectral density
    enum class PhiKind { H2Power, BoundedRatio, GaussBump, Zero, Table };
    PhiKind phi_kind = PhiKind::H2Power;
    double phi_param = 0.25;  // H2Power: hurst exponent; others: unused
    KernelTable phi_table;
    double kappa0 = 1.0;

    // H1 temporal kernel
    enum class GammaKind { Power, Exp, Table };
    GammaKind gamma_kind = GammaKind::Power;
    double gamma_param = 0.75;  // Power: exponent a, gamma0=|t|^{2a-2}; Exp: rate
    KernelTable gamma_table;

    double phi(double xi) const;
    // Throws SingularEvaluation at tau = 0 for singular kernels; callers must
    // integrate cell masses instead.
    double gamma0(double tau) const;
    bool gamma0_singular_at_zero() const;
};

// Config block, e.g. {"family":"H2","H0":0.75,"H1":0.25} or
// {"family":"H1","phi":"table","phi_table":"phi.csv","kappa0":1.0,
//  "gamma0":"exp","gamma0_rate":1.0}.
NoiseSpec spec_from_json_text(const std::string& text);
NoiseSpec default_h2_spec();  // H2 with H0=0.75, H1=0.25

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationIssue {
    std::string check;
    bool pass = false;
    std::string witness;  // offending numbers on failure
};

struct ValidationReport {
    bool pass = false;
    std::vector<ValidationIssue> issues;
    std::string to_json() const;
};

// Never throws; every invariant becomes a pass/fail entry with a witness.
ValidationReport validate(const NoiseSpec& spec);

// ---------------------------------------------------------------------------
// Derived quantities
// ---------------------------------------------------------------------------

// Exact \iint_{[a,b]x[c,d]} gamma0(r-v) dr dv. Closed-form double
// antiderivative for the power and exponential kernels, 1-D reduction with
// adaptive quadrature for bounded tabulated kernels. Supports rectangles
// crossing the singular diagonal.
double gamma0_cell_mass(const NoiseSpec& spec, double a, double b, double c,
                        double d);

// Gamma_t = int_{-t}^{t} gamma0.
double gamma_mass(const NoiseSpec& spec, double t);

// Tail/bulk constants of the moment-bound chain:
//   c_n = int_{|eta|>=N} (1 + phi + phi^2)/eta^2,
//   d_n = int_{|eta|<=N} (1 + phi + phi^2).
// Defined for H1-family specs whose density keeps c_n finite; H2 specs are
// rejected (the rough power density makes the tail integral diverge for
// H1 <= 1/4, and the fractional analysis does not use this route).
struct TailConstants {
    double c_n = 0.0;
    double d_n = 0.0;
};
TailConstants dalang_tail_constants(const NoiseSpec& spec, double N,
                                    double rel_tol = 1e-9);

// Roughness exponent (2H0+H1-1)/(2H0) of the H2 family.
double roughness(const NoiseSpec& spec);

// Fejer-type kernel ell_R(xi) = sin^2(R xi) / (pi R xi^2); value R/pi at 0.
double fejer_kernel(double R, double xi);

// int ell_R  (should be 1 for every R), by oscillation-aware quadrature.
double fejer_mass(double R, double rel_tol = 1e-8);

// int ell_R(xi) phi(xi) e^{-c xi^2} dxi  (c >= 0).
double fejer_phi_integral(const NoiseSpec& spec, double R, double gauss_c = 0.0);

// The explicit majorant construction behind the approximation-to-identity
// estimate: delta with phi < eps on [-delta, delta], and
// c_eps = pi^{-1} int_{|xi|>=delta} phi/xi^2, giving
// int ell_R phi <= eps + c_eps / R.
struct FejerMajorant {
    double eps = 0.0;
    double delta = 0.0;
    double c_eps = 0.0;
};
FejerMajorant fejer_majorant(const NoiseSpec& spec, double eps);

// Modified Dalang integral int phi^2/(1+xi^2), with truncation doubling;
// throws DivergentIntegral when it fails to stabilize.
double dalang_integral(const NoiseSpec& spec, double rel_tol = 1e-8);

}  // namespace pamlab
