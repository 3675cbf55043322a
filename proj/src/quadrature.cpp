#include "pamlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "pamlab/noise_model.hpp"

namespace pamlab {

// ---------------------------------------------------------------------------
// Gauss-Legendre
// ---------------------------------------------------------------------------

static GaussRule make_rule(int n) {
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    // Newton iteration on Legendre roots, symmetric pairs.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return r;
}

const GaussRule& gauss_legendre(int n) {
    if (n < 2 || n > 64) throw ContractViolation("gauss_legendre: order out of range");
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_rule(n)).first;
    return it->second;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int n) {
    const GaussRule& r = gauss_legendre(n);
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += r.w[i] * f(c + h * r.x[i]);
    return s * h;
}

namespace {

double adapt_rec(const std::function<double(double)>& f, double a, double b,
                 double whole, double tol, int depth, int max_depth) {
    const double m = 0.5 * (a + b);
    const double left = integrate_gl(f, a, m, 12);
    const double right = integrate_gl(f, m, b, 12);
    const double err = std::abs(left + right - whole);
    if (depth >= max_depth || err <= tol * (std::abs(left + right) + 1e-300) ||
        err < 1e-300)
        return left + right;
    return adapt_rec(f, a, m, left, tol, depth + 1, max_depth) +
           adapt_rec(f, m, b, right, tol, depth + 1, max_depth);
}

}  // namespace

double adaptive_integral(const std::function<double(double)>& f, double a,
                         double b, double rel_tol, int max_depth) {
    if (a == b) return 0.0;
    return adapt_rec(f, a, b, integrate_gl(f, a, b, 12), rel_tol, 0, max_depth);
}

double tail_integral(const std::function<double(double)>& f, double a,
                     double rel_tol) {
    // Phase 1: truncation-doubling windows. This both detects divergence
    // (near-constant or growing window contributions, e.g. 1/x tails) and
    // gives a coarse value.
    double lo = std::max(a, 1e-12);
    double hi = 2.0 * std::max(lo, 1.0);
    double total = 0.0;
    bool settled = false;
    double prev_window = 0.0;
    for (int k = 0; k < 40; ++k) {
        const double window = integrate_gl(f, lo, hi, 24);
        total += window;
        if (std::abs(window) <= 1e-4 * std::abs(total) + 1e-300) {
            settled = true;
            break;
        }
        if (k > 12 && std::abs(window) > 0.85 * std::abs(prev_window))
            throw DivergentIntegral(
                "tail integral did not stabilize under truncation doubling");
        prev_window = window;
        lo = hi;
        hi *= 2.0;
    }
    if (!settled)
        throw DivergentIntegral("tail integral: window cap reached before stabilizing");

    // Phase 2: accurate pass via xi = x0 / t^2 (t in (0,1]), which flattens
    // algebraic tails down to |f| ~ xi^{-3/2}.
    const double x0 = std::max(a, 1e-12);
    auto mapped = [&](double t) {
        const double xi = x0 / (t * t);
        return 2.0 * x0 * f(xi) / (t * t * t);
    };
    double result = adaptive_integral(mapped, 0.0, 1.0, rel_tol);
    if (a <= 0.0) result += adaptive_integral(f, a, x0, rel_tol);
    return result;
}

// ---------------------------------------------------------------------------
// Q_eps
// ---------------------------------------------------------------------------

namespace {

// Composite Gauss panels for 2 * int_0^Xi e^{-eps xi^2} phi(xi) cos(x xi),
// with the cutoff chosen so the dropped tail is ~1e-16 of the whole.
double q_eps_panels(const NoiseSpec& spec, double eps, double x, double xi_max,
                    double panel_w) {
    const int npan = std::max(1, static_cast<int>(std::ceil(xi_max / panel_w)));
    const double w = xi_max / npan;
    const GaussRule& r = gauss_legendre(12);
    double s = 0.0;
    for (int p = 0; p < npan; ++p) {
        const double c = (p + 0.5) * w, h = 0.5 * w;
        double ps = 0.0;
        for (int i = 0; i < 12; ++i) {
            const double xi = c + h * r.x[i];
            ps += r.w[i] * std::exp(-eps * xi * xi) * spec.phi(xi) *
                  std::cos(x * xi);
        }
        s += ps * h;
    }
    return 2.0 * s;
}

double q_xi_cutoff(double eps) {
    // e^{-eps xi^2} < 1e-17 at the cutoff; the polynomially growing densities
    // supported here cannot overcome that.
    return std::sqrt(40.0 / eps);
}

}  // namespace

double q_eps(const NoiseSpec& spec, double eps, double x) {
    if (!(eps > 0.0))
        throw ContractViolation("q_eps: eps must be positive (the unregularized "
                                "integral is out of contract)");
    if (!std::isfinite(x)) throw ContractViolation("q_eps: non-finite argument");
    const double xi_max = q_xi_cutoff(eps);
    const double panel_w =
        std::min({M_PI / (2.0 * (std::abs(x) + 1.0)), 0.5 * std::sqrt(eps), xi_max / 8.0});
    return q_eps_panels(spec, eps, x, xi_max, panel_w);
}

double QEpsTable::eval(double x) const {
    const double ax = std::abs(x);
    if (ax > x_max_ * (1.0 + 1e-12))
        throw ContractViolation("QEpsTable: query outside tabulated range");
    const int n = static_cast<int>(y_.size());
    double u = ax / h_;
    int i = static_cast<int>(u);
    if (i >= n - 1) i = n - 2;
    const double t = u - i;
    const double h2 = h_ * h_;
    // natural cubic spline
    const double a = 1.0 - t, b = t;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h2 / 6.0;
}

QEpsTable build_q_table(const NoiseSpec& spec, double eps, double x_max,
                        int points) {
    if (!(eps > 0.0) || !(x_max > 0.0))
        throw ContractViolation("build_q_table: eps and x_max must be positive");
    if (points < 64) points = 64;

    const double xi_max = q_xi_cutoff(eps);
    for (int attempt = 0; attempt < 6; ++attempt) {
        QEpsTable tab;
        tab.eps_ = eps;
        tab.x_max_ = x_max;
        const int n = points + 1;
        tab.h_ = x_max / points;
        tab.y_.resize(n);

        // Shared xi discretization for all table nodes: panels fine enough for
        // the largest |x| in the table and for the sqrt(eps) scale.
        const double panel_w =
            std::min({M_PI / (2.0 * (x_max + 1.0)), 0.5 * std::sqrt(eps), xi_max / 8.0});
        const int npan = std::max(1, static_cast<int>(std::ceil(xi_max / panel_w)));
        const double w = xi_max / npan;
        const GaussRule& r = gauss_legendre(12);
        std::vector<double> xi_nodes(static_cast<std::size_t>(npan) * 12);
        std::vector<double> f_nodes(xi_nodes.size());
        for (int p = 0; p < npan; ++p) {
            const double c = (p + 0.5) * w, hh = 0.5 * w;
            for (int i = 0; i < 12; ++i) {
                const double xi = c + hh * r.x[i];
                xi_nodes[p * 12 + i] = xi;
                f_nodes[p * 12 + i] =
                    r.w[i] * hh * std::exp(-eps * xi * xi) * spec.phi(xi);
            }
        }
        parallel_for(n, 0, [&](std::size_t k) {
            const double xk = k * tab.h_;
            double s = 0.0;
            for (std::size_t q = 0; q < xi_nodes.size(); ++q)
                s += f_nodes[q] * std::cos(xk * xi_nodes[q]);
            tab.y_[k] = 2.0 * s;
        });

        // natural spline second derivatives: Thomas solve of
        // m[i-1] + 4 m[i] + m[i+1] = 6*(y[i-1]-2y[i]+y[i+1])/h^2, m[0]=m[n-1]=0
        tab.m_.assign(n, 0.0);
        if (n >= 3) {
            std::vector<double> cp(n, 0.0), dp(n, 0.0);
            auto rhs = [&](int i) {
                return 6.0 * (tab.y_[i - 1] - 2.0 * tab.y_[i] + tab.y_[i + 1]) /
                       (tab.h_ * tab.h_);
            };
            cp[1] = 1.0 / 4.0;
            dp[1] = rhs(1) / 4.0;
            for (int i = 2; i <= n - 2; ++i) {
                const double denom = 4.0 - cp[i - 1];
                cp[i] = 1.0 / denom;
                dp[i] = (rhs(i) - dp[i - 1]) / denom;
            }
            tab.m_[n - 2] = dp[n - 2];
            for (int i = n - 3; i >= 1; --i) tab.m_[i] = dp[i] - cp[i] * tab.m_[i + 1];
        }

        // probe against the direct evaluation at 100 deterministic points
        Rng rng(RngStream(0x51ab1e5ull, static_cast<std::uint64_t>(attempt),
                          "qtable-probe"));
        bool ok = true;
        for (int k = 0; k < 100 && ok; ++k) {
            const double xp = (2.0 * rng.u01() - 1.0) * x_max;
            const double direct = q_eps(spec, eps, xp);
            const double got = tab.eval(xp);
            const double scale = std::max(std::abs(direct), 1e-12 * tab.q0());
            if (std::abs(got - direct) > 1e-6 * scale) ok = false;
        }
        if (ok) return tab;
        points *= 2;
    }
    throw Error("build_q_table: probe mismatch persisted after 5 refinements");
}

// ---------------------------------------------------------------------------
// Singular double integral
// ---------------------------------------------------------------------------

double singular_double_integral(const NoiseSpec& spec,
                                const std::function<double(double, double)>& f,
                                double ti, double tj, int Mi, int Mj) {
    if (ti <= 0.0 || tj <= 0.0) return 0.0;
    const double hi = ti / Mi, hj = tj / Mj;
    double total = 0.0;
    for (int i = 0; i < Mi; ++i) {
        const double r = (i + 0.5) * hi;
        for (int j = 0; j < Mj; ++j) {
            const double v = (j + 0.5) * hj;
            const double mass =
                gamma0_cell_mass(spec, i * hi, (i + 1) * hi, j * hj, (j + 1) * hj);
            total += mass * f(r, v);
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Simplex sampling
// ---------------------------------------------------------------------------

void sample_simplex(Rng& rng, int p, double t, double* w) {
    if (p < 1 || !(t > 0.0)) throw ContractViolation("sample_simplex: need p>=1, t>0");
    double sum = 0.0;
    for (int i = 0; i < p; ++i) {
        w[i] = rng.exponential();
        sum += w[i];
    }
    sum += rng.exponential();  // the slack coordinate
    const double scale = t / sum;
    for (int i = 0; i < p; ++i) w[i] *= scale;
}

}  // namespace pamlab
