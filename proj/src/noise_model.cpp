#include "pamlab/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pamlab/quadrature.hpp"

namespace pamlab {

// ---------------------------------------------------------------------------
// KernelTable
// ---------------------------------------------------------------------------

KernelTable KernelTable::from_columns(std::vector<double> x, std::vector<double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ContractViolation("kernel table: need two equal columns, >= 2 rows");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]) || x[i] < 0.0)
            throw ContractViolation("kernel table: entries must be finite, xi >= 0");
        if (i > 0 && x[i] <= x[i - 1])
            throw ContractViolation("kernel table: xi must be strictly increasing");
    }
    KernelTable t;
    t.x = std::move(x);
    t.y = std::move(y);
    const std::size_t n = t.x.size();
    t.d.assign(n, 0.0);
    // Fritsch-Butland monotone slopes
    std::vector<double> h(n - 1), del(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = t.x[i + 1] - t.x[i];
        del[i] = (t.y[i + 1] - t.y[i]) / h[i];
    }
    t.d[0] = del[0];
    t.d[n - 1] = del[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (del[i - 1] * del[i] <= 0.0) {
            t.d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            t.d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
        }
    }
    return t;
}

KernelTable KernelTable::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ContractViolation("kernel table: cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw ContractViolation("kernel table: empty file " + path);
    // header row required
    std::vector<double> xs, ys;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double a, b;
        if (!(ss >> a >> b))
            throw ContractViolation("kernel table: bad row in " + path + ": " + line);
        xs.push_back(a);
        ys.push_back(b);
    }
    return from_columns(std::move(xs), std::move(ys));
}

double KernelTable::eval(double xi) const {
    const double ax = std::abs(xi);
    if (ax <= x.front()) return y.front();
    if (ax >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), ax);
    const std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
    const double h = x[i + 1] - x[i];
    const double t = (ax - x[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y[i] + (t3 - 2 * t2 + t) * h * d[i] +
           (-2 * t3 + 3 * t2) * y[i + 1] + (t3 - t2) * h * d[i + 1];
}

// ---------------------------------------------------------------------------
// NoiseSpec evaluation
// ---------------------------------------------------------------------------

double NoiseSpec::phi(double xi) const {
    if (!std::isfinite(xi)) throw ContractViolation("phi: non-finite frequency");
    const double ax = std::abs(xi);
    if (family == Family::H2) return std::pow(ax, 1.0 - 2.0 * hurst_space);
    switch (phi_kind) {
        case PhiKind::H2Power: return std::pow(ax, 1.0 - 2.0 * phi_param);
        case PhiKind::BoundedRatio: return ax / (1.0 + ax);
        case PhiKind::GaussBump: return ax * ax * std::exp(-ax * ax);
        case PhiKind::Zero: return 0.0;
        case PhiKind::Table: return phi_table.eval(ax);
    }
    return 0.0;
}

bool NoiseSpec::gamma0_singular_at_zero() const {
    if (family == Family::H2) return true;
    return gamma_kind == GammaKind::Power && gamma_param < 1.0;
}

double NoiseSpec::gamma0(double tau) const {
    if (!std::isfinite(tau)) throw ContractViolation("gamma0: non-finite lag");
    const double at = std::abs(tau);
    const double a = (family == Family::H2) ? hurst_time : gamma_param;
    if (family == Family::H2 || gamma_kind == GammaKind::Power) {
        if (at == 0.0 && a < 1.0)
            throw SingularEvaluation(
                "gamma0 is singular at lag 0; integrate cell masses instead");
        return std::pow(at, 2.0 * a - 2.0);
    }
    if (gamma_kind == GammaKind::Exp) return std::exp(-gamma_param * at);
    return gamma_table.eval(at);
}

NoiseSpec default_h2_spec() { return NoiseSpec{}; }

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

NoiseSpec spec_from_json(const nlohmann::json& j) {
    NoiseSpec s;
    const std::string fam = j.value("family", "H2");
    if (fam == "H2") {
        s.family = Family::H2;
        s.hurst_time = j.value("H0", 0.75);
        s.hurst_space = j.value("H1", 0.25);
        s.kappa0 = 1.0;
        return s;
    }
    if (fam != "H1") throw ContractViolation("spec: family must be H1 or H2");
    s.family = Family::H1;
    s.kappa0 = j.value("kappa0", 1.0);
    const std::string phi = j.value("phi", "bounded_ratio");
    if (phi == "power") {
        s.phi_kind = NoiseSpec::PhiKind::H2Power;
        s.phi_param = j.value("phi_hurst", 0.25);
    } else if (phi == "bounded_ratio") {
        s.phi_kind = NoiseSpec::PhiKind::BoundedRatio;
    } else if (phi == "gauss_bump") {
        s.phi_kind = NoiseSpec::PhiKind::GaussBump;
    } else if (phi == "zero") {
        s.phi_kind = NoiseSpec::PhiKind::Zero;
    } else if (phi == "table") {
        s.phi_kind = NoiseSpec::PhiKind::Table;
        if (j.contains("phi_table_inline")) {
            std::vector<double> xs, ys;
            for (const auto& row : j.at("phi_table_inline")) {
                xs.push_back(row.at(0).get<double>());
                ys.push_back(row.at(1).get<double>());
            }
            s.phi_table = KernelTable::from_columns(std::move(xs), std::move(ys));
        } else {
            s.phi_table = KernelTable::load_csv(j.at("phi_table").get<std::string>());
        }
    } else {
        throw ContractViolation("spec: unknown phi model '" + phi + "'");
    }
    const std::string g0 = j.value("gamma0", "exp");
    if (g0 == "power") {
        s.gamma_kind = NoiseSpec::GammaKind::Power;
        s.gamma_param = j.value("gamma0_hurst", 0.75);
    } else if (g0 == "exp") {
        s.gamma_kind = NoiseSpec::GammaKind::Exp;
        s.gamma_param = j.value("gamma0_rate", 1.0);
    } else if (g0 == "table") {
        s.gamma_kind = NoiseSpec::GammaKind::Table;
        if (j.contains("gamma0_table_inline")) {
            std::vector<double> xs, ys;
            for (const auto& row : j.at("gamma0_table_inline")) {
                xs.push_back(row.at(0).get<double>());
                ys.push_back(row.at(1).get<double>());
            }
            s.gamma_table = KernelTable::from_columns(std::move(xs), std::move(ys));
        } else {
            s.gamma_table = KernelTable::load_csv(j.at("gamma0_table").get<std::string>());
        }
    } else {
        throw ContractViolation("spec: unknown gamma0 model '" + g0 + "'");
    }
    return s;
}

NoiseSpec spec_from_json_text(const std::string& text) {
    return spec_from_json(nlohmann::json::parse(text));
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

ValidationReport validate(const NoiseSpec& spec) {
    ValidationReport rep;
    auto add = [&](const std::string& check, bool pass, const std::string& wit) {
        rep.issues.push_back({check, pass, wit});
    };

    if (spec.family == Family::H2) {
        const double H0 = spec.hurst_time, H1 = spec.hurst_space;
        add("h2_hurst_time_range", H0 > 0.5 && H0 < 1.0, "H0=" + num(H0));
        add("h2_hurst_space_range", H1 > 0.0 && H1 < 0.5, "H1=" + num(H1));
        add("h2_hurst_sum", H0 + H1 > 0.75,
            "H0+H1=" + num(H0 + H1) + (H0 + H1 > 0.75 ? " > 3/4" : " <= 3/4"));
    } else {
        add("h1_kappa0_positive", spec.kappa0 > 0.0, "kappa0=" + num(spec.kappa0));
        if (spec.gamma_kind == NoiseSpec::GammaKind::Power)
            add("h1_gamma0_exponent",
                spec.gamma_param > 0.5 && spec.gamma_param <= 1.0,
                "a=" + num(spec.gamma_param));
    }

    // phi(0) = 0 and evenness on a deterministic grid
    bool even_ok = true, zero_ok = true;
    std::string even_wit = "even on sampled grid";
    try {
        const double p0 = spec.phi(0.0);
        const double scale = std::abs(spec.phi(1.0)) + 1.0;
        zero_ok = std::abs(p0) <= 1e-12 * scale;
        if (!zero_ok) even_wit = "";
        add("phi_zero_at_origin", zero_ok, "phi(0)=" + num(p0));
        for (double xi : {0.0316, 0.1, 0.5, 1.0, 3.16, 10.0, 100.0}) {
            const double l = spec.phi(xi), r = spec.phi(-xi);
            if (l != r) {
                even_ok = false;
                even_wit = "phi(" + num(xi) + ")=" + num(l) + " vs phi(-xi)=" + num(r);
                break;
            }
        }
        add("phi_even", even_ok, even_wit);
    } catch (const std::exception& e) {
        add("phi_evaluable", false, e.what());
    }

    // modified Dalang condition; under H2 the admissibility condition
    // H0+H1 > 3/4 replaces it and the tail-constant route is not used.
    if (spec.family == Family::H1) {
        try {
            const double dal = dalang_integral(spec);
            add("dalang_condition", std::isfinite(dal),
                "int phi^2/(1+x^2) ~= " + num(dal));
        } catch (const DivergentIntegral& e) {
            add("dalang_condition", false, e.what());
        }
    } else {
        add("dalang_condition", true,
            "fractional family: admissibility given by H0+H1 > 3/4");
    }

    // concavity spot-check on a deterministic grid
    {
        const double k0 = spec.family == Family::H2 ? 1.0 : spec.kappa0;
        bool ok = true;
        std::string wit = "kappa0=" + num(k0);
        const double grid[] = {-3.0, -1.7, -0.9, -0.4, -0.15, -0.05,
                               0.05, 0.15, 0.4,  0.9,  1.7,   3.0};
        for (double xv : grid) {
            for (double yv : grid) {
                const double lhs = spec.phi(xv + yv);
                const double rhs = k0 * (spec.phi(xv) + spec.phi(yv));
                if (lhs > rhs * (1.0 + 1e-12) + 1e-300) {
                    ok = false;
                    wit = "phi(" + num(xv) + "+" + num(yv) + ")=" + num(lhs) +
                          " > kappa0*(phi(x)+phi(y))=" + num(rhs);
                    break;
                }
            }
            if (!ok) break;
        }
        add("concavity_spot_check", ok, wit);
    }

    // gamma0 local integrability
    try {
        const double g = gamma_mass(spec, 1.0);
        add("gamma0_locally_integrable", std::isfinite(g) && g >= 0.0,
            "Gamma_1=" + num(g));
    } catch (const std::exception& e) {
        add("gamma0_locally_integrable", false, e.what());
    }

    rep.pass = true;
    for (const auto& issue : rep.issues) rep.pass = rep.pass && issue.pass;
    return rep;
}

std::string ValidationReport::to_json() const {
    nlohmann::json j;
    j["pass"] = pass;
    j["checks"] = nlohmann::json::array();
    for (const auto& i : issues)
        j["checks"].push_back({{"check", i.check}, {"pass", i.pass}, {"witness", i.witness}});
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Cell masses and Gamma_t
// ---------------------------------------------------------------------------

namespace {

// second antiderivative of the kernel, G2'' = gamma0, even and C^1
double power_G2(double x, double alpha) {
    return std::pow(std::abs(x), alpha + 2.0) / ((alpha + 1.0) * (alpha + 2.0));
}

double exp_G2(double x, double rate) {
    const double ax = std::abs(x);
    return std::exp(-rate * ax) / (rate * rate) + ax / rate;
}

}  // namespace

double gamma0_cell_mass(const NoiseSpec& spec, double a, double b, double c,
                        double d) {
    if (!(a <= b) || !(c <= d))
        throw ContractViolation("gamma0_cell_mass: need a<=b, c<=d");
    if (a == b || c == d) return 0.0;

    const bool power = spec.family == Family::H2 ||
                       spec.gamma_kind == NoiseSpec::GammaKind::Power;
    if (power) {
        const double h0 = spec.family == Family::H2 ? spec.hurst_time : spec.gamma_param;
        const double alpha = 2.0 * h0 - 2.0;
        return power_G2(b - c, alpha) - power_G2(b - d, alpha) -
               power_G2(a - c, alpha) + power_G2(a - d, alpha);
    }
    if (spec.gamma_kind == NoiseSpec::GammaKind::Exp) {
        const double r = spec.gamma_param;
        return exp_G2(b - c, r) - exp_G2(b - d, r) - exp_G2(a - c, r) +
               exp_G2(a - d, r);
    }
    // Bounded tabulated kernel: reduce to 1-D against the overlap length
    // L(u) = |{r in [a,b] : r-u in [c,d]}|, supported on [a-d, b-c].
    const auto& tab = spec.gamma_table;
    auto f = [&](double u) {
        const double L = std::min(b, d + u) - std::max(a, c + u);
        return L > 0.0 ? tab.eval(u) * L : 0.0;
    };
    std::vector<double> brk = {a - d, a - c, b - d, b - c};
    if (a - d < 0.0 && b - c > 0.0) brk.push_back(0.0);
    std::sort(brk.begin(), brk.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < brk.size(); ++i)
        if (brk[i + 1] > brk[i])
            total += adaptive_integral(f, brk[i], brk[i + 1], 1e-12);
    return total;
}

double gamma_mass(const NoiseSpec& spec, double t) {
    if (t < 0.0) throw ContractViolation("gamma_mass: t must be nonnegative");
    if (t == 0.0) return 0.0;
    const bool power = spec.family == Family::H2 ||
                       spec.gamma_kind == NoiseSpec::GammaKind::Power;
    if (power) {
        const double h0 = spec.family == Family::H2 ? spec.hurst_time : spec.gamma_param;
        return 2.0 * std::pow(t, 2.0 * h0 - 1.0) / (2.0 * h0 - 1.0);
    }
    if (spec.gamma_kind == NoiseSpec::GammaKind::Exp)
        return 2.0 * (1.0 - std::exp(-spec.gamma_param * t)) / spec.gamma_param;
    return 2.0 * adaptive_integral([&](double u) { return spec.gamma_table.eval(u); },
                                   0.0, t, 1e-12);
}

// ---------------------------------------------------------------------------
// Tail constants, roughness
// ---------------------------------------------------------------------------

TailConstants dalang_tail_constants(const NoiseSpec& spec, double N,
                                    double rel_tol) {
    if (!(N > 0.0)) throw ContractViolation("tail constants: N must be positive");
    if (spec.family == Family::H2)
        throw ContractViolation(
            "tail constants are restricted to H1-family specs: the rough power "
            "density makes int phi^2/eta^2 diverge at infinity");
    auto integrand_tail = [&](double eta) {
        const double p = spec.phi(eta);
        return (1.0 + p + p * p) / (eta * eta);
    };
    auto integrand_bulk = [&](double eta) {
        const double p = spec.phi(eta);
        return 1.0 + p + p * p;
    };
    TailConstants out;
    try {
        out.c_n = 2.0 * tail_integral(integrand_tail, N, rel_tol);
    } catch (const DivergentIntegral&) {
        throw DivergentIntegral(
            "tail constant c_N diverges: density violates the modified Dalang "
            "condition");
    }
    out.d_n = 2.0 * adaptive_integral(integrand_bulk, 0.0, N, rel_tol);
    return out;
}

double roughness(const NoiseSpec& spec) {
    if (spec.family != Family::H2)
        throw ContractViolation("roughness exponent is defined for the H2 family");
    return (2.0 * spec.hurst_time + spec.hurst_space - 1.0) / (2.0 * spec.hurst_time);
}

// ---------------------------------------------------------------------------
// Fejer kernel machinery
// ---------------------------------------------------------------------------

double fejer_kernel(double R, double xi) {
    if (!(R > 0.0)) throw ContractViolation("fejer_kernel: R must be positive");
    const double u = R * xi;
    if (std::abs(u) < 1e-4) {
        const double u2 = u * u;
        return R / M_PI * (1.0 - u2 / 3.0 + 2.0 * u2 * u2 / 45.0);
    }
    const double s = std::sin(u);
    return s * s / (M_PI * R * xi * xi);
}

namespace {

// 2 * int_0^inf ell_R(xi) f(xi) e^{-c xi^2} dxi for slowly varying f >= 0.
// Splits sin^2 into (1 - cos 2Rxi)/2 beyond Xi0; the smooth half integrates
// exactly and the oscillatory remainder enters through a two-term
// integration-by-parts correction.
double fejer_weighted(double R, const std::function<double(double)>& f, double c) {
    const double xi0 = M_PI / (2.0 * R);
    // cutoffs: Gaussian if c > 0, otherwise by the by-parts error budget
    double Xi0;
    if (c > 0.0)
        Xi0 = std::sqrt(44.0 / c);
    else
        Xi0 = std::pow(1.0 / (4.0 * M_PI * R * R * 1e-10), 2.0 / 3.0);
    Xi0 = std::min(std::max(Xi0, 8.0 * xi0), 5e4);

    auto integrand = [&](double xi) {
        return fejer_kernel(R, xi) * f(xi) * (c > 0.0 ? std::exp(-c * xi * xi) : 1.0);
    };
    double total = adaptive_integral(integrand, 0.0, xi0, 1e-10);
    // panels of half an oscillation period
    const double w = M_PI / (2.0 * R);
    const long npan = static_cast<long>(std::ceil((Xi0 - xi0) / w));
    const GaussRule& rule = gauss_legendre(8);
    for (long p = 0; p < npan; ++p) {
        const double lo = xi0 + p * w;
        const double hi = std::min(lo + w, Xi0);
        const double mid = 0.5 * (lo + hi), hh = 0.5 * (hi - lo);
        double s = 0.0;
        for (int i = 0; i < 8; ++i) s += rule.w[i] * integrand(mid + hh * rule.x[i]);
        total += s * hh;
        if (hi >= Xi0) break;
    }
    // smooth tail (1/(2 pi R)) int_Xi0^inf g, g = f e^{-c xi^2}/xi^2
    auto g = [&](double xi) {
        return f(xi) * (c > 0.0 ? std::exp(-c * xi * xi) : 1.0) / (xi * xi);
    };
    double tail_smooth = 0.0;
    if (!(c > 0.0 && c * Xi0 * Xi0 > 40.0)) {
        tail_smooth = tail_integral(g, Xi0, 1e-9) / (2.0 * M_PI * R);
        // oscillatory remainder via two-term integration by parts
        const double h = 1e-5 * (1.0 + Xi0);
        const double gp = (g(Xi0 + h) - g(Xi0 - h)) / (2.0 * h);
        const double osc = -g(Xi0) * std::sin(2.0 * R * Xi0) / (2.0 * R) -
                           gp * std::cos(2.0 * R * Xi0) / (4.0 * R * R);
        tail_smooth -= osc / (2.0 * M_PI * R);
    }
    return 2.0 * (total + tail_smooth);
}

}  // namespace

double fejer_mass(double R, double /*rel_tol*/) {
    return fejer_weighted(R, [](double) { return 1.0; }, 0.0);
}

double fejer_phi_integral(const NoiseSpec& spec, double R, double gauss_c) {
    return fejer_weighted(R, [&](double xi) { return spec.phi(xi); }, gauss_c);
}

FejerMajorant fejer_majorant(const NoiseSpec& spec, double eps) {
    if (!(eps > 0.0)) throw ContractViolation("fejer_majorant: eps must be positive");
    FejerMajorant m;
    m.eps = eps;
    auto max_on = [&](double d) {
        double mx = 0.0;
        for (int i = 1; i <= 512; ++i) mx = std::max(mx, spec.phi(d * i / 512.0));
        return mx;
    };
    double hi = 1e-6;
    while (hi < 1e8 && max_on(hi) < eps) hi *= 2.0;
    double lo = hi * 0.5;
    if (hi >= 1e8) {
        m.delta = hi;
    } else {
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (max_on(mid) < eps ? lo : hi) = mid;
        }
        m.delta = lo;
    }
    m.c_eps = 2.0 / M_PI *
              tail_integral([&](double xi) { return spec.phi(xi) / (xi * xi); },
                            m.delta, 1e-9);
    return m;
}

double dalang_integral(const NoiseSpec& spec, double rel_tol) {
    auto f = [&](double xi) {
        const double p = spec.phi(xi);
        return p * p / (1.0 + xi * xi);
    };
    return 2.0 * (adaptive_integral(f, 0.0, 1.0, rel_tol) +
                  tail_integral(f, 1.0, rel_tol));
}

}  // namespace pamlab
