#include "pamlab/fk_core.hpp"

#include <algorithm>
#include <cmath>

namespace pamlab::fk {

void validate_config(const FkConfig& cfg) {
    if (!(cfg.eps > 0.0)) throw ContractViolation("fk config: eps must be > 0");
    if (cfg.cells_per_unit < 16)
        throw ContractViolation("fk config: need at least 16 cells per unit time");
    if (cfg.n_paths < 100)
        throw ContractViolation("fk config: need at least 100 path replicates");
    if (!(cfg.z_max > 0.0) || cfg.z_panels < 1 || cfg.z_rule < 2 ||
        cfg.z_rule > 32)
        throw ContractViolation("fk config: bad z grid");
}

namespace {

int cells_for(double t, int per_unit) {
    if (t < 0.0) throw ContractViolation("fk: negative time");
    const double m = t * per_unit;
    const int M = static_cast<int>(std::round(m));
    if (std::abs(m - M) > 1e-9)
        throw ContractViolation("fk: t * cells_per_unit must be an integer");
    return M;
}

struct MassMatrix {
    int Mi = 0, Mj = 0;
    std::vector<double> m;  // Mi x Mj
    double at(int i, int j) const { return m[static_cast<std::size_t>(i) * Mj + j]; }
};

MassMatrix make_masses(const NoiseSpec& spec, double ti, double tj, int Mi, int Mj) {
    MassMatrix mm;
    mm.Mi = Mi;
    mm.Mj = Mj;
    mm.m.resize(static_cast<std::size_t>(Mi) * Mj);
    const double hi = ti / Mi, hj = tj / Mj;
    for (int i = 0; i < Mi; ++i)
        for (int j = 0; j < Mj; ++j)
            mm.m[static_cast<std::size_t>(i) * Mj + j] =
                gamma0_cell_mass(spec, i * hi, (i + 1) * hi, j * hj, (j + 1) * hj);
    return mm;
}

// B at t - (c + 1/2) h for cell c, with the path on the half-step grid:
// index 2*(M - c) - 1.
void fill_needed_values(const BrownianPath& p, int M, std::vector<double>& out) {
    out.resize(static_cast<std::size_t>(M));
    for (int c = 0; c < M; ++c)
        out[static_cast<std::size_t>(c)] = p.value_at_index(2 * (M - c) - 1);
}

// composite Gauss nodes on [-z_max, z_max], edges graded toward 0
void make_z_grid(const FkConfig& cfg, std::vector<double>& z, std::vector<double>& w) {
    z.clear();
    w.clear();
    const GaussRule& r = gauss_legendre(cfg.z_rule);
    std::vector<double> edges(static_cast<std::size_t>(cfg.z_panels) + 1);
    for (int i = 0; i <= cfg.z_panels; ++i)
        edges[static_cast<std::size_t>(i)] =
            cfg.z_max * std::pow(static_cast<double>(i) / cfg.z_panels, 1.5);
    // negative side first so nodes are increasing in z
    for (int p = cfg.z_panels - 1; p >= 0; --p) {
        const double a = -edges[static_cast<std::size_t>(p) + 1],
                     b = -edges[static_cast<std::size_t>(p)];
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        for (int i = 0; i < cfg.z_rule; ++i) {
            z.push_back(c + h * r.x[i]);
            w.push_back(h * r.w[i]);
        }
    }
    for (int p = 0; p < cfg.z_panels; ++p) {
        const double a = edges[static_cast<std::size_t>(p)],
                     b = edges[static_cast<std::size_t>(p) + 1];
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        for (int i = 0; i < cfg.z_rule; ++i) {
            z.push_back(c + h * r.x[i]);
            w.push_back(h * r.w[i]);
        }
    }
}

double factorial_scale(int p) {
    if (p <= 10) {
        double f = 1.0;
        for (int k = 2; k <= p; ++k) f *= k;
        return f;
    }
    return std::exp(std::lgamma(p + 1.0));  // overflow hygiene for large p
}

}  // namespace

double eval_coupling(const NoiseSpec& spec, const BrownianPath& path_i,
                     const BrownianPath& path_j, double ti, double tj, double z,
                     const FkConfig& cfg) {
    validate_config(cfg);
    if (ti <= 0.0 || tj <= 0.0) return 0.0;
    const int Mi = cells_for(ti, cfg.cells_per_unit);
    const int Mj = cells_for(tj, cfg.cells_per_unit);
    const MassMatrix mm = make_masses(spec, ti, tj, Mi, Mj);
    std::vector<double> bi, bj;
    fill_needed_values(path_i, Mi, bi);
    fill_needed_values(path_j, Mj, bj);
    for (double v : bi)
        if (!std::isfinite(v)) throw Error("eval_coupling: non-finite path value");
    for (double v : bj)
        if (!std::isfinite(v)) throw Error("eval_coupling: non-finite path value");

    double need = std::abs(z);
    for (double a : bi)
        for (double b : bj) need = std::max(need, std::abs(a - b + z));
    QEpsTable tab = build_q_table(
        spec, cfg.eps, need + 1.0,
        std::max(1024, static_cast<int>((need + 1.0) / (0.02 * std::sqrt(cfg.eps)))));

    double total = 0.0;
    for (int i = 0; i < Mi; ++i)
        for (int j = 0; j < Mj; ++j) {
            double q;
            const double arg = bi[static_cast<std::size_t>(i)] -
                               bj[static_cast<std::size_t>(j)] + z;
            try {
                q = tab.eval(arg);
            } catch (const ContractViolation&) {
                // range overflow: rebuild wider and retry this cell
                tab = build_q_table(spec, cfg.eps, 2.0 * std::abs(arg) + 1.0,
                                    2 * tab.size());
                q = tab.eval(arg);
            }
            total += mm.at(i, j) * q;
        }
    return total;
}

double coupling_mean_oracle(const NoiseSpec& spec, double ti, double tj,
                            double z, double eps, int base_cells) {
    if (ti <= 0.0 || tj <= 0.0) return 0.0;
    if (!(eps > 0.0)) throw ContractViolation("oracle: eps must be > 0");
    double prev = 0.0;
    const int max_doublings = 7;
    for (int k = 0; k <= max_doublings; ++k) {
        const int per_unit = base_cells << k;
        const int Mi = static_cast<int>(std::ceil(ti * per_unit - 1e-9));
        const int Mj = static_cast<int>(std::ceil(tj * per_unit - 1e-9));
        const double hi = ti / Mi, hj = tj / Mj;
        // s = (ti - r) + (tj - v) is constant along anti-diagonals when the
        // cell widths agree; cache the inner integral on distinct s values.
        std::vector<double> qcache;
        const bool shared_h = std::abs(hi - hj) < 1e-12 * (hi + hj);
        if (shared_h) {
            qcache.resize(static_cast<std::size_t>(Mi + Mj) - 1);
            parallel_for(qcache.size(), 0, [&](std::size_t d) {
                const double s = (ti + tj) - (static_cast<double>(d) + 1.0) * hi;
                qcache[d] = q_eps(spec, eps + 0.5 * s, z);
            });
        }
        double total = 0.0;
        for (int i = 0; i < Mi; ++i) {
            const double r = (i + 0.5) * hi;
            for (int j = 0; j < Mj; ++j) {
                const double v = (j + 0.5) * hj;
                const double mass = gamma0_cell_mass(spec, i * hi, (i + 1) * hi,
                                                     j * hj, (j + 1) * hj);
                const double q =
                    shared_h ? qcache[static_cast<std::size_t>(i + j)]
                             : q_eps(spec, eps + 0.5 * ((ti - r) + (tj - v)), z);
                total += mass * q;
            }
        }
        if (k > 0 && std::abs(total - prev) <= 1e-4 * std::abs(total)) return total;
        prev = total;
    }
    return prev;
}

std::size_t CouplingSamples::center_index() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < z.size(); ++k)
        if (std::abs(z[k]) < std::abs(z[best])) best = k;
    return best;
}

CouplingSamples sample_coupling_profile(const NoiseSpec& spec, double t1,
                                        double t2, const FkConfig& cfg) {
    validate_config(cfg);
    CouplingSamples out;
    out.t1 = t1;
    out.t2 = t2;
    out.eps = cfg.eps;
    out.seed = cfg.seed;
    make_z_grid(cfg, out.z, out.w);
    out.n_rep = static_cast<std::size_t>(cfg.n_paths);
    const std::size_t nz = out.z.size();
    out.values.assign(out.n_rep * nz, 0.0);
    if (t1 <= 0.0 || t2 <= 0.0) return out;

    const int M1 = cells_for(t1, cfg.cells_per_unit);
    const int M2 = cells_for(t2, cfg.cells_per_unit);
    const MassMatrix mm = make_masses(spec, t1, t2, M1, M2);

    // pass 1: scan the needed Q-table range (exact, schedule-independent)
    std::vector<double> lo1(out.n_rep), hi1(out.n_rep), lo2(out.n_rep), hi2(out.n_rep);
    parallel_for(out.n_rep, cfg.threads, [&](std::size_t r) {
        Rng rng1(RngStream(cfg.seed, r, "fk.path.0"));
        Rng rng2(RngStream(cfg.seed, r, "fk.path.1"));
        const BrownianPath p1 = sample_path(rng1, t1, 2 * M1);
        const BrownianPath p2 = sample_path(rng2, t2, 2 * M2);
        std::vector<double> b1, b2;
        fill_needed_values(p1, M1, b1);
        fill_needed_values(p2, M2, b2);
        lo1[r] = *std::min_element(b1.begin(), b1.end());
        hi1[r] = *std::max_element(b1.begin(), b1.end());
        lo2[r] = *std::min_element(b2.begin(), b2.end());
        hi2[r] = *std::max_element(b2.begin(), b2.end());
    });
    double dmax = 0.0;
    for (std::size_t r = 0; r < out.n_rep; ++r) {
        dmax = std::max(dmax, std::abs(hi1[r] - lo2[r]));
        dmax = std::max(dmax, std::abs(hi2[r] - lo1[r]));
    }
    const double need = dmax + cfg.z_max + 0.5;
    const QEpsTable tab = build_q_table(
        spec, cfg.eps, need,
        std::max(2048, static_cast<int>(need / (0.018 * std::sqrt(cfg.eps)))));

    // pass 2: evaluate the profile
    parallel_for(out.n_rep, cfg.threads, [&](std::size_t r) {
        Rng rng1(RngStream(cfg.seed, r, "fk.path.0"));
        Rng rng2(RngStream(cfg.seed, r, "fk.path.1"));
        const BrownianPath p1 = sample_path(rng1, t1, 2 * M1);
        const BrownianPath p2 = sample_path(rng2, t2, 2 * M2);
        std::vector<double> b1, b2;
        fill_needed_values(p1, M1, b1);
        fill_needed_values(p2, M2, b2);
        std::vector<double> D(static_cast<std::size_t>(M1) * M2);
        for (int i = 0; i < M1; ++i)
            for (int j = 0; j < M2; ++j)
                D[static_cast<std::size_t>(i) * M2 + j] =
                    b1[static_cast<std::size_t>(i)] - b2[static_cast<std::size_t>(j)];
        for (std::size_t k = 0; k < nz; ++k) {
            const double zk = out.z[k];
            double s = 0.0;
            if (cfg.antithetic) {
                for (std::size_t c = 0; c < D.size(); ++c)
                    s += mm.m[c] * 0.5 * (tab.eval(D[c] + zk) + tab.eval(-D[c] + zk));
            } else {
                for (std::size_t c = 0; c < D.size(); ++c)
                    s += mm.m[c] * tab.eval(D[c] + zk);
            }
            out.values[r * nz + k] = s;
        }
    });
    return out;
}

McEstimate integrate_profile(const CouplingSamples& s,
                             const std::function<double(double)>& fn,
                             std::optional<double> geometric_R) {
    const std::size_t nz = s.z.size();
    std::vector<double> wg(nz);
    for (std::size_t k = 0; k < nz; ++k) {
        double g = 1.0;
        if (geometric_R)
            g = std::max(0.0, 1.0 - std::abs(s.z[k]) / (2.0 * *geometric_R));
        wg[k] = s.w[k] * g;
    }
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t r = 0; r < s.n_rep; ++r) {
        double v = 0.0;
        for (std::size_t k = 0; k < nz; ++k) v += wg[k] * fn(s.at(r, k));
        sum += v;
        sum2 += v * v;
    }
    McEstimate e;
    e.n = static_cast<long>(s.n_rep);
    e.seed = s.seed;
    e.mean = sum / s.n_rep;
    const double var = std::max(0.0, (sum2 - sum * sum / s.n_rep) / (s.n_rep - 1.0));
    e.se = std::sqrt(var / s.n_rep);
    return e;
}

void per_z_stats(const CouplingSamples& s,
                 const std::function<double(double)>& fn,
                 std::vector<double>& mean, std::vector<double>& se) {
    const std::size_t nz = s.z.size();
    mean.assign(nz, 0.0);
    se.assign(nz, 0.0);
    for (std::size_t k = 0; k < nz; ++k) {
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t r = 0; r < s.n_rep; ++r) {
            const double v = fn(s.at(r, k));
            sum += v;
            sum2 += v * v;
        }
        mean[k] = sum / s.n_rep;
        const double var =
            std::max(0.0, (sum2 - sum * sum / s.n_rep) / (s.n_rep - 1.0));
        se[k] = std::sqrt(var / s.n_rep);
    }
}

McEstimate moment_estimate(const NoiseSpec& spec,
                           const std::vector<MomentPoint>& points,
                           const FkConfig& cfg) {
    validate_config(cfg);
    const std::size_t k = points.size();
    if (k == 0) throw ContractViolation("moment_estimate: need at least one point");
    McEstimate e;
    e.n = cfg.n_paths;
    e.seed = cfg.seed;
    if (k == 1) {  // empty pair sum
        e.mean = 1.0;
        e.se = 0.0;
        return e;
    }
    std::vector<int> M(k);
    for (std::size_t i = 0; i < k; ++i) M[i] = cells_for(points[i].t, cfg.cells_per_unit);

    struct Pair {
        std::size_t i, j;
        MassMatrix mm;
        double z;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            if (M[i] == 0 || M[j] == 0) continue;  // empty time domain: I = 0
            pairs.push_back({i, j,
                             make_masses(spec, points[i].t, points[j].t, M[i], M[j]),
                             points[i].x - points[j].x});
        }

    auto paths_for = [&](std::size_t r, std::vector<std::vector<double>>& b) {
        b.assign(k, {});
        for (std::size_t i = 0; i < k; ++i) {
            if (M[i] == 0) continue;
            char tag[32];
            std::snprintf(tag, sizeof(tag), "fk.path.%zu", i);
            Rng rng(RngStream(cfg.seed, r, tag));
            const BrownianPath p = sample_path(rng, points[i].t, 2 * M[i]);
            fill_needed_values(p, M[i], b[i]);
        }
    };

    // range scan
    const std::size_t n = static_cast<std::size_t>(cfg.n_paths);
    std::vector<double> need(n, 0.0);
    parallel_for(n, cfg.threads, [&](std::size_t r) {
        std::vector<std::vector<double>> b;
        paths_for(r, b);
        double mx = 0.0;
        for (const auto& pr : pairs) {
            for (double a : b[pr.i])
                for (double c : b[pr.j])
                    mx = std::max(mx, std::abs(a - c) + std::abs(pr.z));
        }
        need[r] = mx;
    });
    double range = 1.0;
    for (double v : need) range = std::max(range, v);
    const QEpsTable tab = build_q_table(
        spec, cfg.eps, range + 0.5,
        std::max(2048, static_cast<int>((range + 0.5) / (0.018 * std::sqrt(cfg.eps)))));

    std::vector<double> vals(n);
    std::vector<double> overflow(n, 0.0);
    std::vector<char> overflowed(n, 0);
    parallel_for(n, cfg.threads, [&](std::size_t r) {
        std::vector<std::vector<double>> b;
        paths_for(r, b);
        double sum_pos = 0.0, sum_neg = 0.0;  // antithetic: flip all paths
        for (const auto& pr : pairs) {
            const auto& bi = b[pr.i];
            const auto& bj = b[pr.j];
            const int Mi = pr.mm.Mi, Mj = pr.mm.Mj;
            double s_pos = 0.0, s_neg = 0.0;
            for (int i = 0; i < Mi; ++i)
                for (int j = 0; j < Mj; ++j) {
                    const double d = bi[static_cast<std::size_t>(i)] -
                                     bj[static_cast<std::size_t>(j)];
                    const double mass = pr.mm.at(i, j);
                    s_pos += mass * tab.eval(d + pr.z);
                    if (cfg.antithetic) s_neg += mass * tab.eval(-d + pr.z);
                }
            sum_pos += s_pos;
            sum_neg += s_neg;
        }
        const double guard = 700.0;
        if (sum_pos > guard || (cfg.antithetic && sum_neg > guard)) {
            overflowed[r] = 1;
            overflow[r] = std::max(sum_pos, sum_neg);
            return;
        }
        vals[r] = cfg.antithetic
                      ? 0.5 * (std::exp(sum_pos) + std::exp(sum_neg))
                      : std::exp(sum_pos);
    });
    for (std::size_t r = 0; r < n; ++r)
        if (overflowed[r])
            throw ExpOverflow(r, overflow[r],
                              "moment_estimate: exp overflow guard tripped "
                              "(sum of couplings = " +
                                  std::to_string(overflow[r]) +
                                  "); reduce t or increase eps");
    double sum = 0.0, sum2 = 0.0;
    for (double v : vals) {
        sum += v;
        sum2 += v * v;
    }
    e.mean = sum / n;
    e.se = std::sqrt(std::max(0.0, (sum2 - sum * sum / n) / (n - 1.0)) / n);
    return e;
}

CovarianceEstimate limiting_covariance(const NoiseSpec& spec, double t1,
                                       double t2, const FkConfig& cfg) {
    CovarianceEstimate out;
    if (t1 <= 0.0 || t2 <= 0.0) {
        out.value.n = cfg.n_paths;
        out.value.seed = cfg.seed;
        return out;
    }
    const CouplingSamples s = sample_coupling_profile(spec, t1, t2, cfg);
    auto g = [](double x) { return std::exp(x) - x - 1.0; };
    std::vector<double> mean, se;
    per_z_stats(s, g, mean, se);
    const double center = mean[s.center_index()];
    const double edge = std::max(std::abs(mean.front()), std::abs(mean.back()));
    out.tail_ratio = center > 0.0 ? edge / center : 0.0;
    if (out.tail_ratio > 1e-3)
        throw ContractViolation(
            "limiting_covariance: z tail criterion unmet; increase z_max");
    out.value = integrate_profile(s, g);
    out.value.mean *= 2.0;
    out.value.se *= 2.0;
    return out;
}

McEstimate chaos_from_samples(const CouplingSamples& s, int p,
                              std::optional<double> geometric_R) {
    if (p < 2) throw ContractViolation("chaos covariance: p must be >= 2");
    const double scale = factorial_scale(p);
    McEstimate e = integrate_profile(
        s, [&](double x) { return std::pow(x, p) / scale; }, geometric_R);
    return e;
}

McEstimate chaos_covariance(const NoiseSpec& spec, double t1, double t2, int p,
                            const FkConfig& cfg) {
    if (p < 2) throw ContractViolation("chaos covariance: p must be >= 2");
    if (t1 <= 0.0 || t2 <= 0.0) {
        McEstimate e;
        e.n = cfg.n_paths;
        e.seed = cfg.seed;
        return e;
    }
    const CouplingSamples s = sample_coupling_profile(spec, t1, t2, cfg);
    return chaos_from_samples(s, p);
}

std::vector<double> first_chaos_decay(const NoiseSpec& spec, double t,
                                      const std::vector<double>& R_list,
                                      int cells_per_unit) {
    std::vector<double> out(R_list.size(), 0.0);
    if (t <= 0.0) return out;
    const int M = cells_for(t, cells_per_unit);
    const double h = t / M;
    // gamma0 masses depend on i-j, the inner integral on i+j: both 1-D caches
    std::vector<double> mass(static_cast<std::size_t>(M) * M);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j)
            mass[static_cast<std::size_t>(i) * M + j] =
                gamma0_cell_mass(spec, i * h, (i + 1) * h, j * h, (j + 1) * h);
    for (std::size_t ri = 0; ri < R_list.size(); ++ri) {
        const double R = R_list[ri];
        std::vector<double> diag(static_cast<std::size_t>(2 * M - 1));
        parallel_for(diag.size(), 0, [&](std::size_t d) {
            const double rv = (static_cast<double>(d) + 1.0) * h;  // r + v at midpoints
            diag[d] = fejer_phi_integral(spec, R, 0.5 * rv);
        });
        double total = 0.0;
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j)
                total += mass[static_cast<std::size_t>(i) * M + j] *
                         diag[static_cast<std::size_t>(i + j)];
        out[ri] = 2.0 * M_PI * total;
    }
    return out;
}

}  // namespace pamlab::fk
