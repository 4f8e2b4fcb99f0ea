#include "cestgm/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cestgm {

InteractionKernel::InteractionKernel(const ValidatedModel& model) : model_(model) {
    const int d = model_.d();
    const int k = model_.k_total();
    const int sd = k * d;
    g_lin_ = Vec::Zero(sd);
    g_quad_ = Mat::Zero(sd, sd);
    cross_ = Mat::Zero(sd, sd);

    for (int t = 0; t < d; ++t) {
        g_lin_.segment(t * k, k) = model_.theta_stacked();
        g_quad_.block(t * k, t * k, k, k) = model_.psi(0);
        // Within-block lag terms s_t' Psi_l s_{t+l}, l <= d - (t+1).
        for (int l = 1; t + l < d; ++l) {
            g_quad_.block(t * k, (t + l) * k, k, k) += model_.psi(l);
            g_quad_.block((t + l) * k, t * k, k, k) += model_.psi(l).transpose();
        }
        // Between-block terms: slice t of x against slice u of y at lag u - t + d.
        for (int u = 0; u < d; ++u) {
            const int lag = u - t + d;
            if (lag >= 1 && lag <= d) {
                cross_.block(t * k, u * k, k, k) = model_.psi(lag);
            }
        }
    }
}

void InteractionKernel::stack_stats(const double* state, double* out) const {
    const int d = model_.d();
    const int p = model_.p();
    int pos = 0;
    for (int t = 0; t < d; ++t) {
        for (int a = 0; a < p; ++a) {
            const auto& fam = model_.family(a);
            fam.suff_stats_into(state[t * p + a], out + pos);
            pos += fam.k_stats();
        }
    }
}

double InteractionKernel::log_g(const double* state) const {
    const int d = model_.d();
    const int p = model_.p();
    Vec s(stat_dim());
    stack_stats(state, s.data());
    double acc = g_lin_.dot(s) + 0.5 * s.dot(g_quad_ * s);
    for (int t = 0; t < d; ++t) {
        for (int a = 0; a < p; ++a) {
            acc += model_.family(a).log_base(state[t * p + a]);
        }
    }
    return acc;
}

double InteractionKernel::log_h(const double* x, const double* y) const {
    Vec sx(stat_dim()), sy(stat_dim());
    stack_stats(x, sx.data());
    stack_stats(y, sy.data());
    return sx.dot(cross_ * sy);
}

double InteractionKernel::log_r(const double* x, const double* y) const {
    return 0.5 * log_g(x) + log_h(x, y) + 0.5 * log_g(y);
}

double InteractionKernel::eval(const double* x, const double* y) const {
    return std::exp(log_r(x, y));
}

bool InteractionKernel::in_support(const double* state) const {
    const int d = model_.d();
    const int p = model_.p();
    for (int t = 0; t < d; ++t) {
        for (int a = 0; a < p; ++a) {
            if (!model_.family(a).in_support(state[t * p + a])) return false;
        }
    }
    return true;
}

double InteractionKernel::log_r_checked(const std::vector<double>& x,
                                        const std::vector<double>& y) const {
    if (static_cast<int>(x.size()) != state_dim() || static_cast<int>(y.size()) != state_dim()) {
        throw Error("kernel argument has wrong dimension");
    }
    if (!in_support(x.data()) || !in_support(y.data())) {
        throw OutOfSupport("kernel argument outside tensor support");
    }
    return log_r(x.data(), y.data());
}

// ---------------------------------------------------------------------------
// Hilbert-Schmidt estimate and divergence probe
// ---------------------------------------------------------------------------

namespace {

// log of sum over all grid pairs of exp(2 log R(x_i, x_j)) mu_i mu_j,
// streamed row by row with running max subtraction.
double log_hs_on_space(const InteractionKernel& kernel, const DiscretizedSpace& space) {
    const std::size_t n = space.total_size();
    const int sd = kernel.stat_dim();
    Mat stats(n, sd);
    Vec half(n);  // log G(x_i) + log mu_i
    std::vector<double> pt(space.dim());
    for (std::size_t i = 0; i < n; ++i) {
        space.point_at(i, pt.data());
        Vec s(sd);
        kernel.stack_stats(pt.data(), s.data());
        stats.row(i) = s;
        half[i] = kernel.log_g(pt.data()) + std::log(space.weight_at(i));
    }
    const Mat tc = stats * kernel.cross_coupling();  // n x sd

    double running_max = -std::numeric_limits<double>::infinity();
    double running_sum = 0.0;
    Vec row(n);
    for (std::size_t i = 0; i < n; ++i) {
        row = 2.0 * (tc.row(i) * stats.transpose()).transpose();
        row.array() += half[i] + half.array();
        const double m = row.maxCoeff();
        if (m > running_max) {
            if (std::isfinite(running_max)) running_sum *= std::exp(running_max - m);
            running_max = m;
        }
        running_sum += (row.array() - running_max).exp().sum();
    }
    return running_max + std::log(running_sum);
}

}  // namespace

HsResult hs_norm_sq(const InteractionKernel& kernel, const DiscretizedSpace& space,
                    const HsProbeConfig& probe) {
    if (space.total_size() > probe.probe_total_cap) {
        throw GridCapExceeded("hs_norm_sq: grid size " + std::to_string(space.total_size()) +
                              " exceeds cap " + std::to_string(probe.probe_total_cap));
    }
    HsResult out;
    out.log_value = log_hs_on_space(kernel, space);
    out.value = std::exp(out.log_value);
    out.log_extended = out.log_value;
    out.probe_log_values.push_back(out.log_value);

    if (!space.extendable()) return out;  // exact counting grid, nothing to probe

    const double log_growth = std::log1p(probe.growth_threshold);
    const double log_plateau = std::log1p(probe.plateau_threshold);
    DiscretizedSpace current = space;
    double prev = out.log_value;
    int consecutive = 0;
    double last_growth = 0.0;
    for (int k = 1; k <= probe.max_doublings; ++k) {
        DiscretizedSpace next;
        try {
            next = current.extended(2.0, probe.per_axis_cap, probe.probe_total_cap);
        } catch (const GridCapExceeded&) {
            out.probe_capped = true;
            break;
        }
        const double est = log_hs_on_space(kernel, next);
        out.probe_log_values.push_back(est);
        out.doublings = k;
        last_growth = est - prev;
        consecutive = (last_growth > log_growth) ? consecutive + 1 : 0;
        prev = est;
        current = std::move(next);
        if (consecutive >= probe.consecutive_growths) {
            out.diverging = true;
            break;
        }
        if (last_growth < log_plateau) break;  // converged
    }
    if (!out.diverging && out.doublings == probe.max_doublings && last_growth > log_growth) {
        out.diverging = true;  // still growing after the full doubling budget
    }
    out.log_extended = prev;
    return out;
}

// ---------------------------------------------------------------------------
// Analytic sufficient conditions
// ---------------------------------------------------------------------------

namespace {

bool has_superlinear_decay(const NodeFamily& fam, const Vec& theta) {
    switch (fam.kind()) {
        case FamilyKind::Gaussian: return theta[0] > 0.0;
        case FamilyKind::Poisson: return true;
        case FamilyKind::Binary:
        case FamilyKind::Binomial: return true;  // bounded support
        default: return false;
    }
}

std::string coupling_name(int lag, int a, int b, int i, int j) {
    std::ostringstream os;
    os << "Phi_" << lag << "^(" << (a + 1) << "," << (b + 1) << ")[" << (i + 1) << "," << (j + 1)
       << "]";
    return os.str();
}

}  // namespace

HsScreening sufficient_hs_check(const ValidatedModel& model) {
    const auto& spec = model.spec();
    const int p = spec.p;
    std::vector<std::string> violated(p), unknown(p);
    // an unclassifiable coupling taints the truncation envelope of BOTH nodes
    std::vector<bool> tainted(p, false);
    std::vector<double> gauss_coupling_mass(p, 0.0);

    // Per-node integrability of the G factor.
    for (int a = 0; a < p; ++a) {
        const auto& fam = spec.families[a];
        const Vec& th = spec.theta[a];
        switch (fam.kind()) {
            case FamilyKind::Gaussian:
                if (!(th[0] > 0.0))
                    violated[a] = "gaussian node " + std::to_string(a + 1) +
                                  ": theta_1 (conditional precision) must be > 0";
                break;
            case FamilyKind::ExponentialRate:
                if (!(th[0] > 0.0))
                    violated[a] = "exponential node " + std::to_string(a + 1) +
                                  ": theta (conditional rate) must be > 0";
                break;
            case FamilyKind::Beta:
                if (!(th[0] > -1.0 && th[1] > -1.0))
                    violated[a] = "beta node " + std::to_string(a + 1) +
                                  ": both shape parameters must be positive";
                break;
            default:
                break;
        }
    }

    // Cross-coupling sign analysis; lags l >= 1 mirror to -l by the
    // compatibility constraints, so each coefficient in Theta_a is visited once
    // when accumulating the Gaussian dominance mass below.
    for (int l = 0; l <= spec.d; ++l) {
        for (int a = 0; a < p; ++a) {
            for (int b = 0; b < p; ++b) {
                if (l == 0 && a >= b) continue;  // symmetric pair seen once
                const Mat blk = spec.phi_block(l, a, b);
                if (blk.isZero(0.0)) continue;
                const auto& fa = spec.families[a];
                const auto& fb = spec.families[b];
                for (int i = 0; i < blk.rows(); ++i) {
                    for (int j = 0; j < blk.cols(); ++j) {
                        const double psi = blk(i, j);
                        if (psi == 0.0) continue;
                        const int si = fa.stat_sign(i), sj = fb.stat_sign(j);
                        const bool bi = fa.stat_bounded(i), bj = fb.stat_bounded(j);
                        if (si == 0 && sj == 0) {
                            // Gaussian x against Gaussian x: handled by dominance.
                            continue;
                        }
                        if (si == 0 || sj == 0) {
                            // Gaussian x against a sign-definite statistic.
                            const bool other_bounded = (si == 0) ? bj : bi;
                            if (!other_bounded) {
                                tainted[a] = tainted[b] = true;
                                if (unknown[a].empty()) {
                                    unknown[a] = "no analytic clause for coupling " +
                                                 coupling_name(l, a, b, i, j) +
                                                 " (gaussian x with an unbounded statistic)";
                                }
                            }
                            continue;
                        }
                        if (psi * si * sj <= 0.0) continue;  // exponent nonpositive
                        if (bi && bj) continue;              // bounded-bounded, any sign
                        if (bi || bj) {
                            const int ub = bi ? b : a;
                            const auto& ufam = spec.families[ub];
                            if (has_superlinear_decay(ufam, spec.theta[ub])) continue;
                            if (unknown[a].empty())
                                unknown[a] = "coupling " + coupling_name(l, a, b, i, j) +
                                             " has positive exponent against a bounded statistic;"
                                             " no decay clause for " + ufam.name();
                            continue;
                        }
                        // Positive exponent between two unbounded statistics.
                        if (violated[a].empty())
                            violated[a] = "coupling " + coupling_name(l, a, b, i, j) +
                                          " gives a positive unbounded exponent (requires the"
                                          " opposite sign)";
                    }
                }
            }
        }
    }

    // Gaussian x-x dominance: theta_1 must exceed the total coupling magnitude
    // that x_t^{(a)} sees in its conditional. Along the way, collect the
    // envelope margin (a lower bound on the stationary precision) and the
    // conditional mean shift that bounded partner statistics can contribute.
    std::vector<double> gauss_margin(p, 0.0), gauss_shift(p, 0.0);
    for (int a = 0; a < p; ++a) {
        if (spec.families[a].kind() != FamilyKind::Gaussian) continue;
        const int xa = 1;  // index of the x statistic
        double mass = 0.0, quad_mod = 0.0, shift = 0.0;
        for (int l = -spec.d; l <= spec.d; ++l) {
            for (int b = 0; b < p; ++b) {
                const Mat blk = spec.phi_block(l, a, b);
                if (blk.size() == 0 || blk.isZero(0.0)) continue;
                const auto& fb = spec.families[b];
                for (int j = 0; j < blk.cols(); ++j) {
                    const bool gaussian_x = fb.kind() == FamilyKind::Gaussian && j == 1;
                    const double stat_max =
                        fb.kind() == FamilyKind::Binomial ? fb.n_trials() : 1.0;
                    if (gaussian_x) {
                        mass += std::abs(blk(xa, j));
                    } else if (fb.stat_bounded(j)) {
                        shift += std::abs(blk(xa, j)) * stat_max;
                        quad_mod += std::abs(blk(0, j)) * stat_max;
                    }
                    // unbounded non-gaussian partners taint the node above
                }
            }
        }
        gauss_coupling_mass[a] = mass;
        gauss_margin[a] = spec.theta[a][0] - mass - quad_mod;
        gauss_shift[a] = shift;
        if (mass > 0.0 && violated[a].empty() && !(spec.theta[a][0] > mass)) {
            const std::string msg = "gaussian node " + std::to_string(a + 1) +
                                    ": theta_1 = " + std::to_string(spec.theta[a][0]) +
                                    " does not dominate coupling mass " + std::to_string(mass);
            if (p == 1 && spec.d == 1) {
                violated[a] = msg;  // univariate 1-Markov: the condition is sharp
            } else if (unknown[a].empty()) {
                unknown[a] = msg + " (sufficient condition only)";
            }
        }
        if (gauss_margin[a] <= 0.0) tainted[a] = true;  // no certifiable envelope
    }

    HsScreening out;
    out.gauss_margin = std::move(gauss_margin);
    out.gauss_shift = std::move(gauss_shift);
    out.node_certified.assign(p, true);
    for (int a = 0; a < p; ++a) {
        if (!violated[a].empty() || !unknown[a].empty() || tainted[a]) {
            out.node_certified[a] = false;
        }
    }
    for (int a = 0; a < p; ++a) {
        if (!violated[a].empty()) {
            out.status = HsStatus::Violated;
            out.reason = violated[a];
            return out;
        }
    }
    for (int a = 0; a < p; ++a) {
        if (!unknown[a].empty()) {
            out.status = HsStatus::Unknown;
            out.reason = unknown[a];
            return out;
        }
    }
    out.status = HsStatus::Satisfied;
    return out;
}

// ---------------------------------------------------------------------------
// Clique factorization
// ---------------------------------------------------------------------------

namespace {

void bron_kerbosch(std::vector<int>& r, std::vector<int> pset, std::vector<int> xset,
                   const std::vector<std::set<int>>& adj, std::vector<std::vector<int>>& out) {
    if (pset.empty() && xset.empty()) {
        out.push_back(r);
        return;
    }
    const std::vector<int> candidates = pset;
    for (int v : candidates) {
        std::vector<int> pn, xn;
        for (int u : pset)
            if (adj[v].count(u)) pn.push_back(u);
        for (int u : xset)
            if (adj[v].count(u)) xn.push_back(u);
        r.push_back(v);
        bron_kerbosch(r, pn, xn, adj, out);
        r.pop_back();
        pset.erase(std::find(pset.begin(), pset.end(), v));
        xset.push_back(v);
    }
}

}  // namespace

CliqueFactorization clique_factorization(const InteractionKernel& kernel) {
    if (kernel.d() != 1) {
        throw UnsupportedOrder("clique factorization is stated for the 1-Markov kernel");
    }
    const ValidatedModel& model = kernel.model();
    const int p = model.p();

    std::vector<int> r, pset, xset;
    for (int a = 0; a < p; ++a) pset.push_back(a);
    std::vector<std::vector<int>> cliques;
    bron_kerbosch(r, pset, xset, model.neighborhoods(), cliques);
    for (auto& c : cliques) std::sort(c.begin(), c.end());
    std::sort(cliques.begin(), cliques.end());

    // Multiplicity of each node and edge across the maximal cliques.
    std::vector<int> node_count(p, 0);
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& c : cliques) {
        for (std::size_t i = 0; i < c.size(); ++i) {
            node_count[c[i]]++;
            for (std::size_t j = i + 1; j < c.size(); ++j) {
                edge_count[{c[i], c[j]}]++;
            }
        }
    }

    CliqueFactorization fact;
    fact.model_ = std::make_shared<ValidatedModel>(model);
    const int k = model.k_total();
    for (const auto& c : cliques) {
        CliqueKernel ck;
        ck.nodes = c;
        ck.g_lin = Vec::Zero(k);
        ck.g_quad = Mat::Zero(k, k);
        ck.cross = Mat::Zero(k, k);
        for (std::size_t i = 0; i < c.size(); ++i) {
            const int a = c[i];
            const double wa = 1.0 / node_count[a];
            ck.base_weight.push_back(wa);
            ck.g_lin.segment(model.stat_offset(a), model.family(a).k_stats()) =
                wa * model.theta(a);
            ck.cross.block(model.stat_offset(a), model.stat_offset(a),
                           model.family(a).k_stats(), model.family(a).k_stats()) =
                wa * model.phi_block(1, a, a);
            for (std::size_t j = 0; j < c.size(); ++j) {
                if (i == j) continue;
                const int b = c[j];
                const double wab = 1.0 / edge_count[{std::min(a, b), std::max(a, b)}];
                ck.g_quad.block(model.stat_offset(a), model.stat_offset(b),
                                model.family(a).k_stats(), model.family(b).k_stats()) =
                    wab * model.phi_block(0, a, b);
                ck.cross.block(model.stat_offset(a), model.stat_offset(b),
                               model.family(a).k_stats(), model.family(b).k_stats()) =
                    wab * model.phi_block(1, a, b);
            }
        }
        fact.cliques_.push_back(std::move(ck));
    }
    return fact;
}

double CliqueFactorization::log_r_clique(const CliqueKernel& ck, const double* x,
                                         const double* y) const {
    const ValidatedModel& m = *model_;
    const int k = m.k_total();
    Vec sx(k), sy(k);
    int pos = 0;
    for (int a = 0; a < m.p(); ++a) {
        m.family(a).suff_stats_into(x[a], sx.data() + pos);
        m.family(a).suff_stats_into(y[a], sy.data() + pos);
        pos += m.family(a).k_stats();
    }
    double gx = ck.g_lin.dot(sx) + 0.5 * sx.dot(ck.g_quad * sx);
    double gy = ck.g_lin.dot(sy) + 0.5 * sy.dot(ck.g_quad * sy);
    for (std::size_t i = 0; i < ck.nodes.size(); ++i) {
        gx += ck.base_weight[i] * m.family(ck.nodes[i]).log_base(x[ck.nodes[i]]);
        gy += ck.base_weight[i] * m.family(ck.nodes[i]).log_base(y[ck.nodes[i]]);
    }
    return 0.5 * gx + sx.dot(ck.cross * sy) + 0.5 * gy;
}

double CliqueFactorization::log_r_sum(const double* x, const double* y) const {
    double acc = 0.0;
    for (const auto& ck : cliques_) acc += log_r_clique(ck, x, y);
    return acc;
}

std::vector<double> random_support_point(const ValidatedModel& model, int slices,
                                         std::mt19937_64& rng) {
    std::vector<double> pt(model.p() * slices);
    for (int t = 0; t < slices; ++t) {
        for (int a = 0; a < model.p(); ++a) {
            const auto& fam = model.family(a);
            double v = 0.0;
            switch (fam.kind()) {
                case FamilyKind::Gaussian: {
                    std::normal_distribution<double> dist(0.0, 2.0);
                    v = dist(rng);
                    break;
                }
                case FamilyKind::Binary: {
                    std::bernoulli_distribution dist(0.5);
                    v = dist(rng) ? 1.0 : 0.0;
                    break;
                }
                case FamilyKind::Poisson: {
                    std::uniform_int_distribution<int> dist(0, 30);
                    v = dist(rng);
                    break;
                }
                case FamilyKind::ExponentialRate: {
                    std::exponential_distribution<double> dist(0.3);
                    v = dist(rng);
                    break;
                }
                case FamilyKind::Beta: {
                    std::uniform_real_distribution<double> dist(1e-6, 1.0 - 1e-6);
                    v = dist(rng);
                    break;
                }
                case FamilyKind::Binomial: {
                    std::uniform_int_distribution<int> dist(0, fam.n_trials());
                    v = dist(rng);
                    break;
                }
            }
            pt[t * model.p() + a] = v;
        }
    }
    return pt;
}

double factorization_residual(const InteractionKernel& kernel, const CliqueFactorization& fact,
                              int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const auto x = random_support_point(kernel.model(), 1, rng);
        const auto y = random_support_point(kernel.model(), 1, rng);
        const double direct = kernel.log_r(x.data(), y.data());
        const double split = fact.log_r_sum(x.data(), y.data());
        worst = std::max(worst, std::abs(direct - split));
    }
    return worst;
}

}  // namespace cestgm
