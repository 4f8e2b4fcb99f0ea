#include "cestgm/density.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace cestgm {

DensityGrid marginal_p1(const DiscretizedOperator& op, const SpectralResult& res) {
    DensityGrid g;
    g.values = res.v.array() * res.w.array();
    g.log_values = g.values.array().log();
    g.quad_sum = op.inner(res.v, res.w);
    if (std::abs(g.quad_sum - 1.0) > 1e-6) {
        throw NormalizationFailure("p_1 quadrature mass deviates from 1 by " +
                                   std::to_string(std::abs(g.quad_sum - 1.0)) +
                                   " (grid inadequate)");
    }
    return g;
}

double log_joint_density(const DiscretizedOperator& op, const SpectralResult& res,
                         const std::vector<std::vector<double>>& points) {
    const int n = static_cast<int>(points.size());
    if (n < 1) throw Error("joint density needs at least one state");
    const InteractionKernel& kernel = op.kernel();
    double acc = -(n - 1) * std::log(res.r);
    acc += log_nystrom_v(op, res, points.front().data());
    for (int t = 1; t < n; ++t) {
        acc += kernel.log_r_checked(points[t - 1], points[t]);
    }
    acc += log_nystrom_w(op, res, points.back().data());
    return acc;
}

double log_transition_right(const DiscretizedOperator& op, const SpectralResult& res,
                            const std::vector<double>& x_prev, const std::vector<double>& x) {
    return -std::log(res.r) + op.kernel().log_r_checked(x_prev, x) +
           log_nystrom_w(op, res, x.data()) - log_nystrom_w(op, res, x_prev.data());
}

double log_transition_left(const DiscretizedOperator& op, const SpectralResult& res,
                           const std::vector<double>& x_prev, const std::vector<double>& x) {
    return -std::log(res.r) + op.kernel().log_r_checked(x_prev, x) +
           log_nystrom_v(op, res, x_prev.data()) - log_nystrom_v(op, res, x.data());
}

namespace {

// log of the scaled kernel matrix entries, with the scale restored.
Mat log_kernel_matrix(const DiscretizedOperator& op) {
    Mat lk = op.kernel_matrix().array().log().matrix();
    lk.array() += op.log_scale();
    return lk;
}

// Max-plus chain: out(y) = max_x [in(x) + lk(x, y)] over the grid.
Vec max_plus_step(const Vec& in, const Mat& lk) {
    const auto n = lk.rows();
    Vec out(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        out[j] = (in + lk.col(j)).maxCoeff();
    }
    return out;
}

}  // namespace

double consistency_check(const DiscretizedOperator& op, const SpectralResult& res, int n) {
    if (n < 2) throw Error("consistency check needs n >= 2");
    if (!op.materialized()) {
        throw GridCapExceeded("consistency check contracts the dense kernel; grid too large");
    }
    const Mat lk = log_kernel_matrix(op);
    const double logr = std::log(res.r);
    const double scale = std::exp(op.log_scale());

    // Gap vectors at the contracted endpoint.
    const Vec tw = op.apply_adjoint(res.w) * scale;  // (T* w) in natural scale
    const Vec tv = op.apply(res.v) * scale;          // (T v)
    const Vec gap_right = (tw / res.r - res.w).cwiseAbs();
    const Vec gap_left = (tv / res.r - res.v).cwiseAbs();

    // Max over the remaining (n-1)-fold grid of the density prefix times the
    // gap; products of positive factors, so the max runs through a max-plus
    // chain of length n-2.
    auto endpoint_max = [&](const Vec& head, const Vec& gap) {
        Vec m = head.array().log();
        for (int t = 0; t < n - 2; ++t) m = max_plus_step(m, lk);
        const Vec total = m.array() + gap.array().log();
        return std::exp(total.maxCoeff() - (n - 2) * logr);
    };
    const double right = endpoint_max(res.v, gap_right);
    // Mirror for the left endpoint: chains run from w backwards.
    auto endpoint_max_left = [&](const Vec& tail, const Vec& gap) {
        Vec m = tail.array().log();
        const Mat lkt = lk.transpose();
        for (int t = 0; t < n - 2; ++t) m = max_plus_step(m, lkt);
        const Vec total = m.array() + gap.array().log();
        return std::exp(total.maxCoeff() - (n - 2) * logr);
    };
    const double left = endpoint_max_left(res.w, gap_left);
    return std::max(right, left);
}

double log_reflective_density(const InteractionKernel& kernel,
                              const std::vector<std::vector<double>>& points) {
    const int n = static_cast<int>(points.size());
    if (n < 1) throw Error("reflective density needs at least one state");
    for (const auto& pt : points) {
        if (static_cast<int>(pt.size()) != kernel.state_dim() || !kernel.in_support(pt.data())) {
            throw OutOfSupport("reflective density point outside support");
        }
    }
    // G(x_1) prod_{t>=2} H(x_{t-1}, x_t) G(x_t)
    double acc = kernel.log_g(points[0].data());
    for (int t = 1; t < n; ++t) {
        acc += kernel.log_h(points[t - 1].data(), points[t].data()) +
               kernel.log_g(points[t].data());
    }
    return acc;
}

ReflectiveDemo reflective_nonstationarity_demo(const DiscretizedOperator& op, int n) {
    if (n < 2) throw Error("reflective demo needs n >= 2");
    const std::size_t ng = op.size();
    const int p = op.space().p();
    const int slices = op.space().slices();
    if (slices != 1) throw Error("reflective demo runs on a single-slice space");

    // Reflective joint = f(x_1) [prod R] f(x_n) with f = G^{1/2}.
    Vec f = (0.5 * op.grid_log_g().array() - 0.5 * op.log_scale()).exp();
    std::vector<Vec> fwd(n), bwd(n);
    fwd[0] = f;
    for (int t = 1; t < n; ++t) fwd[t] = op.apply(fwd[t - 1]);
    bwd[n - 1] = f;
    for (int t = n - 2; t >= 0; --t) bwd[t] = op.apply_adjoint(bwd[t + 1]);

    ReflectiveDemo out;
    out.means = Mat::Zero(n, p);
    out.variances = Mat::Zero(n, p);
    for (int t = 0; t < n; ++t) {
        Vec prod = fwd[t].array() * bwd[t].array();
        const double z = op.inner(prod, Vec::Ones(ng));
        DensityGrid g;
        g.values = prod / z;
        g.log_values = g.values.array().log();
        g.quad_sum = 1.0;
        for (int a = 0; a < p; ++a) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t i = 0; i < ng; ++i) {
                const double x = op.grid_points()(i, a);
                const double w = g.values[i] * op.mu()[i];
                m1 += x * w;
                m2 += x * x * w;
            }
            out.means(t, a) = m1;
            out.variances(t, a) = m2 - m1 * m1;
        }
        out.marginals.push_back(std::move(g));
    }
    return out;
}

MixingCurve mixing_bound_curve(const DiscretizedOperator& op, const SpectralResult& res,
                               int n_max) {
    const std::size_t n = op.size();
    if (n > 1024) {
        throw GridCapExceeded("mixing curve uses dense chain powers; grid too large");
    }
    MixingCurve out;
    out.ratio = res.lambda2_abs / res.r;

    const Mat& k = op.kernel_matrix();  // scaled
    const Mat wk = k * op.mu().asDiagonal();
    const double r_scaled = res.r * std::exp(-op.log_scale());
    const Vec p1 = res.v.array() * res.w.array();

    // chain(x0, y) after lag steps: [prod of lag+1 kernels] with interior
    // quadrature; start with one kernel (lag 0 would be adjacent).
    Mat chain = k;
    double rpow = r_scaled;
    for (int lag = 1; lag <= n_max; ++lag) {
        chain = chain * wk;  // one more step
        rpow *= r_scaled;
        // p_{0,lag+1}(x, y) = v(x) chain(x, y) w(y) / r^{lag+1}
        double acc = 0.0;
        for (Eigen::Index i = 0; i < chain.rows(); ++i) {
            for (Eigen::Index j = 0; j < chain.cols(); ++j) {
                const double joint = res.v[i] * chain(i, j) * res.w[j] / rpow;
                acc += std::abs(joint - p1[i] * p1[j]) * op.mu()[i] * op.mu()[j];
            }
        }
        out.exact_beta.push_back(0.5 * acc);
    }
    out.c = out.ratio > 0.0 ? out.exact_beta[0] / out.ratio : 0.0;
    for (int lag = 1; lag <= n_max; ++lag) {
        out.bound.push_back(out.c * std::pow(out.ratio, lag));
    }
    return out;
}

double empirical_beta(const std::vector<Mat>& paths, int n, int bins) {
    if (paths.empty() || n < 0) throw Error("empirical_beta needs paths and n >= 0");
    const int lag = n + 1;  // beta(n) separates X_t from X_{t+n+1}
    const int p = static_cast<int>(paths.front().cols());
    double worst = 0.0;
    for (int a = 0; a < p; ++a) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        bool integer_valued = true;
        for (const auto& path : paths) {
            for (Eigen::Index t = 0; t < path.rows(); ++t) {
                const double x = path(t, a);
                lo = std::min(lo, x);
                hi = std::max(hi, x);
                integer_valued = integer_valued && x == std::floor(x);
            }
        }
        int nb = bins;
        if (integer_valued && hi - lo + 1 <= bins) nb = static_cast<int>(hi - lo) + 1;
        if (!(hi > lo)) nb = 1;
        auto bin_of = [&](double x) {
            if (nb == 1) return 0;
            int b = static_cast<int>((x - lo) / (hi - lo) * nb);
            return std::clamp(b, 0, nb - 1);
        };
        Mat joint = Mat::Zero(nb, nb);
        std::size_t count = 0;
        for (const auto& path : paths) {
            for (Eigen::Index t = 0; t + lag < path.rows(); ++t) {
                joint(bin_of(path(t, a)), bin_of(path(t + lag, a))) += 1.0;
                ++count;
            }
        }
        if (count == 0) throw Error("paths too short for requested lag");
        joint /= static_cast<double>(count);
        const Vec rows = joint.rowwise().sum();
        const Vec cols = joint.colwise().sum();
        double acc = 0.0;
        for (int i = 0; i < nb; ++i) {
            for (int j = 0; j < nb; ++j) {
                acc += std::abs(joint(i, j) - rows[i] * cols[j]);
            }
        }
        worst = std::max(worst, 0.5 * acc);
    }
    return worst;
}

std::vector<double> tv_decay(const DiscretizedOperator& op, const SpectralResult& res, int n,
                             const std::vector<int>& m_list) {
    const std::size_t ng = op.size();
    if (ng > 1024) throw GridCapExceeded("tv_decay: chain powers are dense; grid too large");
    const double r_scaled = res.r * std::exp(-op.log_scale());

    // Interior chain over n+1 kernel steps, quadrature-weighted inside.
    const Mat& k = op.kernel_matrix();
    const Mat wk = k * op.mu().asDiagonal();
    Mat chain = k;
    double rpow = r_scaled;
    for (int t = 0; t < n; ++t) {
        chain = chain * wk;
        rpow *= r_scaled;
    }

    Vec f = (0.5 * op.grid_log_g().array() - 0.5 * op.log_scale()).exp();
    std::vector<double> out;
    for (int m : m_list) {
        if (m < 2) throw Error("tv_decay needs pad width m >= 2");
        Vec a = f, b = f;
        for (int s = 0; s < m - 1; ++s) {
            a = op.apply(a);
            b = op.apply_adjoint(b);
        }
        // h(x_0..x_{n+1}) = Z^{-1} a(x_0) q(x) b(x_{n+1});
        // p              = r^{-(n+1)} v(x_0) q(x) w(x_{n+1}).
        const Vec ca = chain.transpose() * (op.mu().array() * a.array()).matrix();
        const double z = op.inner(ca, b);
        double acc = 0.0;
        for (std::size_t i = 0; i < ng; ++i) {
            for (std::size_t j = 0; j < ng; ++j) {
                const double hq = a[i] * b[j] / z;
                const double pq = res.v[i] * res.w[j] / rpow;
                acc += std::abs(hq - pq) * chain(i, j) * op.mu()[i] * op.mu()[j];
            }
        }
        out.push_back(0.5 * acc);
    }
    return out;
}

}  // namespace cestgm
