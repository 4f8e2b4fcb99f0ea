#include "cestgm/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "cestgm/parallel.hpp"

namespace cestgm {

DiscretizedOperator::DiscretizedOperator(const InteractionKernel& kernel, DiscretizedSpace space,
                                         std::size_t materialize_cap)
    : kernel_(kernel), space_(std::move(space)), n_(space_.total_size()) {
    if (space_.dim() != kernel_.state_dim()) {
        throw Error("space dimension does not match kernel state dimension");
    }
    if (n_ > (1u << 14)) {
        throw GridCapExceeded("discretized operators cost O(N^2) per application; grid size " +
                              std::to_string(n_) + " exceeds 16384");
    }
    const int dim = space_.dim();
    const int sd = kernel_.stat_dim();
    points_.resize(n_, dim);
    mu_.resize(n_);
    stats_.resize(n_, sd);
    log_g_.resize(n_);
    std::vector<double> pt(dim);
    for (std::size_t i = 0; i < n_; ++i) {
        space_.point_at(i, pt.data());
        for (int k = 0; k < dim; ++k) points_(i, k) = pt[k];
        mu_[i] = space_.weight_at(i);
        kernel_.stack_stats(pt.data(), stats_.row(i).data());
        log_g_[i] = kernel_.log_g(pt.data());
    }
    stats_cross_ = stats_ * kernel_.cross_coupling();

    // log R(x_i, x_j) = 0.5 lg_i + <SC_i, S_j> + 0.5 lg_j; find the max for scaling.
    std::vector<double> row_max(n_);
    parallel_chunks(n_, [&](std::size_t b, std::size_t e) {
        Vec row(n_);
        for (std::size_t i = b; i < e; ++i) {
            row = stats_ * stats_cross_.row(i).transpose();
            row.array() += 0.5 * log_g_[i] + 0.5 * log_g_.array();
            row_max[i] = row.maxCoeff();
        }
    });
    log_scale_ = *std::max_element(row_max.begin(), row_max.end());

    if (n_ <= materialize_cap) {
        kmat_.emplace(n_, n_);
        Mat& km = *kmat_;
        parallel_chunks(n_, [&](std::size_t b, std::size_t e) {
            Vec row(n_);
            for (std::size_t i = b; i < e; ++i) {
                row = stats_ * stats_cross_.row(i).transpose();
                row.array() += 0.5 * log_g_[i] + 0.5 * log_g_.array() - log_scale_;
                km.row(i) = row.array().exp();
            }
        });
    }
}

const Mat& DiscretizedOperator::kernel_matrix() const {
    if (!kmat_) throw Error("kernel matrix not materialized at this grid size");
    return *kmat_;
}

Vec DiscretizedOperator::apply(const Vec& f) const {
    const Vec mf = mu_.array() * f.array();
    if (kmat_) return kmat_->transpose() * mf;
    Vec out = Vec::Zero(n_);
    parallel_chunks(n_, [&](std::size_t b, std::size_t e) {
        Vec row(n_);
        for (std::size_t j = b; j < e; ++j) {
            // column j of K: log R(x_i, x_j) over i
            row = stats_cross_ * stats_.row(j).transpose();
            row.array() += 0.5 * log_g_.array() + 0.5 * log_g_[j] - log_scale_;
            out[j] = (row.array().exp() * mf.array()).sum();
        }
    });
    return out;
}

Vec DiscretizedOperator::apply_adjoint(const Vec& f) const {
    const Vec mf = mu_.array() * f.array();
    if (kmat_) return (*kmat_) * mf;
    Vec out = Vec::Zero(n_);
    parallel_chunks(n_, [&](std::size_t b, std::size_t e) {
        Vec row(n_);
        for (std::size_t j = b; j < e; ++j) {
            row = stats_ * stats_cross_.row(j).transpose();
            row.array() += 0.5 * log_g_[j] + 0.5 * log_g_.array() - log_scale_;
            out[j] = (row.array().exp() * mf.array()).sum();
        }
    });
    return out;
}

Mat DiscretizedOperator::symmetrized() const {
    const Vec sq = mu_.array().sqrt();
    const Mat& km = kernel_matrix();
    return sq.asDiagonal() * km.transpose() * sq.asDiagonal();
}

namespace {

struct IterationOutcome {
    Vec vec;
    double rayleigh;  // scaled
    double residual;
    int iterations;
};

IterationOutcome iterate_to_dominant(const DiscretizedOperator& op, bool adjoint, double tol,
                                     int max_iter) {
    const std::size_t n = op.size();
    Vec f = Vec::Ones(n);
    f /= op.norm(f);
    double lambda = 0.0, res = std::numeric_limits<double>::infinity();
    int it = 0;
    while (it < max_iter) {
        ++it;
        Vec g = adjoint ? op.apply_adjoint(f) : op.apply(f);
        if (!(g.minCoeff() > 0.0) || !g.allFinite()) {
            throw NonPositiveIterate(
                "power iteration produced a nonpositive or non-finite iterate (grid or"
                " truncation failure)");
        }
        lambda = op.inner(g, f) / op.inner(f, f);
        res = op.norm(g - lambda * f) / (lambda * op.norm(f));
        f = g / op.norm(g);
        if (res <= tol) {
            return {std::move(f), lambda, res, it};
        }
    }
    throw NoConvergence("power iteration did not reach tolerance " + std::to_string(tol), it, res);
}

}  // namespace

SpectralResult power_iterate(const DiscretizedOperator& op, const PowerConfig& config) {
    auto right = iterate_to_dominant(op, false, config.tol, config.max_iter);
    auto left = iterate_to_dominant(op, true, config.tol, config.max_iter);

    SpectralResult res;
    res.v = std::move(right.vec);  // already unit in the grid norm
    const double vw = op.inner(res.v, left.vec);
    if (!(vw > 0.0)) {
        throw NonPositiveIterate("eigenfunction pairing <v, v*> is nonpositive");
    }
    res.w = left.vec / vw;
    res.r = right.rayleigh * std::exp(op.log_scale());
    res.residual = std::max(right.residual, left.residual);
    res.iterations = right.iterations + left.iterations;
    if (config.estimate_subdominant) {
        res.lambda2_abs = subdominant_abs(op, res, config.probes, 30, 10, config.probe_seed);
    }
    return res;
}

double subdominant_abs(const DiscretizedOperator& op, const SpectralResult& result, int probes,
                       int k_steps, int ratio_window, std::uint64_t seed) {
    const std::size_t n = op.size();
    const double r_scaled = result.r * std::exp(-op.log_scale());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> estimates;
    for (int pr = 0; pr < probes; ++pr) {
        Vec f(n);
        for (std::size_t i = 0; i < n; ++i) f[i] = gauss(rng);
        // Remove the dominant direction, then iterate the deflated map,
        // re-projecting every step so roundoff leakage into v cannot compound.
        f -= op.inner(f, result.w) * result.v;
        double nf = op.norm(f);
        if (!(nf > 0.0)) continue;
        f /= nf;
        std::vector<double> log_growth;
        bool vanished = false;
        for (int k = 0; k < k_steps; ++k) {
            Vec g = op.apply(f);
            g -= op.inner(g, result.w) * result.v;
            const double ng = op.norm(g);
            if (!(ng > r_scaled * 1e-13)) {
                vanished = true;
                break;
            }
            log_growth.push_back(std::log(ng));
            f = g / ng;
        }
        if (vanished || log_growth.empty()) {
            estimates.push_back(0.0);
            continue;
        }
        const int win = std::min<int>(ratio_window, static_cast<int>(log_growth.size()));
        double acc = 0.0;
        for (int k = static_cast<int>(log_growth.size()) - win;
             k < static_cast<int>(log_growth.size()); ++k) {
            acc += log_growth[k];
        }
        estimates.push_back(std::exp(acc / win + op.log_scale()));
    }
    if (estimates.empty()) return 0.0;
    std::sort(estimates.begin(), estimates.end());
    return estimates[estimates.size() / 2];
}

DenseSpectrum dense_oracle(const DiscretizedOperator& op) {
    const std::size_t n = op.size();
    if (n > 4096) {
        throw OracleSizeExceeded("dense oracle limited to grids of size <= 4096, got " +
                                 std::to_string(n));
    }
    const Mat a = op.symmetrized();
    const double scale = std::exp(op.log_scale());
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    const double amax = a.cwiseAbs().maxCoeff();

    DenseSpectrum out;
    Vec u_right(n), u_left(n);
    if (asym <= 1e-12 * std::max(amax, 1.0)) {
        Eigen::SelfAdjointEigenSolver<Mat> es(a);
        const Vec& ev = es.eigenvalues();  // ascending
        for (int i = static_cast<int>(n) - 1; i >= 0; --i) {
            out.magnitudes.push_back(std::abs(ev[i]) * scale);
        }
        std::sort(out.magnitudes.rbegin(), out.magnitudes.rend());
        out.r = ev[n - 1] * scale;
        u_right = es.eigenvectors().col(n - 1);
        u_left = u_right;
    } else {
        Eigen::EigenSolver<Mat> es(a);
        const auto& ev = es.eigenvalues();
        int dom = 0;
        for (int i = 1; i < static_cast<int>(n); ++i) {
            if (std::abs(ev[i]) > std::abs(ev[dom])) dom = i;
        }
        for (int i = 0; i < static_cast<int>(n); ++i) out.magnitudes.push_back(std::abs(ev[i]) * scale);
        std::sort(out.magnitudes.rbegin(), out.magnitudes.rend());
        out.r = ev[dom].real() * scale;
        u_right = es.eigenvectors().col(dom).real();
        Eigen::EigenSolver<Mat> est(a.transpose());
        int doml = 0;
        for (int i = 1; i < static_cast<int>(n); ++i) {
            if (std::abs(est.eigenvalues()[i]) > std::abs(est.eigenvalues()[doml])) doml = i;
        }
        u_left = est.eigenvectors().col(doml).real();
    }
    out.lambda2_abs = out.magnitudes.size() > 1 ? out.magnitudes[1] : 0.0;

    // Unweight back to grid eigenfunctions and fix signs positive.
    const Vec isq = op.mu().array().rsqrt();
    Vec v = u_right.array() * isq.array();
    Vec w = u_left.array() * isq.array();
    if (v.sum() < 0.0) v = -v;
    if (w.sum() < 0.0) w = -w;
    v /= op.norm(v);
    const double vw = op.inner(v, w);
    if (!(vw > 0.0)) throw Error("dense oracle: nonpositive <v, w> pairing");
    w /= vw;
    out.v = std::move(v);
    out.w = std::move(w);
    return out;
}

namespace {

double log_nystrom_side(const DiscretizedOperator& op, const Vec& eigvec, const double* y,
                        bool y_on_left, double r) {
    const InteractionKernel& kernel = op.kernel();
    if (!kernel.in_support(y)) throw OutOfSupport("nystrom extension point outside support");
    Vec sy(kernel.stat_dim());
    kernel.stack_stats(y, sy.data());
    const double lgy = kernel.log_g(y);
    // log R(x_i, y) = 0.5 lg_i + S_i C s_y + 0.5 lg_y; swap sides for log R(y, x_i).
    const Vec cross = y_on_left ? Vec(kernel.cross_coupling().transpose() * sy)
                                : Vec(kernel.cross_coupling() * sy);
    Vec terms = op.grid_stats() * cross;
    terms.array() += 0.5 * op.grid_log_g().array() + 0.5 * lgy + eigvec.array().log() +
                     op.mu().array().log();
    const double m = terms.maxCoeff();
    const double s = (terms.array() - m).exp().sum();
    return m + std::log(s) - std::log(r);
}

}  // namespace

double log_nystrom_v(const DiscretizedOperator& op, const SpectralResult& res, const double* y) {
    return log_nystrom_side(op, res.v, y, /*y_on_left=*/false, res.r);
}

double log_nystrom_w(const DiscretizedOperator& op, const SpectralResult& res, const double* y) {
    return log_nystrom_side(op, res.w, y, /*y_on_left=*/true, res.r);
}

}  // namespace cestgm
