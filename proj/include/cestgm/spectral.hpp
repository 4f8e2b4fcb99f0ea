#ifndef CESTGM_SPECTRAL_HPP
#define CESTGM_SPECTRAL_HPP

#include <cstdint>
#include <optional>

#include "cestgm/kernel.hpp"
#include "cestgm/quadrature.hpp"

namespace cestgm {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Nystrom discretization of T and T* on a quadrature grid:
//   (T f)[y_j]  = sum_i R(x_i, y_j) f(x_i) mu_i
//   (T* f)[y_j] = sum_i R(y_j, x_i) f(x_i) mu_i
// Kernel values are stored relative to their maximum log (the operator is
// internally scaled by exp(-log_scale), and spectra are scaled back), so the
// exponentials never overflow even for wildly unnormalized kernels.
class DiscretizedOperator {
public:
    DiscretizedOperator(const InteractionKernel& kernel, DiscretizedSpace space,
                        std::size_t materialize_cap = 4096);

    const InteractionKernel& kernel() const { return kernel_; }
    const DiscretizedSpace& space() const { return space_; }
    std::size_t size() const { return n_; }
    const Vec& mu() const { return mu_; }
    // Grid point i as a contiguous row of an n x dim matrix.
    const RowMat& grid_points() const { return points_; }
    const RowMat& grid_stats() const { return stats_; }
    const Vec& grid_log_g() const { return log_g_; }
    double log_scale() const { return log_scale_; }
    bool materialized() const { return kmat_.has_value(); }
    // K(i, j) = R(x_i, x_j) / exp(log_scale); only when materialized.
    const Mat& kernel_matrix() const;

    // Scaled actions: T / exp(log_scale) and T* / exp(log_scale).
    Vec apply(const Vec& f) const;
    Vec apply_adjoint(const Vec& f) const;

    double inner(const Vec& f, const Vec& g) const { return (f.array() * g.array() * mu_.array()).sum(); }
    double norm(const Vec& f) const { return std::sqrt(inner(f, f)); }

    // Symmetrized form A~(j, i) = sqrt(mu_j) K(i, j) sqrt(mu_i), similar to the
    // scaled weighted action.
    Mat symmetrized() const;

private:
    InteractionKernel kernel_;
    DiscretizedSpace space_;
    std::size_t n_;
    RowMat points_;
    Vec mu_;
    RowMat stats_;       // n x stat_dim
    Vec log_g_;          // n
    RowMat stats_cross_; // stats_ * C, n x stat_dim
    double log_scale_;   // max over pairs of log R
    std::optional<Mat> kmat_;
};

struct SpectralResult {
    double r = 0.0;
    Vec v, w;  // positive grid vectors, <v, v> = 1 and <v, w> = 1 in grid inner product
    double lambda2_abs = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

struct PowerConfig {
    double tol = 1e-10;
    int max_iter = 10000;
    bool estimate_subdominant = true;
    int probes = 8;
    std::uint64_t probe_seed = 911;
};

// Power iteration for the dominant eigenpair of T, repeated on T* for v*,
// then w = v*/<v, v*>. r is the Rayleigh quotient <Tv, v>/<v, v>.
// Throws NoConvergence / NonPositiveIterate.
SpectralResult power_iterate(const DiscretizedOperator& op, const PowerConfig& config = {});

// Gelfand-style growth-ratio estimate of |lambda_2| from the deflated map
// M(f) = T(f) - r <f, w> v applied k_steps times to random probes; the
// reported value is the median over probes of the geometric-mean growth over
// the trailing ratio_window steps. Returns 0 when deflated iterates vanish.
double subdominant_abs(const DiscretizedOperator& op, const SpectralResult& result,
                       int probes = 8, int k_steps = 30, int ratio_window = 10,
                       std::uint64_t seed = 911);

struct DenseSpectrum {
    std::vector<double> magnitudes;  // descending
    double r = 0.0;
    double lambda2_abs = 0.0;
    Vec v, w;  // same normalization as SpectralResult
};

// Full eigendecomposition of the symmetrized discretization; independent
// verification path for power_iterate. Throws OracleSizeExceeded when the
// grid is larger than 4096.
DenseSpectrum dense_oracle(const DiscretizedOperator& op);

// Nystrom extension of the eigenfunctions to off-grid states:
//   v(y) = r^{-1} sum_i R(x_i, y) v_i mu_i,  w(y) = r^{-1} sum_i R(y, x_i) w_i mu_i.
// On grid points these reproduce the grid vectors up to the residual.
double log_nystrom_v(const DiscretizedOperator& op, const SpectralResult& res, const double* y);
double log_nystrom_w(const DiscretizedOperator& op, const SpectralResult& res, const double* y);

}  // namespace cestgm

#endif
