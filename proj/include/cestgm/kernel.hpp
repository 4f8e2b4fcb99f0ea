#ifndef CESTGM_KERNEL_HPP
#define CESTGM_KERNEL_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "cestgm/model.hpp"
#include "cestgm/quadrature.hpp"

namespace cestgm {

// The interaction kernel R(x, y) = G(x)^{1/2} H(x, y) G(y)^{1/2} on the
// d-slice state space X_d. States are length p*d arrays ordered
// [slice 1 nodes..., slice 2 nodes..., ...]; all arithmetic is in log space.
//
// G carries the within-block terms (theta, base measures, the Psi_0 quadratic
// at weight 1/2, and lag-l cross terms with l <= d - t); H carries only the
// between-block interactions.
class InteractionKernel {
public:
    explicit InteractionKernel(const ValidatedModel& model);

    const ValidatedModel& model() const { return model_; }
    int d() const { return model_.d(); }
    int state_dim() const { return model_.p() * model_.d(); }
    // Stacked statistic dimension over the d slices.
    int stat_dim() const { return model_.k_total() * model_.d(); }

    // Writes the stacked statistics of all d slices into out[0..stat_dim).
    void stack_stats(const double* state, double* out) const;

    double log_g(const double* state) const;
    double log_h(const double* x, const double* y) const;
    double log_r(const double* x, const double* y) const;
    double eval(const double* x, const double* y) const;

    // Checked variants for caller-supplied points; throw OutOfSupport.
    double log_r_checked(const std::vector<double>& x, const std::vector<double>& y) const;

    bool in_support(const double* state) const;

    // Between-block coupling matrix C (stat_dim x stat_dim):
    // log H(x, y) = S(x)^T C S(y). Exposed for discretized operators.
    const Mat& cross_coupling() const { return cross_; }
    // log G(x) = theta_w^T S(x) + 1/2 S(x)^T G2 S(x) + sum of base terms,
    // with G2 the symmetric within-block quadratic coupling.
    const Vec& g_linear() const { return g_lin_; }
    const Mat& g_quadratic() const { return g_quad_; }

private:
    ValidatedModel model_;
    Vec g_lin_;   // stat_dim
    Mat g_quad_;  // stat_dim x stat_dim, symmetric
    Mat cross_;   // stat_dim x stat_dim
};

// Quadrature estimate of the Hilbert-Schmidt norm squared, plus the
// domain-doubling divergence probe.
struct HsResult {
    double log_value = 0.0;       // log of the estimate on the given space
    double value = 0.0;           // exp(log_value)
    double log_extended = 0.0;    // after probe extensions (== log_value if none)
    bool diverging = false;       // NotHilbertSchmidt flag
    bool probe_capped = false;    // probe stopped by grid caps, not by a verdict
    int doublings = 0;
    std::vector<double> probe_log_values;
};

struct HsProbeConfig {
    int max_doublings = 8;
    double growth_threshold = 0.10;  // relative growth per doubling
    int consecutive_growths = 3;     // flag after this many in a row
    double plateau_threshold = 1e-3;
    int per_axis_cap = 1024;           // probe grid points per continuous axis
    std::size_t probe_total_cap = 1u << 13;  // max probe grid size (N^2 kernel evals)
};

HsResult hs_norm_sq(const InteractionKernel& kernel, const DiscretizedSpace& space,
                    const HsProbeConfig& probe = {});

// Analytic sufficient conditions for the HS property, per node family:
// Gaussian theta_1 dominance over |2 phi|-type coupling mass, Poisson and
// Exponential sign conditions, Beta shape positivity with nonpositive
// couplings; binary/binomial always pass. Mixed models need every clause.
HsScreening sufficient_hs_check(const ValidatedModel& model);

// Hammersley-Clifford style factorization of R over the cliques of the
// conditional-independence graph (1-Markov only): node terms split 1/p_a,
// pair terms 1/p_{(a,b)} across the maximal cliques containing them.
struct CliqueKernel {
    std::vector<int> nodes;  // 0-based, ascending
    Vec g_lin;
    Mat g_quad;
    Mat cross;
    std::vector<double> base_weight;  // per node in `nodes`: 1/p_a
};

class CliqueFactorization {
public:
    const std::vector<CliqueKernel>& cliques() const { return cliques_; }
    double log_r_clique(const CliqueKernel& ck, const double* x, const double* y) const;
    // sum over cliques of log R_D(x_D, y_D); equals log R(x, y).
    double log_r_sum(const double* x, const double* y) const;

    friend CliqueFactorization clique_factorization(const InteractionKernel& kernel);

private:
    std::shared_ptr<const ValidatedModel> model_;
    std::vector<CliqueKernel> cliques_;
};

// Throws UnsupportedOrder for d > 1.
CliqueFactorization clique_factorization(const InteractionKernel& kernel);

// Max over `samples` random support points of
// |log R(x, y) - sum_D log R_D(x_D, y_D)|.
double factorization_residual(const InteractionKernel& kernel,
                              const CliqueFactorization& fact, int samples,
                              std::uint64_t seed = 20240901);

// Random point in the tensor support (used by the residual check and tests).
std::vector<double> random_support_point(const ValidatedModel& model, int slices,
                                         std::mt19937_64& rng);

}  // namespace cestgm

#endif
