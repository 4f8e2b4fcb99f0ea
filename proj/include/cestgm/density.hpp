#ifndef CESTGM_DENSITY_HPP
#define CESTGM_DENSITY_HPP

#include <utility>
#include <vector>

#include "cestgm/spectral.hpp"

namespace cestgm {

struct DensityGrid {
    Vec values;
    Vec log_values;
    double quad_sum = 0.0;
};

// p_1 = v .* w; quadrature sum must be 1 (NormalizationFailure beyond 1e-6).
DensityGrid marginal_p1(const DiscretizedOperator& op, const SpectralResult& res);

// log p_{[1:n]}(x_1, ..., x_n) = -(n-1) log r + log v(x_1) + sum log R + log w(x_n).
// States may be off-grid; v and w are evaluated by Nystrom extension.
double log_joint_density(const DiscretizedOperator& op, const SpectralResult& res,
                         const std::vector<std::vector<double>>& points);

// Right/left Markov transition kernels at arbitrary states.
double log_transition_right(const DiscretizedOperator& op, const SpectralResult& res,
                            const std::vector<double>& x_prev, const std::vector<double>& x);
double log_transition_left(const DiscretizedOperator& op, const SpectralResult& res,
                           const std::vector<double>& x_prev, const std::vector<double>& x);

// Kolmogorov consistency: max over the grid of the absolute gap between the
// endpoint-marginalized p_{[1:n]} and p_{[1:n-1]}, for both endpoints.
double consistency_check(const DiscretizedOperator& op, const SpectralResult& res, int n);

// Unnormalized reflective-boundary joint p^(n) (log scale, up to c^(n)).
double log_reflective_density(const InteractionKernel& kernel,
                              const std::vector<std::vector<double>>& points);

// Normalizes p^(n) on the operator grid and reports per-time, per-node
// marginal moments; endpoint rows differ from interior rows whenever the
// couplings are nonzero (the reflective joint is not stationary).
struct ReflectiveDemo {
    Mat means;      // n x p
    Mat variances;  // n x p
    std::vector<DensityGrid> marginals;  // per time slice, on the operator grid
};
ReflectiveDemo reflective_nonstationarity_demo(const DiscretizedOperator& op, int n);

// Exact grid beta coefficients beta(n) = 1/2 sum |p_{0,n+1} - p_1 x p_1| and the
// calibrated geometric bound C * (|lambda_2|/r)^n with C fixed by beta(1).
struct MixingCurve {
    std::vector<double> exact_beta;  // index n-1
    std::vector<double> bound;
    double ratio = 0.0;  // |lambda_2| / r
    double c = 0.0;
};
MixingCurve mixing_bound_curve(const DiscretizedOperator& op, const SpectralResult& res,
                               int n_max);

// Empirical estimate of beta(n), the dependence between X_t and X_{t+n+1}
// (n interior states), pooled over the supplied paths (each row of a path is
// one time step, columns are nodes). Continuous nodes are binned into
// equal-width bins over the pooled range; the maximum over nodes is returned
// for p > 1.
double empirical_beta(const std::vector<Mat>& paths, int n, int bins = 16);

// TV(h^{(m-1)}, p_{[0:n+1]}) for each pad width m, with f = G^{1/2}: the padded
// joint g_{n,m} has its 2(m-1) pad slices contracted exactly (the gap
// factorizes through the shared interior chain, so only endpoint pairs are
// enumerated).
std::vector<double> tv_decay(const DiscretizedOperator& op, const SpectralResult& res, int n,
                             const std::vector<int>& m_list);

}  // namespace cestgm

#endif
