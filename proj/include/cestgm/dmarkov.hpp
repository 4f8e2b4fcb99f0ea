#ifndef CESTGM_DMARKOV_HPP
#define CESTGM_DMARKOV_HPP

#include "cestgm/density.hpp"
#include "cestgm/spectral.hpp"

namespace cestgm {

// Interaction kernel on the block space X_d for Markov order d >= 2.
InteractionKernel build_block_kernel(const ValidatedModel& model);

// Per-node axes tiled over the d slices.
DiscretizedSpace build_block_space(const ValidatedModel& model, const GridConfig& config);

// Stationary joint of n consecutive blocks (each point is a p*d block state).
double log_block_joint_density(const DiscretizedOperator& block_op, const SpectralResult& res,
                               const std::vector<std::vector<double>>& block_points);

// Single-time marginal of the block p_1 at slice offset j, as a density on
// the per-slice grid.
Vec offset_marginal(const DiscretizedOperator& block_op, const SpectralResult& res, int offset);

// Operational stationarity check: max over offsets and grid points of the
// gap between offset marginals (all offsets must agree for a stationary
// scalar relabeling of the block process).
double shift_consistency_check(const DiscretizedOperator& block_op, const SpectralResult& res);

}  // namespace cestgm

#endif
