#include "cestgm/dmarkov.hpp"

#include <cmath>

namespace cestgm {

InteractionKernel build_block_kernel(const ValidatedModel& model) {
    if (model.d() < 2) {
        throw UnsupportedOrder("block kernel is the d >= 2 construction; use the plain"
                               " interaction kernel for d = 1");
    }
    return InteractionKernel(model);
}

DiscretizedSpace build_block_space(const ValidatedModel& model, const GridConfig& config) {
    DiscretizedSpace slice = build_space(model, config);
    return slice.tiled(model.d(), config.grid_cap);
}

double log_block_joint_density(const DiscretizedOperator& block_op, const SpectralResult& res,
                               const std::vector<std::vector<double>>& block_points) {
    return log_joint_density(block_op, res, block_points);
}

Vec offset_marginal(const DiscretizedOperator& block_op, const SpectralResult& res, int offset) {
    const DiscretizedSpace& space = block_op.space();
    const int d = space.slices();
    const int p = space.p();
    if (offset < 0 || offset >= d) throw Error("offset must lie in 0..d-1");

    std::size_t slice_size = 1;
    for (int a = 0; a < p; ++a) slice_size *= space.axis(a).points.size();

    const Vec p1 = res.v.array() * res.w.array();
    Vec marg = Vec::Zero(slice_size);
    std::vector<std::size_t> idx(space.dim(), 0);
    const std::size_t n = space.total_size();
    for (std::size_t flat = 0; flat < n; ++flat) {
        // slice sub-index and the quadrature weight of all other slices
        std::size_t sub = 0;
        double w_other = 1.0;
        for (int ax = 0; ax < space.dim(); ++ax) {
            const int slice = ax / p;
            if (slice == offset) {
                sub = sub * space.axis(ax).points.size() + idx[ax];
            } else {
                w_other *= space.axis(ax).weights[idx[ax]];
            }
        }
        marg[sub] += p1[flat] * w_other;
        // odometer increment, last axis fastest
        for (int ax = space.dim() - 1; ax >= 0; --ax) {
            if (++idx[ax] < space.axis(ax).points.size()) break;
            idx[ax] = 0;
        }
    }
    return marg;
}

double shift_consistency_check(const DiscretizedOperator& block_op, const SpectralResult& res) {
    const int d = block_op.space().slices();
    if (d < 2) throw UnsupportedOrder("shift consistency applies to block operators (d >= 2)");
    const Vec ref = offset_marginal(block_op, res, 0);
    double worst = 0.0;
    for (int j = 1; j < d; ++j) {
        worst = std::max(worst, (offset_marginal(block_op, res, j) - ref).cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace cestgm
