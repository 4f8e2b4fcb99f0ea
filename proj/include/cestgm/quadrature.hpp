#ifndef CESTGM_QUADRATURE_HPP
#define CESTGM_QUADRATURE_HPP

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "cestgm/model.hpp"

namespace cestgm {

// One node variable's quadrature rule approximating integration against its
// reference measure: trapezoid weights on a truncated interval for Lebesgue
// axes, unit weights on enumerated points for counting axes.
struct Axis {
    std::vector<double> points;   // ascending
    std::vector<double> weights;  // > 0
    bool counting = false;
    bool truncated_tail = false;  // Poisson-style truncation; extendable
    int size() const { return static_cast<int>(points.size()); }
    double lo() const { return points.front(); }
    double hi() const { return points.back(); }
};

struct GridConfig {
    int grid_size = 201;              // points per continuous axis
    std::size_t grid_cap = 1u << 20;  // max tensor-grid size
    double truncation_tol = 1e-12;    // certified envelope mass outside the domain
};

// Tensor grid over nodes (and over d time-slices for block operators).
// Flat index: axis 0 slowest, last axis fastest.
class DiscretizedSpace {
public:
    DiscretizedSpace() = default;
    DiscretizedSpace(std::vector<Axis> axes, int p, int slices);

    int dim() const { return static_cast<int>(axes_.size()); }
    int p() const { return p_; }
    int slices() const { return slices_; }
    const Axis& axis(int i) const { return axes_[i]; }
    const std::vector<Axis>& axes() const { return axes_; }
    std::size_t total_size() const { return total_; }

    void point_at(std::size_t flat, double* out) const;
    std::vector<double> point_at(std::size_t flat) const;
    double weight_at(std::size_t flat) const;

    // Same per-node axes tiled over `slices` time slices (d-Markov block space).
    DiscretizedSpace tiled(int slices, std::size_t grid_cap) const;
    // Domain-extension step for the Hilbert-Schmidt divergence probe:
    // continuous intervals scaled by `factor` about their center, Poisson-style
    // counting tails extended by `factor`; exact axes (binary/binomial) kept.
    // Continuous axis point counts grow with the domain up to per_axis_cap.
    DiscretizedSpace extended(double factor, int per_axis_cap, std::size_t grid_cap) const;
    bool extendable() const;

private:
    std::vector<Axis> axes_;
    std::vector<std::size_t> strides_;
    std::size_t total_ = 0;
    int p_ = 0;
    int slices_ = 1;
};

// Per-node truncated axes for one time slice. Continuous axes use the
// family's analytic tail bound when the HS screen certifies the node;
// otherwise the domain is grown geometrically until the kernel row-mass at
// the boundary falls below truncation_tol (at most 8 doublings), after which
// UnboundedEnvelope is thrown.
DiscretizedSpace build_space(const ValidatedModel& model, const GridConfig& config);

// Same, with per-node interval overrides (lo, hi); counting axes interpret
// hi as the truncation point. Overridden axes skip certification.
DiscretizedSpace build_space(const ValidatedModel& model, const GridConfig& config,
                             const std::vector<std::optional<std::pair<double, double>>>& intervals);

// Base-envelope axes without tail certification or geometric extension; used
// for divergence diagnostics on models whose couplings defeat the analytic
// bounds (the resulting grid is a probe domain, not a certified one).
DiscretizedSpace build_space_uncertified(const ValidatedModel& model, const GridConfig& config);

// Truncation point for a Poisson axis: smallest K with upper tail mass of
// Poisson(lambda) beyond K below tol.
int poisson_truncation(double lambda, double tol);

}  // namespace cestgm

#endif
