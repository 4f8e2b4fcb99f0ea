#include "cestgm/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "cestgm/kernel.hpp"

namespace cestgm {

namespace {

Axis trapezoid_axis(double lo, double hi, int n) {
    Axis ax;
    ax.counting = false;
    ax.points.resize(n);
    ax.weights.resize(n);
    const double h = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) {
        ax.points[i] = lo + h * i;
        ax.weights[i] = (i == 0 || i == n - 1) ? 0.5 * h : h;
    }
    ax.points.back() = hi;  // avoid accumulated rounding at the right end
    return ax;
}

Axis counting_axis(int lo, int hi) {
    Axis ax;
    ax.counting = true;
    for (int v = lo; v <= hi; ++v) {
        ax.points.push_back(static_cast<double>(v));
        ax.weights.push_back(1.0);
    }
    return ax;
}

}  // namespace

int poisson_truncation(double lambda, double tol) {
    // Smallest K with P(Poisson(lambda) > K) < tol, by direct pmf summation.
    double log_term = -lambda;  // pmf(0)
    double cdf = std::exp(log_term);
    int k = 0;
    const int hard_cap = 100000;
    while (1.0 - cdf >= tol && k < hard_cap) {
        ++k;
        log_term += std::log(lambda) - std::log(static_cast<double>(k));
        cdf += std::exp(log_term);
    }
    return std::max(k, 8);
}

DiscretizedSpace::DiscretizedSpace(std::vector<Axis> axes, int p, int slices)
    : axes_(std::move(axes)), p_(p), slices_(slices) {
    strides_.resize(axes_.size());
    std::size_t s = 1;
    for (int i = static_cast<int>(axes_.size()) - 1; i >= 0; --i) {
        strides_[i] = s;
        s *= axes_[i].points.size();
    }
    total_ = s;
}

void DiscretizedSpace::point_at(std::size_t flat, double* out) const {
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        const std::size_t idx = (flat / strides_[i]) % axes_[i].points.size();
        out[i] = axes_[i].points[idx];
    }
}

std::vector<double> DiscretizedSpace::point_at(std::size_t flat) const {
    std::vector<double> pt(axes_.size());
    point_at(flat, pt.data());
    return pt;
}

double DiscretizedSpace::weight_at(std::size_t flat) const {
    double w = 1.0;
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        const std::size_t idx = (flat / strides_[i]) % axes_[i].points.size();
        w *= axes_[i].weights[idx];
    }
    return w;
}

DiscretizedSpace DiscretizedSpace::tiled(int slices, std::size_t grid_cap) const {
    if (slices_ != 1) throw Error("tiled() expects a single-slice space");
    std::vector<Axis> axes;
    axes.reserve(axes_.size() * slices);
    for (int t = 0; t < slices; ++t) {
        for (const auto& ax : axes_) axes.push_back(ax);
    }
    DiscretizedSpace out(std::move(axes), p_, slices);
    if (out.total_size() > grid_cap) {
        throw GridCapExceeded("tensor grid of size " + std::to_string(out.total_size()) +
                              " exceeds cap " + std::to_string(grid_cap));
    }
    return out;
}

bool DiscretizedSpace::extendable() const {
    for (const auto& ax : axes_) {
        if (!ax.counting || ax.truncated_tail) return true;
    }
    return false;
}

DiscretizedSpace DiscretizedSpace::extended(double factor, int per_axis_cap,
                                            std::size_t grid_cap) const {
    std::vector<Axis> axes;
    for (const auto& ax : axes_) {
        if (!ax.counting) {
            const double mid = 0.5 * (ax.lo() + ax.hi());
            const double half = 0.5 * (ax.hi() - ax.lo()) * factor;
            int n = std::min<int>(per_axis_cap,
                                  static_cast<int>(std::lround((ax.size() - 1) * factor)) + 1);
            axes.push_back(trapezoid_axis(mid - half, mid + half, n));
        } else if (ax.truncated_tail) {
            const int hi = static_cast<int>(std::lround(ax.hi() * factor));
            if (hi + 1 > per_axis_cap) {
                throw GridCapExceeded("counting axis extension exceeds per-axis cap");
            }
            Axis grown = counting_axis(0, hi);
            grown.truncated_tail = true;
            axes.push_back(grown);
        } else {
            axes.push_back(ax);
        }
    }
    DiscretizedSpace out(std::move(axes), p_, slices_);
    if (out.total_size() > grid_cap) {
        throw GridCapExceeded("extended grid of size " + std::to_string(out.total_size()) +
                              " exceeds cap " + std::to_string(grid_cap));
    }
    return out;
}

namespace {

// Envelope interval for one node from its theta offset alone (couplings are
// handled by certification or by the geometric extension).
struct EnvelopeInterval {
    double lo, hi;
    int poisson_k = -1;
    double point_scale = 1.0;  // grow the axis point count with a widened domain
};

// margin/shift widen a coupled gaussian's envelope: the stationary precision
// is only bounded below by the dominance margin, and bounded partners can
// move the conditional mean by up to shift / theta_1.
EnvelopeInterval base_interval(const NodeFamily& fam, const Vec& theta, double tol,
                               double gauss_margin = 0.0, double gauss_shift = 0.0) {
    EnvelopeInterval e{0.0, 0.0};
    switch (fam.kind()) {
        case FamilyKind::Gaussian: {
            if (!(theta[0] > 0.0)) {
                throw UnboundedEnvelope("gaussian axis with nonpositive precision theta_1");
            }
            const double margin = gauss_margin > 0.0 ? std::min(gauss_margin, theta[0]) : theta[0];
            const double sigma = 1.0 / std::sqrt(margin);
            const double mean = theta[1] / theta[0];
            const double width = std::max(8.0, std::sqrt(-2.0 * std::log(tol)) + 0.5);
            const double pad = gauss_shift / std::max(margin, 1e-300);
            e.lo = mean - width * sigma - pad;
            e.hi = mean + width * sigma + pad;
            // keep the step size comparable to the uncoupled envelope
            e.point_scale = std::min(4.0, std::sqrt(theta[0] / margin));
            return e;
        }
        case FamilyKind::ExponentialRate: {
            if (!(theta[0] > 0.0)) {
                throw UnboundedEnvelope("exponential axis with nonpositive rate theta");
            }
            e.lo = 0.0;
            e.hi = -std::log(tol) / theta[0];
            return e;
        }
        case FamilyKind::Beta: {
            e.lo = 1e-6;
            e.hi = 1.0 - 1e-6;
            return e;
        }
        case FamilyKind::Poisson: {
            e.poisson_k = poisson_truncation(std::exp(theta[0]), tol);
            e.lo = 0.0;
            e.hi = e.poisson_k;
            return e;
        }
        default:
            return e;  // binary/binomial handled separately
    }
}

Axis axis_for(const NodeFamily& fam, const EnvelopeInterval& e, int grid_size) {
    switch (fam.kind()) {
        case FamilyKind::Binary:
            return counting_axis(0, 1);
        case FamilyKind::Binomial:
            return counting_axis(0, fam.n_trials());
        case FamilyKind::Poisson: {
            Axis ax = counting_axis(0, static_cast<int>(std::lround(e.hi)));
            ax.truncated_tail = true;
            return ax;
        }
        default: {
            const int n = static_cast<int>(std::lround(grid_size * e.point_scale));
            return trapezoid_axis(e.lo, e.hi, std::max(grid_size, n));
        }
    }
}

// Ratio of the discretized kernel row mass at a boundary state to the row
// mass at the center state. Used to certify truncation when no analytic
// tail bound applies.
double boundary_row_ratio(const InteractionKernel& kernel, const DiscretizedSpace& space,
                          int axis_index, bool upper) {
    const std::size_t n = space.total_size();
    const int dim = space.dim();
    std::vector<double> center(dim), boundary(dim);
    for (int i = 0; i < dim; ++i) {
        const auto& ax = space.axis(i);
        center[i] = ax.counting ? ax.points[0] : ax.points[ax.size() / 2];
        boundary[i] = center[i];
    }
    {
        const auto& ax = space.axis(axis_index);
        boundary[axis_index] = upper ? ax.hi() : ax.lo();
    }
    // Streaming log-sum-exp of log R(x_fixed, x_j) + log mu_j for both states.
    double mb = -std::numeric_limits<double>::infinity(), mc = mb;
    double sb = 0.0, sc = 0.0;
    std::vector<double> pt(dim);
    for (std::size_t j = 0; j < n; ++j) {
        space.point_at(j, pt.data());
        const double lw = std::log(space.weight_at(j));
        const double lb = kernel.log_r(boundary.data(), pt.data()) + lw;
        const double lc = kernel.log_r(center.data(), pt.data()) + lw;
        if (lb > mb) { sb *= std::exp(mb - lb); mb = lb; }
        sb += std::exp(lb - mb);
        if (lc > mc) { sc *= std::exp(mc - lc); mc = lc; }
        sc += std::exp(lc - mc);
    }
    return std::exp(mb + std::log(sb) - mc - std::log(sc));
}

}  // namespace

DiscretizedSpace build_space(const ValidatedModel& model, const GridConfig& config) {
    std::vector<std::optional<std::pair<double, double>>> none(model.p());
    return build_space(model, config, none);
}

DiscretizedSpace build_space_uncertified(const ValidatedModel& model, const GridConfig& config) {
    if (config.grid_size < 16) throw Error("grid_size must be >= 16 per continuous axis");
    std::vector<Axis> axes(model.p());
    for (int a = 0; a < model.p(); ++a) {
        const auto& fam = model.family(a);
        if (fam.kind() == FamilyKind::Binary || fam.kind() == FamilyKind::Binomial) {
            axes[a] = axis_for(fam, EnvelopeInterval{}, config.grid_size);
        } else {
            axes[a] = axis_for(fam, base_interval(fam, model.theta(a), config.truncation_tol),
                               config.grid_size);
        }
    }
    DiscretizedSpace space(axes, model.p(), 1);
    if (space.total_size() > config.grid_cap) {
        throw GridCapExceeded("tensor grid of size " + std::to_string(space.total_size()) +
                              " exceeds cap " + std::to_string(config.grid_cap));
    }
    return space;
}

DiscretizedSpace build_space(const ValidatedModel& model, const GridConfig& config,
                             const std::vector<std::optional<std::pair<double, double>>>& intervals) {
    if (config.grid_size < 16) throw Error("grid_size must be >= 16 per continuous axis");
    if (static_cast<int>(intervals.size()) != model.p()) {
        throw Error("interval override list must have one entry per node");
    }
    const auto& certified = model.hs_screening().node_certified;

    std::vector<Axis> axes(model.p());
    std::vector<int> uncertified;
    for (int a = 0; a < model.p(); ++a) {
        const auto& fam = model.family(a);
        if (intervals[a].has_value()) {
            EnvelopeInterval e{intervals[a]->first, intervals[a]->second};
            axes[a] = axis_for(fam, e, config.grid_size);
            continue;
        }
        if (fam.kind() == FamilyKind::Binary || fam.kind() == FamilyKind::Binomial) {
            axes[a] = axis_for(fam, EnvelopeInterval{}, config.grid_size);
            continue;
        }
        const auto& screen = model.hs_screening();
        const double margin = certified[a] ? screen.gauss_margin[a] : 0.0;
        const double shift = certified[a] ? screen.gauss_shift[a] : 0.0;
        const EnvelopeInterval e =
            base_interval(fam, model.theta(a), config.truncation_tol, margin, shift);
        axes[a] = axis_for(fam, e, config.grid_size);
        if (!certified[a]) uncertified.push_back(a);
    }

    DiscretizedSpace space(axes, model.p(), 1);
    if (space.total_size() > config.grid_cap) {
        throw GridCapExceeded("tensor grid of size " + std::to_string(space.total_size()) +
                              " exceeds cap " + std::to_string(config.grid_cap));
    }
    if (uncertified.empty()) return space;

    // No analytic tail bound for some axes: grow the domain geometrically
    // until the kernel row mass at every uncertified boundary is negligible.
    InteractionKernel kernel(model);
    DiscretizedSpace probe =
        model.d() == 1 ? space : space.tiled(model.d(), config.grid_cap);
    const int max_doublings = 8;
    for (int k = 0; k <= max_doublings; ++k) {
        double worst = 0.0;
        for (int a : uncertified) {
            for (int t = 0; t < probe.slices(); ++t) {
                const int ai = t * model.p() + a;
                worst = std::max(worst, boundary_row_ratio(kernel, probe, ai, true));
                if (!probe.axis(ai).counting) {
                    worst = std::max(worst, boundary_row_ratio(kernel, probe, ai, false));
                }
            }
        }
        if (worst < config.truncation_tol) {
            if (probe.slices() == 1) return probe;
            // Return the single-slice version of the extended grid.
            std::vector<Axis> single(probe.axes().begin(), probe.axes().begin() + model.p());
            return DiscretizedSpace(single, model.p(), 1);
        }
        if (k == max_doublings) break;
        probe = probe.extended(2.0, 1 << 20, config.grid_cap);
    }
    throw UnboundedEnvelope(
        "truncation rule cannot certify tail mass after 8 domain doublings (kernel row mass"
        " does not decay at the boundary)");
}

}  // namespace cestgm
