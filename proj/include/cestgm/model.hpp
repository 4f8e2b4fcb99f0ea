#ifndef CESTGM_MODEL_HPP
#define CESTGM_MODEL_HPP

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cestgm/families.hpp"

namespace cestgm {

enum class HsStatus { Satisfied, Violated, Unknown };

struct HsScreening {
    HsStatus status = HsStatus::Unknown;
    std::string reason;
    // Per-node: true when the node's truncation envelope is analytically
    // certified (quadrature then uses the family-specific tail bound).
    std::vector<bool> node_certified;
    // Gaussian nodes only: a Gershgorin-style lower bound on the stationary
    // precision (theta_1 minus the total x-x coupling mass and any bounded
    // modulation of the quadratic statistic), and the largest conditional
    // mean shift contributed by bounded partner statistics. The quadrature
    // envelope widens by these; zero entries for non-Gaussian nodes.
    std::vector<double> gauss_margin;
    std::vector<double> gauss_shift;
};

std::string hs_status_name(HsStatus s);

// Full parameterization before compatibility checks. Node indices are
// 0-based internally; model-spec files are 1-indexed.
struct ModelSpec {
    int p = 0;  // number of nodes
    int d = 1;  // Markov order (time-neighbor radius)
    std::vector<NodeFamily> families;
    std::vector<Vec> theta;  // theta[a] has length K_a
    // (lag in -d..d, a, b) -> K_a x K_b block; absent means zero.
    std::map<std::tuple<int, int, int>, Mat> phi;

    int k_of(int a) const { return families[a].k_stats(); }
    int k_total() const;
    // Zero block if absent.
    Mat phi_block(int lag, int a, int b) const;
};

struct CIGraph {
    int vertex_count = 0;
    std::set<std::pair<int, int>> edges;  // 0-based, first < second
    std::vector<std::string> labels;      // optional; size 0 or vertex_count
};

// Frozen spec plus the assembled block matrices Psi_l and neighborhoods.
class ValidatedModel {
public:
    const ModelSpec& spec() const { return spec_; }
    int p() const { return spec_.p; }
    int d() const { return spec_.d; }
    int k_total() const { return k_total_; }
    const NodeFamily& family(int a) const { return spec_.families[a]; }
    const Vec& theta(int a) const { return spec_.theta[a]; }
    // Stacked natural-parameter offset over all nodes.
    const Vec& theta_stacked() const { return theta_stacked_; }
    // Offset of node a's statistics inside the stacked K_total vector.
    int stat_offset(int a) const { return offsets_[a]; }

    // Psi_l for l in 0..d; Psi_{-l} = Psi_l^T.
    const Mat& psi(int lag) const;
    Mat phi_block(int lag, int a, int b) const { return spec_.phi_block(lag, a, b); }
    bool phi_nonzero(int lag, int a, int b) const;

    const std::vector<std::set<int>>& neighborhoods() const { return neighborhoods_; }
    const HsScreening& hs_screening() const { return screening_; }

    friend ValidatedModel validate(const ModelSpec& spec);

private:
    ModelSpec spec_;
    int k_total_ = 0;
    std::vector<int> offsets_;
    Vec theta_stacked_;
    std::vector<Mat> psi_;  // index l = 0..d
    std::vector<std::set<int>> neighborhoods_;
    HsScreening screening_;
};

// Enforces the process-wide compatibility constraints:
//   Phi_0^{(a,a)} = 0, Phi_0^{(a,b)} = (Phi_0^{(b,a)})^T,
//   Phi_l^{(a,b)} = (Phi_{-l}^{(b,a)})^T for l in 1..d,
// plus dimension checks, and records the advisory HS screen.
// Throws SymmetryViolation / DimensionMismatch / SelfCouplingAtLagZero.
ValidatedModel validate(const ModelSpec& spec);

// Edge set { {a,b} : b in N_a }. Nonzero test is exact zero (sparsity is by
// omission; no tolerance).
CIGraph ci_graph(const ValidatedModel& model,
                 const std::vector<std::string>& labels = {});

// Vertices (a, t) for t in 1..window; (a,t) ~ (b,t+l) iff Phi_l^{(a,b)} != 0.
CIGraph time_unrolled_graph(const ValidatedModel& model, int window);

// Undirected DOT text, deterministic ordering.
std::string export_dot(const CIGraph& graph, const std::string& name = "cig");

}  // namespace cestgm

#endif
