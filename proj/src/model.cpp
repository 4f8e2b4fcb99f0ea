#include "cestgm/model.hpp"

#include <sstream>

#include "cestgm/kernel.hpp"

namespace cestgm {

std::string hs_status_name(HsStatus s) {
    switch (s) {
        case HsStatus::Satisfied: return "satisfied";
        case HsStatus::Violated: return "violated";
        case HsStatus::Unknown: return "unknown";
    }
    return "?";
}

int ModelSpec::k_total() const {
    int k = 0;
    for (const auto& f : families) k += f.k_stats();
    return k;
}

Mat ModelSpec::phi_block(int lag, int a, int b) const {
    auto it = phi.find({lag, a, b});
    if (it != phi.end()) return it->second;
    return Mat::Zero(families[a].k_stats(), families[b].k_stats());
}

namespace {

std::string block_name(int lag, int a, int b) {
    std::ostringstream os;
    os << "Phi_" << lag << "^(" << (a + 1) << "," << (b + 1) << ")";
    return os.str();
}

}  // namespace

ValidatedModel validate(const ModelSpec& spec) {
    if (spec.p < 1) throw ValidationError("p must be >= 1");
    if (spec.d < 1) throw ValidationError("d must be >= 1");
    if (static_cast<int>(spec.families.size()) != spec.p) {
        throw DimensionMismatch("families list has " + std::to_string(spec.families.size()) +
                                " entries, expected p = " + std::to_string(spec.p));
    }
    if (static_cast<int>(spec.theta.size()) != spec.p) {
        throw DimensionMismatch("theta list has " + std::to_string(spec.theta.size()) +
                                " entries, expected p = " + std::to_string(spec.p));
    }
    for (int a = 0; a < spec.p; ++a) {
        if (spec.theta[a].size() != spec.k_of(a)) {
            throw DimensionMismatch("theta[" + std::to_string(a + 1) + "] has length " +
                                    std::to_string(spec.theta[a].size()) + ", expected K = " +
                                    std::to_string(spec.k_of(a)));
        }
    }
    for (const auto& [key, block] : spec.phi) {
        const auto [lag, a, b] = key;
        if (lag < -spec.d || lag > spec.d) {
            throw ValidationError("phi block " + block_name(lag, a, b) + " has lag outside -d..d");
        }
        if (a < 0 || a >= spec.p || b < 0 || b >= spec.p) {
            throw ValidationError("phi block " + block_name(lag, a, b) + " has node index outside 1..p");
        }
        if (block.rows() != spec.k_of(a) || block.cols() != spec.k_of(b)) {
            throw DimensionMismatch("phi block " + block_name(lag, a, b) + " is " +
                                    std::to_string(block.rows()) + "x" + std::to_string(block.cols()) +
                                    ", expected " + std::to_string(spec.k_of(a)) + "x" +
                                    std::to_string(spec.k_of(b)));
        }
        if (!block.allFinite()) {
            throw ValidationError("phi block " + block_name(lag, a, b) + " has non-finite entries");
        }
    }

    // No self-coupling at lag 0.
    for (int a = 0; a < spec.p; ++a) {
        if (!spec.phi_block(0, a, a).isZero(0.0)) {
            throw SelfCouplingAtLagZero("nonzero diagonal block " + block_name(0, a, a));
        }
    }
    // Phi_0^{(a,b)} = (Phi_0^{(b,a)})^T.
    for (int a = 0; a < spec.p; ++a) {
        for (int b = a + 1; b < spec.p; ++b) {
            if (spec.phi_block(0, a, b) != spec.phi_block(0, b, a).transpose()) {
                throw SymmetryViolation(block_name(0, a, b) + " != transpose of " + block_name(0, b, a));
            }
        }
    }
    // Phi_l^{(a,b)} = (Phi_{-l}^{(b,a)})^T for l in 1..d.
    for (int l = 1; l <= spec.d; ++l) {
        for (int a = 0; a < spec.p; ++a) {
            for (int b = 0; b < spec.p; ++b) {
                if (spec.phi_block(l, a, b) != spec.phi_block(-l, b, a).transpose()) {
                    throw SymmetryViolation(block_name(l, a, b) + " != transpose of " +
                                            block_name(-l, b, a));
                }
            }
        }
    }

    ValidatedModel m;
    m.spec_ = spec;
    m.k_total_ = spec.k_total();
    m.offsets_.resize(spec.p);
    int off = 0;
    for (int a = 0; a < spec.p; ++a) {
        m.offsets_[a] = off;
        off += spec.k_of(a);
    }
    m.theta_stacked_.resize(m.k_total_);
    for (int a = 0; a < spec.p; ++a) {
        m.theta_stacked_.segment(m.offsets_[a], spec.k_of(a)) = spec.theta[a];
    }
    m.psi_.resize(spec.d + 1);
    for (int l = 0; l <= spec.d; ++l) {
        Mat psi = Mat::Zero(m.k_total_, m.k_total_);
        for (int a = 0; a < spec.p; ++a) {
            for (int b = 0; b < spec.p; ++b) {
                psi.block(m.offsets_[a], m.offsets_[b], spec.k_of(a), spec.k_of(b)) =
                    spec.phi_block(l, a, b);
            }
        }
        m.psi_[l] = std::move(psi);
    }
    m.neighborhoods_.assign(spec.p, {});
    for (int a = 0; a < spec.p; ++a) {
        for (int b = 0; b < spec.p; ++b) {
            if (a == b) continue;
            bool coupled = false;
            for (int l = -spec.d; l <= spec.d && !coupled; ++l) {
                coupled = !spec.phi_block(l, a, b).isZero(0.0);
            }
            if (coupled) m.neighborhoods_[a].insert(b);
        }
    }
    m.screening_ = sufficient_hs_check(m);
    return m;
}

const Mat& ValidatedModel::psi(int lag) const {
    if (lag < 0 || lag > spec_.d) throw Error("psi lag out of range");
    return psi_[lag];
}

bool ValidatedModel::phi_nonzero(int lag, int a, int b) const {
    return !spec_.phi_block(lag, a, b).isZero(0.0);
}

CIGraph ci_graph(const ValidatedModel& model, const std::vector<std::string>& labels) {
    CIGraph g;
    g.vertex_count = model.p();
    g.labels = labels;
    for (int a = 0; a < model.p(); ++a) {
        for (int b : model.neighborhoods()[a]) {
            g.edges.insert({std::min(a, b), std::max(a, b)});
        }
    }
    return g;
}

CIGraph time_unrolled_graph(const ValidatedModel& model, int window) {
    if (window < 2) throw Error("time_unrolled_graph requires window >= 2");
    const int p = model.p();
    CIGraph g;
    g.vertex_count = p * window;
    g.labels.resize(g.vertex_count);
    auto vid = [p](int a, int t) { return t * p + a; };
    for (int t = 0; t < window; ++t) {
        for (int a = 0; a < p; ++a) {
            g.labels[vid(a, t)] = "x" + std::to_string(a + 1) + "@t" + std::to_string(t + 1);
        }
    }
    for (int t = 0; t < window; ++t) {
        for (int a = 0; a < p; ++a) {
            for (int b = 0; b < p; ++b) {
                if (a != b && model.phi_nonzero(0, a, b)) {
                    int u = vid(a, t), v = vid(b, t);
                    g.edges.insert({std::min(u, v), std::max(u, v)});
                }
                for (int l = 1; l <= model.d(); ++l) {
                    if (t + l < window && model.phi_nonzero(l, a, b)) {
                        int u = vid(a, t), v = vid(b, t + l);
                        g.edges.insert({std::min(u, v), std::max(u, v)});
                    }
                }
            }
        }
    }
    return g;
}

std::string export_dot(const CIGraph& graph, const std::string& name) {
    std::ostringstream os;
    os << "graph " << name << " {\n";
    const bool labeled = !graph.labels.empty();
    for (int v = 0; v < graph.vertex_count; ++v) {
        os << "  " << (v + 1);
        if (labeled) os << " [label=\"" << graph.labels[v] << "\"]";
        os << ";\n";
    }
    for (const auto& [u, v] : graph.edges) {
        os << "  " << (u + 1) << " -- " << (v + 1) << ";\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace cestgm
