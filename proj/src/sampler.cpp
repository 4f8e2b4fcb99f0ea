#include "cestgm/sampler.hpp"

#include <cmath>
#include <sstream>

namespace cestgm {

Vec full_conditional_params(const ValidatedModel& model, const Mat& chain, int row, int node) {
    const int rows = static_cast<int>(chain.rows());
    const int d = model.d();
    Vec theta = model.theta(node);
    Vec stat(2);

    auto add_block = [&](int lag, int b, int other_row) {
        const Mat blk = model.phi_block(lag, node, b);
        if (blk.size() == 0 || blk.isZero(0.0)) return;
        const auto& fb = model.family(b);
        fb.suff_stats_into(chain(other_row, b), stat.data());
        theta.noalias() += blk * stat.head(fb.k_stats());
    };

    for (int b = 0; b < model.p(); ++b) {
        if (b != node) add_block(0, b, row);
        for (int l = 1; l <= d; ++l) {
            if (row - l >= 0) add_block(-l, b, row - l);
            if (row + l < rows) add_block(l, b, row + l);
        }
    }
    return theta;
}

SamplePath gibbs_run(const ValidatedModel& model, const GibbsConfig& config) {
    if (config.m < 2) throw Error("pad width m must be >= 2");
    if (config.sweeps <= config.burnin || config.burnin < 0) {
        throw Error("need sweeps > burnin >= 0");
    }
    if (config.thin < 1) throw Error("thin must be >= 1");
    const int rows = config.n + 2 * config.m;
    const int p = model.p();

    std::mt19937_64 rng(config.seed);
    Mat chain(rows, p);
    for (int t = 0; t < rows; ++t) {
        for (int a = 0; a < p; ++a) {
            chain(t, a) = model.family(a).sample_conditional(model.theta(a), rng);
        }
    }

    SamplePath out;
    out.config = config;
    out.model_hash = model_hash(model);

    std::uniform_int_distribution<int> site_t(0, rows - 1), site_a(0, p - 1);
    const int crop_lo = config.m - 1;  // padded time 0
    for (int sweep = 1; sweep <= config.sweeps; ++sweep) {
        if (config.scan == ScanOrder::Systematic) {
            for (int t = 0; t < rows; ++t) {
                for (int a = 0; a < p; ++a) {
                    Vec theta = full_conditional_params(model, chain, t, a);
                    try {
                        chain(t, a) = model.family(a).sample_conditional(theta, rng);
                    } catch (const InvalidNaturalParameter& e) {
                        std::ostringstream os;
                        os << e.what() << " at sweep " << sweep << ", padded time "
                           << (t - config.m + 1) << ", node " << (a + 1);
                        throw InvalidNaturalParameter(os.str());
                    }
                }
            }
        } else {
            for (int u = 0; u < rows * p; ++u) {
                const int t = site_t(rng);
                const int a = site_a(rng);
                Vec theta = full_conditional_params(model, chain, t, a);
                chain(t, a) = model.family(a).sample_conditional(theta, rng);
            }
        }
        if (sweep > config.burnin && (sweep - config.burnin - 1) % config.thin == 0) {
            out.kept.push_back(chain.block(crop_lo, 0, config.n + 2, p));
        }
    }
    out.raw_final = chain;
    return out;
}

int effective_pad(const ValidatedModel& model, double lambda2_abs, double r, double tv_target) {
    if (!(tv_target > 0.0) || !(r > 0.0)) throw Error("effective_pad needs positive target and r");
    int base;
    const double rho = lambda2_abs / r;
    if (rho <= 0.0) {
        base = 2;
    } else if (rho >= 1.0) {
        base = 200;
    } else {
        base = 1 + static_cast<int>(std::ceil(std::log(tv_target) / std::log(rho)));
    }
    const int scaled = 1 + (base - 1) * model.d();
    return std::clamp(scaled, 2, 200);
}

std::uint64_t model_hash(const ValidatedModel& model) {
    std::ostringstream os;
    const auto& spec = model.spec();
    os << spec.p << '|' << spec.d << '|';
    for (const auto& f : spec.families) os << f.name() << ',';
    os.precision(17);
    for (const auto& th : spec.theta) {
        for (int i = 0; i < th.size(); ++i) os << th[i] << ',';
    }
    for (const auto& [key, blk] : spec.phi) {
        os << std::get<0>(key) << ':' << std::get<1>(key) << ':' << std::get<2>(key) << '[';
        for (int i = 0; i < blk.rows(); ++i)
            for (int j = 0; j < blk.cols(); ++j) os << blk(i, j) << ',';
        os << ']';
    }
    const std::string s = os.str();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace cestgm
