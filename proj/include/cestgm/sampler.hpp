#ifndef CESTGM_SAMPLER_HPP
#define CESTGM_SAMPLER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cestgm/model.hpp"

namespace cestgm {

enum class ScanOrder { Systematic, RandomScan };

struct GibbsConfig {
    int n = 16;       // output indices 0..n+1
    int m = 2;        // pad width, >= 2
    int sweeps = 1000;   // J
    int burnin = 0;      // B < J
    int thin = 1;
    ScanOrder scan = ScanOrder::Systematic;
    std::uint64_t seed = 0;
};

// Kept draws from the padded reflective-boundary Gibbs chain, cropped to the
// output window. Rows of each path are time indices 0..n+1, columns nodes.
struct SamplePath {
    std::vector<Mat> kept;   // (n+2) x p each
    Mat raw_final;           // final padded chain, (n+2m) x p
    GibbsConfig config;
    std::uint64_t model_hash = 0;
};

// Natural parameter of node a's full conditional at padded time index t
// (t in -m+1..n+m ordinates map to chain rows 0..n+2m-1); neighbor terms whose
// time index leaves the padded window are dropped (reflective truncation).
Vec full_conditional_params(const ValidatedModel& model, const Mat& chain, int row, int node);

// Systematic-scan Gibbs on the reflective joint p^{(n+2m)}: sites initialized
// by independent theta-only draws, sweeps ascending in time then node; after
// J sweeps the first B are discarded, the rest thinned and cropped to 0..n+1.
// Throws InvalidNaturalParameter with (sweep, t, node) context.
SamplePath gibbs_run(const ValidatedModel& model, const GibbsConfig& config);

// Smallest pad width m with (|lambda_2|/r)^{m-1} <= tv_target, clamped to
// [2, 200]; scaled by the Markov order d (pad is counted in time steps).
int effective_pad(const ValidatedModel& model, double lambda2_abs, double r, double tv_target);

// FNV-1a hash of the canonical model description, for provenance sidecars.
std::uint64_t model_hash(const ValidatedModel& model);

}  // namespace cestgm

#endif
