#ifndef CESTGM_FAMILIES_HPP
#define CESTGM_FAMILIES_HPP

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Core>

#include "cestgm/errors.hpp"

namespace cestgm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class FamilyKind {
    Gaussian,
    Binary,
    Poisson,
    ExponentialRate,
    Beta,
    Binomial,
};

enum class SupportKind {
    RealLine,          // Gaussian
    ZeroOne,           // Binary
    NonNegativeInts,   // Poisson
    NonNegativeReals,  // ExponentialRate
    OpenUnitInterval,  // Beta
    IntegerRange,      // Binomial: {0, ..., n_trials}
};

enum class Measure { Lebesgue, Counting };

// One node's exponential family: sufficient statistics, base measure term,
// support, and an exact full-conditional sampler.
//
// Statistic conventions (these fix the sign of every coupling in the model):
//   Gaussian        s = (-x^2/2, x)        theta_1 is the conditional precision
//   Binary          s = (x)
//   Poisson         s = (x),  c(x) = -log x!
//   ExponentialRate s = (-x)               theta is the conditional rate
//   Beta            s = (log x, log(1-x))  Beta(theta_1 + 1, theta_2 + 1)
//   Binomial(n)     s = (x), c(x) = log C(n, x)
class NodeFamily {
public:
    explicit NodeFamily(FamilyKind kind, int n_trials = 0);

    FamilyKind kind() const { return kind_; }
    int k_stats() const;
    SupportKind support() const;
    Measure measure() const;
    int n_trials() const { return n_trials_; }

    bool in_support(double x) const;

    // (s_1(x), ..., s_K(x)); throws OutOfSupport.
    Vec suff_stats(double x) const;
    // Writes the K statistics into out[0..K); no allocation, used in kernel loops.
    void suff_stats_into(double x, double* out) const;

    // Base-measure term c(x).
    double log_base(double x) const;

    // True iff theta parameterizes a proper (normalizable) conditional.
    bool theta_valid(const Vec& theta) const;

    // One exact draw from p(x) ∝ exp(s(x)·theta + c(x)).
    // Throws InvalidNaturalParameter outside the valid region.
    double sample_conditional(const Vec& theta, std::mt19937_64& rng) const;

    // Range of each statistic over the support, used by the HS screen and the
    // quadrature envelope. sign: -1 nonpositive, +1 nonnegative, 0 indefinite.
    int stat_sign(int j) const;
    bool stat_bounded(int j) const;

    std::string name() const;

    bool operator==(const NodeFamily& other) const {
        return kind_ == other.kind_ && n_trials_ == other.n_trials_;
    }

private:
    FamilyKind kind_;
    int n_trials_;  // Binomial only
};

// Lowercase string names used in model-spec files.
std::string family_kind_name(FamilyKind kind);
FamilyKind family_kind_from_name(const std::string& name);

}  // namespace cestgm

#endif
