#include "cestgm/families.hpp"

#include <cmath>

namespace cestgm {

NodeFamily::NodeFamily(FamilyKind kind, int n_trials) : kind_(kind), n_trials_(n_trials) {
    if (kind == FamilyKind::Binomial && n_trials < 1) {
        throw Error("binomial family requires n_trials >= 1");
    }
    if (kind != FamilyKind::Binomial) {
        n_trials_ = 0;
    }
}

int NodeFamily::k_stats() const {
    switch (kind_) {
        case FamilyKind::Gaussian:
        case FamilyKind::Beta:
            return 2;
        default:
            return 1;
    }
}

SupportKind NodeFamily::support() const {
    switch (kind_) {
        case FamilyKind::Gaussian: return SupportKind::RealLine;
        case FamilyKind::Binary: return SupportKind::ZeroOne;
        case FamilyKind::Poisson: return SupportKind::NonNegativeInts;
        case FamilyKind::ExponentialRate: return SupportKind::NonNegativeReals;
        case FamilyKind::Beta: return SupportKind::OpenUnitInterval;
        case FamilyKind::Binomial: return SupportKind::IntegerRange;
    }
    return SupportKind::RealLine;
}

Measure NodeFamily::measure() const {
    switch (kind_) {
        case FamilyKind::Binary:
        case FamilyKind::Poisson:
        case FamilyKind::Binomial:
            return Measure::Counting;
        default:
            return Measure::Lebesgue;
    }
}

bool NodeFamily::in_support(double x) const {
    if (!std::isfinite(x)) return false;
    switch (kind_) {
        case FamilyKind::Gaussian:
            return true;
        case FamilyKind::Binary:
            return x == 0.0 || x == 1.0;
        case FamilyKind::Poisson:
            return x >= 0.0 && x == std::floor(x);
        case FamilyKind::ExponentialRate:
            return x >= 0.0;
        case FamilyKind::Beta:
            return x > 0.0 && x < 1.0;
        case FamilyKind::Binomial:
            return x >= 0.0 && x <= n_trials_ && x == std::floor(x);
    }
    return false;
}

void NodeFamily::suff_stats_into(double x, double* out) const {
    switch (kind_) {
        case FamilyKind::Gaussian:
            out[0] = -0.5 * x * x;
            out[1] = x;
            return;
        case FamilyKind::Beta:
            out[0] = std::log(x);
            out[1] = std::log1p(-x);
            return;
        case FamilyKind::ExponentialRate:
            out[0] = -x;
            return;
        default:  // Binary, Poisson, Binomial: s(x) = x
            out[0] = x;
            return;
    }
}

Vec NodeFamily::suff_stats(double x) const {
    if (!in_support(x)) {
        throw OutOfSupport(name() + ": point " + std::to_string(x) + " outside support");
    }
    Vec s(k_stats());
    suff_stats_into(x, s.data());
    return s;
}

double NodeFamily::log_base(double x) const {
    switch (kind_) {
        case FamilyKind::Poisson:
            return -std::lgamma(x + 1.0);
        case FamilyKind::Binomial:
            return std::lgamma(n_trials_ + 1.0) - std::lgamma(x + 1.0) -
                   std::lgamma(n_trials_ - x + 1.0);
        default:
            return 0.0;
    }
}

bool NodeFamily::theta_valid(const Vec& theta) const {
    if (theta.size() != k_stats()) return false;
    if (!theta.allFinite()) return false;
    switch (kind_) {
        case FamilyKind::Gaussian:
            return theta[0] > 0.0;  // conditional precision
        case FamilyKind::ExponentialRate:
            return theta[0] > 0.0;  // conditional rate, s(x) = -x
        case FamilyKind::Beta:
            return theta[0] > -1.0 && theta[1] > -1.0;  // both shapes positive
        default:
            return true;
    }
}

int NodeFamily::stat_sign(int j) const {
    switch (kind_) {
        case FamilyKind::Gaussian:
            return j == 0 ? -1 : 0;  // -x^2/2 <= 0, x indefinite
        case FamilyKind::Beta:
            return -1;  // log x, log(1-x) <= 0
        case FamilyKind::ExponentialRate:
            return -1;  // -x <= 0
        default:
            return 1;  // counts >= 0
    }
}

bool NodeFamily::stat_bounded(int j) const {
    (void)j;
    switch (kind_) {
        case FamilyKind::Binary:
        case FamilyKind::Binomial:
            return true;
        default:
            return false;
    }
}

double NodeFamily::sample_conditional(const Vec& theta, std::mt19937_64& rng) const {
    if (!theta_valid(theta)) {
        throw InvalidNaturalParameter(name() + ": natural parameter outside valid region");
    }
    switch (kind_) {
        case FamilyKind::Gaussian: {
            const double prec = theta[0];
            std::normal_distribution<double> dist(theta[1] / prec, 1.0 / std::sqrt(prec));
            return dist(rng);
        }
        case FamilyKind::Binary: {
            const double p = 1.0 / (1.0 + std::exp(-theta[0]));
            std::bernoulli_distribution dist(p);
            return dist(rng) ? 1.0 : 0.0;
        }
        case FamilyKind::Poisson: {
            const double rate = std::exp(theta[0]);
            if (!std::isfinite(rate)) {
                throw InvalidNaturalParameter("poisson: rate exp(theta) overflows");
            }
            std::poisson_distribution<long> dist(rate);
            return static_cast<double>(dist(rng));
        }
        case FamilyKind::ExponentialRate: {
            std::exponential_distribution<double> dist(theta[0]);
            return dist(rng);
        }
        case FamilyKind::Beta: {
            // Beta(a, b) as Ga/(Ga+Gb).
            std::gamma_distribution<double> ga(theta[0] + 1.0, 1.0);
            std::gamma_distribution<double> gb(theta[1] + 1.0, 1.0);
            const double x = ga(rng);
            const double y = gb(rng);
            double z = x / (x + y);
            // Clamp away from the boundary so downstream log statistics stay finite.
            const double eps = 1e-300;
            if (z <= 0.0) z = eps;
            if (z >= 1.0) z = 1.0 - 1e-16;
            return z;
        }
        case FamilyKind::Binomial: {
            const double p = 1.0 / (1.0 + std::exp(-theta[0]));
            std::binomial_distribution<int> dist(n_trials_, p);
            return static_cast<double>(dist(rng));
        }
    }
    throw Error("unreachable family kind");
}

std::string NodeFamily::name() const {
    std::string base = family_kind_name(kind_);
    if (kind_ == FamilyKind::Binomial) {
        base += "(" + std::to_string(n_trials_) + ")";
    }
    return base;
}

std::string family_kind_name(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::Gaussian: return "gaussian";
        case FamilyKind::Binary: return "binary";
        case FamilyKind::Poisson: return "poisson";
        case FamilyKind::ExponentialRate: return "exponential";
        case FamilyKind::Beta: return "beta";
        case FamilyKind::Binomial: return "binomial";
    }
    return "?";
}

FamilyKind family_kind_from_name(const std::string& name) {
    if (name == "gaussian") return FamilyKind::Gaussian;
    if (name == "binary") return FamilyKind::Binary;
    if (name == "poisson") return FamilyKind::Poisson;
    if (name == "exponential") return FamilyKind::ExponentialRate;
    if (name == "beta") return FamilyKind::Beta;
    if (name == "binomial") return FamilyKind::Binomial;
    throw ParseError("unknown family kind: \"" + name + "\"");
}

}  // namespace cestgm
