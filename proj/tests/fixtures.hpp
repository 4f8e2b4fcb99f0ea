// Shared model builders for the test suites.
#ifndef CESTGM_TEST_FIXTURES_HPP
#define CESTGM_TEST_FIXTURES_HPP

#include "cestgm/model.hpp"

namespace fixtures {

using cestgm::FamilyKind;
using cestgm::Mat;
using cestgm::ModelSpec;
using cestgm::NodeFamily;
using cestgm::Vec;

inline Mat xcoupling2(double value) {
    Mat m = Mat::Zero(2, 2);
    m(1, 1) = value;  // x statistic sits at index 1 for Gaussian nodes
    return m;
}

inline Mat scalar(double value) {
    Mat m(1, 1);
    m(0, 0) = value;
    return m;
}

// Univariate Gaussian AR(1): theta = (1 + phi^2, 0), lag-1 x coupling phi.
inline ModelSpec ar1_spec(double phi) {
    ModelSpec s;
    s.p = 1;
    s.d = 1;
    s.families = {NodeFamily(FamilyKind::Gaussian)};
    Vec th(2);
    th << 1.0 + phi * phi, 0.0;
    s.theta = {th};
    if (phi != 0.0) {
        s.phi[{1, 0, 0}] = xcoupling2(phi);
        s.phi[{-1, 0, 0}] = xcoupling2(phi);
    }
    return s;
}

// Univariate binary chain.
inline ModelSpec binary_spec(double theta, double phi) {
    ModelSpec s;
    s.p = 1;
    s.d = 1;
    s.families = {NodeFamily(FamilyKind::Binary)};
    Vec th(1);
    th << theta;
    s.theta = {th};
    if (phi != 0.0) {
        s.phi[{1, 0, 0}] = scalar(phi);
        s.phi[{-1, 0, 0}] = scalar(phi);
    }
    return s;
}

// Univariate Poisson chain with lag-1 coupling.
inline ModelSpec poisson_spec(double theta, double phi) {
    ModelSpec s;
    s.p = 1;
    s.d = 1;
    s.families = {NodeFamily(FamilyKind::Poisson)};
    Vec th(1);
    th << theta;
    s.theta = {th};
    if (phi != 0.0) {
        s.phi[{1, 0, 0}] = scalar(phi);
        s.phi[{-1, 0, 0}] = scalar(phi);
    }
    return s;
}

// Trivariate Gaussian with VAR(1) coefficient sparsity:
//   A = [[a1, b1, 0], [0, b2, 0], [0, b3, g3]], unit innovation variance.
inline ModelSpec var1_spec(double a1 = 0.3, double b1 = 0.3, double b2 = 0.2, double b3 = 0.25,
                           double g3 = 0.35) {
    ModelSpec s;
    s.p = 3;
    s.d = 1;
    s.families = {NodeFamily(FamilyKind::Gaussian), NodeFamily(FamilyKind::Gaussian),
                  NodeFamily(FamilyKind::Gaussian)};
    Vec t1(2), t2(2), t3(2);
    t1 << 1.0 + a1 * a1, 0.0;
    t2 << 1.0 + b1 * b1 + b2 * b2 + b3 * b3, 0.0;
    t3 << 1.0 + g3 * g3, 0.0;
    s.theta = {t1, t2, t3};

    Mat phim1 = Mat::Zero(3, 3), phi0 = Mat::Zero(3, 3);
    phim1 << a1, b1, 0, 0, b2, 0, 0, b3, g3;
    phi0 << 0, -a1 * b1, 0, -a1 * b1, 0, -b3 * g3, 0, -b3 * g3, 0;
    const Mat phip1 = phim1.transpose();
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            if (phi0(a, b) != 0.0) s.phi[{0, a, b}] = xcoupling2(phi0(a, b));
            if (phim1(a, b) != 0.0) s.phi[{-1, a, b}] = xcoupling2(phim1(a, b));
            if (phip1(a, b) != 0.0) s.phi[{1, a, b}] = xcoupling2(phip1(a, b));
        }
    }
    return s;
}

// Trivariate Poisson chain: Phi_0 = 0, Phi_1 lower-bidiagonal-free sparsity
// with all entries negative, Phi_{-1} = Phi_1^T.
inline ModelSpec poisson_trivariate_spec() {
    ModelSpec s;
    s.p = 3;
    s.d = 1;
    s.families = {NodeFamily(FamilyKind::Poisson), NodeFamily(FamilyKind::Poisson),
                  NodeFamily(FamilyKind::Poisson)};
    Vec th(1);
    th << 0.0;
    s.theta = {th, th, th};
    Mat phi1 = Mat::Zero(3, 3);
    phi1 << -0.2, -0.15, 0, 0, -0.25, -0.1, 0, 0, -0.3;
    const Mat phim1 = phi1.transpose();
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            if (phi1(a, b) != 0.0) s.phi[{1, a, b}] = scalar(phi1(a, b));
            if (phim1(a, b) != 0.0) s.phi[{-1, a, b}] = scalar(phim1(a, b));
        }
    }
    return s;
}

// Univariate conditional beta with nonpositive couplings (psi_i = 0).
inline ModelSpec beta_spec(double alpha, double beta, double phi1, double phi2) {
    ModelSpec s;
    s.p = 1;
    s.d = 1;
    s.families = {NodeFamily(FamilyKind::Beta)};
    Vec th(2);
    th << alpha - 1.0, beta - 1.0;
    s.theta = {th};
    Mat psi1 = Mat::Zero(2, 2);
    psi1(0, 1) = phi2;  // s_1(x_t) picks up phi_2 s_2(x_{t+1})
    psi1(1, 0) = phi1;  // s_2(x_t) picks up phi_1 s_1(x_{t+1})
    if (!psi1.isZero(0.0)) {
        s.phi[{1, 0, 0}] = psi1;
        s.phi[{-1, 0, 0}] = psi1.transpose();
    }
    return s;
}

// Univariate binary 2-Markov chain.
inline ModelSpec binary_d2_spec(double theta, double phi1, double phi2) {
    ModelSpec s;
    s.p = 1;
    s.d = 2;
    s.families = {NodeFamily(FamilyKind::Binary)};
    Vec th(1);
    th << theta;
    s.theta = {th};
    if (phi1 != 0.0) {
        s.phi[{1, 0, 0}] = scalar(phi1);
        s.phi[{-1, 0, 0}] = scalar(phi1);
    }
    if (phi2 != 0.0) {
        s.phi[{2, 0, 0}] = scalar(phi2);
        s.phi[{-2, 0, 0}] = scalar(phi2);
    }
    return s;
}

// Univariate Gaussian 2-Markov chain.
inline ModelSpec gaussian_d2_spec(double theta1, double phi1, double phi2) {
    ModelSpec s;
    s.p = 1;
    s.d = 2;
    s.families = {NodeFamily(FamilyKind::Gaussian)};
    Vec th(2);
    th << theta1, 0.0;
    s.theta = {th};
    if (phi1 != 0.0) {
        s.phi[{1, 0, 0}] = xcoupling2(phi1);
        s.phi[{-1, 0, 0}] = xcoupling2(phi1);
    }
    if (phi2 != 0.0) {
        s.phi[{2, 0, 0}] = xcoupling2(phi2);
        s.phi[{-2, 0, 0}] = xcoupling2(phi2);
    }
    return s;
}

// 2x2 beta coupling block: s_1(x_t) picks up c12 * s_2(partner), and
// s_2(x_t) picks up c21 * s_1(partner).
inline Mat beta_block(double c12, double c21) {
    Mat m = Mat::Zero(2, 2);
    m(0, 1) = c12;
    m(1, 0) = c21;
    return m;
}

// Trivariate conditional beta chain: nodes a-b and c-b interact at lag one,
// plus within-node lag-one terms; all couplings nonpositive.
inline ModelSpec beta_trivariate_spec() {
    ModelSpec s;
    s.p = 3;
    s.d = 1;
    for (int a = 0; a < 3; ++a) s.families.push_back(NodeFamily(FamilyKind::Beta));
    Vec t1(2), t2(2), t3(2);
    t1 << 2.0 - 1.0, 3.0 - 1.0;
    t2 << 2.5 - 1.0, 2.0 - 1.0;
    t3 << 3.0 - 1.0, 2.5 - 1.0;
    s.theta = {t1, t2, t3};
    auto put = [&s](int a, int b, const Mat& blk) {
        s.phi[{1, a, b}] = blk;
        s.phi[{-1, b, a}] = blk.transpose();
    };
    put(0, 0, beta_block(-0.30, -0.20));
    put(1, 1, beta_block(-0.25, -0.15));
    put(2, 2, beta_block(-0.20, -0.30));
    put(0, 1, beta_block(-0.10, -0.12));  // a sees b at lag +1
    put(2, 1, beta_block(-0.08, -0.09));  // c sees b at lag +1
    return s;
}

// Two conditional-beta nodes plus a conditional-binomial node coupled to the
// second beta: the count statistic is nonnegative and bounded, so its
// couplings into the beta statistics must be nonnegative.
inline ModelSpec beta_binomial_spec() {
    ModelSpec s;
    s.p = 3;
    s.d = 1;
    s.families = {NodeFamily(FamilyKind::Beta), NodeFamily(FamilyKind::Beta),
                  NodeFamily(FamilyKind::Binomial, 6)};
    Vec t1(2), t2(2), t3(1);
    t1 << 1.0, 2.0;
    t2 << 1.5, 1.0;
    t3 << 0.2;
    s.theta = {t1, t2, t3};
    auto put = [&s](int a, int b, const Mat& blk) {
        s.phi[{1, a, b}] = blk;
        s.phi[{-1, b, a}] = blk.transpose();
    };
    put(0, 0, beta_block(-0.30, -0.20));
    put(1, 1, beta_block(-0.25, -0.15));
    put(0, 1, beta_block(-0.10, -0.12));
    put(2, 2, scalar(0.15));  // binomial self-coupling, any sign
    Mat cb(1, 2);              // binomial count against the beta statistics
    cb << 0.20, 0.25;
    put(2, 1, cb);
    return s;
}

// p independent nodes of mixed families (no couplings).
inline ModelSpec zero_coupling_gaussian() {
    ModelSpec s;
    s.p = 1;
    s.d = 1;
    s.families = {NodeFamily(FamilyKind::Gaussian)};
    Vec th(2);
    th << 1.0, 0.0;
    s.theta = {th};
    return s;
}

}  // namespace fixtures

#endif
