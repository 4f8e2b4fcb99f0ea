#include <doctest.h>

#include <cmath>

#include "cestgm/quadrature.hpp"
#include "fixtures.hpp"

using namespace cestgm;

TEST_SUITE_BEGIN("quadrature");

TEST_CASE("binary axis enumerates the support with unit weights") {
    const ValidatedModel m = validate(fixtures::binary_spec(0.0, 0.0));
    const DiscretizedSpace s = build_space(m, GridConfig{});
    REQUIRE(s.dim() == 1);
    CHECK(s.axis(0).points == std::vector<double>{0.0, 1.0});
    CHECK(s.axis(0).weights == std::vector<double>{1.0, 1.0});
    CHECK(s.total_size() == 2);
}

TEST_CASE("gaussian axis carries trapezoid weights summing to the interval") {
    const ValidatedModel m = validate(fixtures::ar1_spec(0.5));
    GridConfig cfg;
    cfg.grid_size = 201;
    const DiscretizedSpace s = build_space(m, cfg);
    const Axis& ax = s.axis(0);
    // the coupled envelope widens the domain and scales the point count
    CHECK(ax.size() >= 201);
    CHECK(ax.lo() == doctest::Approx(-ax.hi()));
    double total = 0.0;
    for (double w : ax.weights) total += w;
    CHECK(total == doctest::Approx(ax.hi() - ax.lo()).epsilon(1e-14));
    // constants integrate exactly
    double f = 0.0;
    for (int i = 0; i < ax.size(); ++i) f += ax.weights[i] * 3.0;
    CHECK(f == doctest::Approx(3.0 * (ax.hi() - ax.lo())).epsilon(1e-14));
}

TEST_CASE("poisson truncation satisfies the tail bound") {
    const ValidatedModel m = validate(fixtures::poisson_spec(0.0, -0.2));
    const DiscretizedSpace s = build_space(m, GridConfig{});
    const int k = s.axis(0).size() - 1;
    CHECK(k <= 40);

    // independent top-down tail sum for lambda = e^0 = 1, in long double
    long double tail = 0.0L;
    for (int x = k + 200; x > k; --x) {
        tail += std::exp(static_cast<long double>(-1.0) + x * std::log(1.0L) -
                         std::lgamma(static_cast<long double>(x) + 1.0L));
    }
    CHECK(static_cast<double>(tail) < 1e-12);
    // counting: unit weights, exact sums
    for (double w : s.axis(0).weights) CHECK(w == 1.0);
}

TEST_CASE("explicit interval overrides are honored") {
    const ValidatedModel m = validate(fixtures::ar1_spec(0.5));
    GridConfig cfg;
    cfg.grid_size = 201;
    std::vector<std::optional<std::pair<double, double>>> iv = {{{-8.0, 8.0}}};
    const DiscretizedSpace s = build_space(m, cfg, iv);
    CHECK(s.axis(0).lo() == -8.0);
    CHECK(s.axis(0).hi() == 8.0);
    CHECK(s.axis(0).size() == 201);
}

TEST_CASE("grid cap is enforced") {
    const ValidatedModel m = validate(fixtures::var1_spec());
    GridConfig cfg;
    cfg.grid_size = 64;
    cfg.grid_cap = 1000;  // 64^3 would exceed this
    CHECK_THROWS_AS(build_space(m, cfg), GridCapExceeded);
}

TEST_CASE("grid size below 16 is rejected") {
    const ValidatedModel m = validate(fixtures::ar1_spec(0.0));
    GridConfig cfg;
    cfg.grid_size = 8;
    CHECK_THROWS_AS(build_space(m, cfg), Error);
}

TEST_CASE("unbounded envelopes are detected") {
    SUBCASE("nonpositive gaussian precision") {
        ModelSpec s = fixtures::ar1_spec(0.0);
        s.theta[0][0] = -1.0;
        CHECK_THROWS_AS(build_space(validate(s), GridConfig{}), UnboundedEnvelope);
    }
    SUBCASE("random-walk coupling never certifies") {
        // |phi| = 1: kernel row mass is constant in x, so no domain works.
        const ValidatedModel m = validate(fixtures::ar1_spec(1.0));
        GridConfig cfg;
        cfg.grid_size = 64;
        CHECK_THROWS_AS(build_space(m, cfg), UnboundedEnvelope);
    }
}

TEST_CASE("uncertified axes grow geometrically until the kernel row mass decays") {
    // gaussian x coupled to a poisson count: no analytic clause, so the
    // screen says unknown and the builder falls back to the row-mass rule
    ModelSpec s;
    s.p = 2;
    s.d = 1;
    s.families = {NodeFamily(FamilyKind::Gaussian), NodeFamily(FamilyKind::Poisson)};
    Vec tg(2), tp(1);
    tg << 1.0, 0.0;
    tp << 0.0;
    s.theta = {tg, tp};
    Mat cp = Mat::Zero(2, 1);
    cp(1, 0) = -0.1;
    s.phi[{1, 0, 1}] = cp;
    s.phi[{-1, 1, 0}] = cp.transpose();
    const ValidatedModel m = validate(s);
    REQUIRE(m.hs_screening().status == HsStatus::Unknown);

    GridConfig cfg;
    cfg.grid_size = 33;
    const DiscretizedSpace space = build_space(m, cfg);
    // the gaussian axis ends at least as wide as the base envelope
    CHECK(space.axis(0).hi() >= 8.0 / std::sqrt(tg[0]) - 1e-12);
    CHECK(space.axis(1).counting);
}

TEST_CASE("tiled block space multiplies the axes") {
    const ValidatedModel m = validate(fixtures::binary_d2_spec(0.0, 0.4, 0.2));
    const DiscretizedSpace slice = build_space(m, GridConfig{});
    const DiscretizedSpace block = slice.tiled(2, 1u << 20);
    CHECK(block.dim() == 2);
    CHECK(block.total_size() == 4);
    CHECK(block.slices() == 2);
    double pt[2];
    block.point_at(1, pt);  // last axis fastest
    CHECK(pt[0] == 0.0);
    CHECK(pt[1] == 1.0);
}

TEST_CASE("domain extension doubles continuous axes about their center") {
    const ValidatedModel m = validate(fixtures::ar1_spec(0.3));
    GridConfig cfg;
    std::vector<std::optional<std::pair<double, double>>> iv = {{{-4.0, 4.0}}};
    const DiscretizedSpace s = build_space(m, cfg, iv);
    const DiscretizedSpace s2 = s.extended(2.0, 4096, 1u << 20);
    CHECK(s2.axis(0).lo() == doctest::Approx(-8.0));
    CHECK(s2.axis(0).hi() == doctest::Approx(8.0));
    CHECK(s2.axis(0).size() >= 2 * s.axis(0).size() - 1);
}

TEST_SUITE_END();
