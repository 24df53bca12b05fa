#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "prorl/common.hpp"
#include "prorl/lhs.hpp"
#include "prorl/math_util.hpp"
#include "prorl/rng.hpp"

using namespace prorl;

namespace {

// Recover the stratum index of a sampled value by inverting the marginal CDF.
int stratum_of(const LhsDim& dim, double x, int n) {
    double p = 0.0;
    if (dim.kind == LhsDim::Kind::Uniform) {
        p = (x - dim.lo) / (dim.hi - dim.lo);
    } else {
        const double f_lo = std::isinf(dim.trunc_lo)
                                ? 0.0
                                : normal_cdf((dim.trunc_lo - dim.mean) / dim.std);
        const double f_hi = std::isinf(dim.trunc_hi)
                                ? 1.0
                                : normal_cdf((dim.trunc_hi - dim.mean) / dim.std);
        const double f = normal_cdf((x - dim.mean) / dim.std);
        p = (f - f_lo) / (f_hi - f_lo);
    }
    const int idx = static_cast<int>(p * n);
    return std::min(std::max(idx, 0), n - 1);
}

// Exhaustive stratification check: one sample in every stratum.
void check_exhaustive(const LhsDim& dim, const Eigen::VectorXd& col, int n) {
    std::vector<int> strata(col.size());
    for (Eigen::Index i = 0; i < col.size(); ++i) {
        strata[static_cast<std::size_t>(i)] = stratum_of(dim, col[i], n);
    }
    std::sort(strata.begin(), strata.end());
    for (int i = 0; i < n; ++i) {
        CAPTURE(dim.name);
        CAPTURE(i);
        CHECK(strata[static_cast<std::size_t>(i)] == i);
    }
}

double max_gap(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    double gap = xs.front(); // gap to the lower edge of [0, 1]
    for (std::size_t i = 1; i < xs.size(); ++i) {
        gap = std::max(gap, xs[i] - xs[i - 1]);
    }
    gap = std::max(gap, 1.0 - xs.back());
    return gap;
}

LhsPlan mixed_plan(int n) {
    LhsPlan plan;
    plan.n = n;
    plan.dims = {
        LhsDim::uniform("position", -2.4, 2.4),
        LhsDim::uniform("rate", -3.0, 3.0),
        LhsDim::gaussian("mass", 1.0, 0.333, 0.01, 1.999),
        LhsDim::gaussian("gravity", 9.8, 0.03,
                         -std::numeric_limits<double>::infinity(),
                         std::numeric_limits<double>::infinity()),
        LhsDim::discrete("direction", {-1.0, 1.0}),
    };
    return plan;
}

} // namespace

TEST_CASE("every dimension receives exactly one sample per stratum") {
    for (int n : {4, 32, 1000}) {
        const LhsPlan plan = mixed_plan(n);
        Rng rng(2024);
        const Eigen::MatrixXd m = lhs_sample(plan, rng);
        REQUIRE(m.rows() == n);
        REQUIRE(m.cols() == 5);
        for (int j = 0; j < 4; ++j) { // continuous dims support inversion
            check_exhaustive(plan.dims[static_cast<std::size_t>(j)], m.col(j), n);
        }
        // Discrete +-1 dimension splits exactly in half for even n.
        int minus = 0, plus = 0;
        for (int i = 0; i < n; ++i) {
            if (m(i, 4) == -1.0) ++minus;
            else if (m(i, 4) == 1.0) ++plus;
        }
        CHECK(minus == n / 2);
        CHECK(plus == n - n / 2);
    }
}

TEST_CASE("n = 1 produces a single mid-stratum sample inside bounds") {
    LhsPlan plan;
    plan.n = 1;
    plan.dims = {LhsDim::uniform("u", 2.0, 6.0)};
    Rng rng(1);
    const Eigen::MatrixXd m = lhs_sample(plan, rng);
    REQUIRE(m.rows() == 1);
    CHECK(m(0, 0) >= 2.0);
    CHECK(m(0, 0) < 6.0);
}

TEST_CASE("samples honour bounds and truncation") {
    const LhsPlan plan = mixed_plan(1000);
    Rng rng(9);
    const Eigen::MatrixXd m = lhs_sample(plan, rng);
    for (int i = 0; i < 1000; ++i) {
        CHECK(m(i, 0) >= -2.4);
        CHECK(m(i, 0) <= 2.4);
        CHECK(m(i, 2) >= 0.01);   // truncated gaussian respects bounds
        CHECK(m(i, 2) <= 1.999);
        CHECK((m(i, 4) == -1.0 || m(i, 4) == 1.0));
    }
}

TEST_CASE("gaussian marginal approaches its distribution (KS test)") {
    LhsPlan plan;
    plan.n = 1000;
    plan.dims = {LhsDim::gaussian("z", 0.0, 1.0,
                                  -std::numeric_limits<double>::infinity(),
                                  std::numeric_limits<double>::infinity())};
    Rng rng(17);
    const Eigen::MatrixXd m = lhs_sample(plan, rng);
    std::vector<double> xs(m.col(0).data(), m.col(0).data() + 1000);
    std::sort(xs.begin(), xs.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = normal_cdf(xs[i]);
        const double lo = static_cast<double>(i) / 1000.0;
        const double hi = static_cast<double>(i + 1) / 1000.0;
        ks = std::max(ks, std::max(std::abs(f - lo), std::abs(f - hi)));
    }
    CHECK(ks <= 0.05);
}

TEST_CASE("stratified marginals have smaller max gap than iid on matched seeds") {
    for (int n : {32, 128, 1000}) {
        for (std::uint64_t seed = 100; seed < 120; ++seed) {
            LhsPlan plan;
            plan.n = n;
            plan.dims = {LhsDim::uniform("u", 0.0, 1.0)};
            Rng lhs_rng(seed);
            const Eigen::MatrixXd m = lhs_sample(plan, lhs_rng);
            std::vector<double> lhs_xs(m.col(0).data(), m.col(0).data() + n);

            Rng iid_rng(seed);
            std::vector<double> iid_xs(static_cast<std::size_t>(n));
            for (auto& x : iid_xs) x = iid_rng.uniform();

            CAPTURE(n);
            CAPTURE(seed);
            CHECK(max_gap(lhs_xs) <= max_gap(iid_xs));
            // Stratification also bounds the gap absolutely by two strata.
            CHECK(max_gap(lhs_xs) <= 2.0 / n + 1e-12);
        }
    }
}

TEST_CASE("same plan and seed reproduce the matrix bit for bit") {
    const LhsPlan plan = mixed_plan(256);
    Rng a(77), b(77), c(78);
    const Eigen::MatrixXd ma = lhs_sample(plan, a);
    const Eigen::MatrixXd mb = lhs_sample(plan, b);
    const Eigen::MatrixXd mc = lhs_sample(plan, c);
    CHECK(ma == mb);
    CHECK(ma != mc);
}

TEST_CASE("dimensions are permuted independently") {
    LhsPlan plan;
    plan.n = 512;
    plan.dims = {LhsDim::uniform("a", 0.0, 1.0), LhsDim::uniform("b", 0.0, 1.0)};
    Rng rng(3);
    const Eigen::MatrixXd m = lhs_sample(plan, rng);
    // If both dims shared one permutation the columns would be comonotone.
    int agree = 0;
    for (int i = 0; i < 512; ++i) {
        const int sa = static_cast<int>(m(i, 0) * 512);
        const int sb = static_cast<int>(m(i, 1) * 512);
        if (sa == sb) ++agree;
    }
    CHECK(agree < 64);
}

TEST_CASE("dimension value mapping hits closed-form positions") {
    const LhsDim u = LhsDim::uniform("u", 10.0, 30.0);
    CHECK(lhs_dim_value(u, 0.25) == doctest::Approx(15.0).epsilon(1e-15));
    CHECK(lhs_dim_value(u, 0.5) == doctest::Approx(20.0).epsilon(1e-15));

    const LhsDim g = LhsDim::gaussian("g", 5.0, 2.0,
                                      -std::numeric_limits<double>::infinity(),
                                      std::numeric_limits<double>::infinity());
    CHECK(lhs_dim_value(g, 0.5) == doctest::Approx(5.0).epsilon(1e-12));
    // 97.5th percentile of N(5, 2): 5 + 2 * 1.959963984540054.
    CHECK(lhs_dim_value(g, 0.975) ==
          doctest::Approx(5.0 + 2.0 * 1.959963984540054).epsilon(1e-9));

    // Zero-std gaussian collapses to the mean.
    const LhsDim dg = LhsDim::gaussian("dg", 3.0, 0.0, 2.0, 4.0);
    CHECK(lhs_dim_value(dg, 0.1) == 3.0);
    CHECK(lhs_dim_value(dg, 0.9) == 3.0);

    const LhsDim d = LhsDim::discrete("d", {-1.0, 1.0});
    CHECK(lhs_dim_value(d, 0.2) == -1.0);
    CHECK(lhs_dim_value(d, 0.4999) == -1.0);
    CHECK(lhs_dim_value(d, 0.5) == 1.0);
    CHECK(lhs_dim_value(d, 0.9) == 1.0);

    const LhsDim d3 = LhsDim::discrete("d3", {7.0, 8.0, 9.0});
    CHECK(lhs_dim_value(d3, 0.1) == 7.0);
    CHECK(lhs_dim_value(d3, 0.5) == 8.0);
    CHECK(lhs_dim_value(d3, 0.99) == 9.0);
}

TEST_CASE("normal quantile inverts the cdf to high precision") {
    for (double z : {-3.0, -1.5, -0.1, 0.0, 0.2, 1.0, 2.5, 4.0}) {
        CHECK(normal_quantile(normal_cdf(z)) == doctest::Approx(z).epsilon(1e-12));
    }
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
}

TEST_CASE("action discretization is the even unit split") {
    CHECK(discretize_action(0.0) == -1.0);
    CHECK(discretize_action(0.4999999) == -1.0);
    CHECK(discretize_action(0.5) == 1.0);
    CHECK(discretize_action(0.9999999) == 1.0);
    CHECK_THROWS_AS(discretize_action(1.0), ContractViolation);
    CHECK_THROWS_AS(discretize_action(-0.1), ContractViolation);
}

TEST_CASE("plan validation rejects malformed dimensions") {
    LhsPlan plan;
    plan.n = 0;
    plan.dims = {LhsDim::uniform("u", 0.0, 1.0)};
    CHECK_THROWS_AS(plan.validate(), ContractViolation);

    plan.n = 4;
    plan.dims.clear();
    CHECK_THROWS_AS(plan.validate(), ContractViolation);

    plan.dims = {LhsDim::uniform("u", 2.0, 1.0)};
    CHECK_THROWS_AS(plan.validate(), ContractViolation);

    plan.dims = {LhsDim::gaussian("g", 0.0, -1.0, 0.0, 1.0)};
    CHECK_THROWS_AS(plan.validate(), ContractViolation);

    plan.dims = {LhsDim::discrete("d", {})};
    CHECK_THROWS_AS(plan.validate(), ContractViolation);

    plan.dims = {LhsDim::uniform("ok", 0.0, 1.0)};
    CHECK_NOTHROW(plan.validate());
}
