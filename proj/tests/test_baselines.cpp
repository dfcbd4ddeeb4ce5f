#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "relaymean/baselines.hpp"
#include "relaymean/exponents.hpp"
#include "test_helpers.hpp"

using namespace relaymean;

TEST_CASE("direct Bernoulli estimator on degenerate samples") {
    std::vector<int> ones(200, 1);
    auto r = direct_estimator_bernoulli(ones, 0.1);
    CHECK(std::abs(r.theta_hat - 1.0) <= 0.1 + 1.0 / 400.0);
    std::vector<int> zeros(200, 0);
    auto z = direct_estimator_bernoulli(zeros, 0.1);
    CHECK(std::abs(z.theta_hat - 0.0) <= 0.1 + 1.0 / 400.0);
    CHECK_THROWS_AS(direct_estimator_bernoulli({0, 1, 2}, 0.1), std::invalid_argument);
}

TEST_CASE("direct Bernoulli estimator rarely misses at large margins") {
    // theta* = 0.5, eps = 0.1, n = 2000: the source exponent is about 40
    // nats at this n, so no misses are expected in a small trial budget.
    auto src = SourceModel::make_bernoulli(0.5);
    int misses = 0;
    for (std::uint64_t t = 0; t < 200; ++t) {
        Rng rng(derive_seed(42, "direct", 2000, t));
        std::vector<int> samples(2000);
        for (auto& v : samples) v = rng.bernoulli(0.5) ? 1 : 0;
        auto r = direct_estimator_bernoulli(samples, 0.1);
        if (std::abs(r.theta_hat - 0.5) > 0.1) ++misses;
    }
    CHECK(misses == 0);
}

TEST_CASE("direct sub-Gaussian estimator recovers the mean") {
    Rng rng(5);
    auto src = SourceModel::make_gaussian(0.25, 0.5);
    std::vector<double> xs(3000);
    for (auto& v : xs) v = src.sample(rng);
    auto r = direct_estimator_subg(xs, 0.1, 0.5, -1.0, 1.0);
    CHECK(std::abs(r.theta_hat - 0.25) <= 0.1);
    auto heavy = SourceModel::make_discrete(SourceKind::discrete_heavy_tailed,
                                            {{0.0, 0.99}, {10.0, 0.01}}, 1.0);
    std::vector<double> hs(512);
    for (auto& v : hs) v = heavy.sample(rng);
    auto hr = direct_estimator(heavy, hs, 0.2);
    CHECK(std::isfinite(hr.theta_hat));
}

TEST_CASE("ml_decode exact and tie-breaking behavior") {
    auto noiseless = make_identity_channel(2);
    Rng rng(3);
    auto cb = generate_binary(10, 4, 0.3, rng, 500);
    for (std::size_t i = 0; i < cb.size(); ++i)
        CHECK(ml_decode(cb, noiseless, cb.codewords[i]) == i);

    // M = 2 antipodal codewords over a BSC: ML is minimum distance.
    auto bsc = make_bsc(0.1);
    Codebook anti;
    anti.k = 5;
    anti.metric = CodebookMetric::hamming;
    anti.codewords = {Word({0, 0, 0, 0, 0}), Word({1, 1, 1, 1, 1})};
    CHECK(ml_decode(anti, bsc, Word({0, 0, 1, 0, 0})) == 0);
    CHECK(ml_decode(anti, bsc, Word({1, 0, 1, 0, 1})) == 1);

    // Ties break to the smallest index.
    Codebook dup;
    dup.k = 2;
    dup.metric = CodebookMetric::hamming;
    dup.codewords = {Word({0, 1}), Word({0, 1})};
    CHECK(ml_decode(dup, bsc, Word({0, 1})) == 0);
}

TEST_CASE("ml_decode error rate is negligible at deep margins") {
    auto bsc = make_bsc(0.1);
    Rng rng(7);
    auto cb = generate_binary(400, 2, 0.4, rng);
    int errors = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t sent = t % 2;
        auto z = transmit(bsc, cb.codewords[sent], rng);
        if (ml_decode(cb, bsc, z) != sent) ++errors;
    }
    CHECK(errors == 0);
}

TEST_CASE("quantizer grid construction") {
    auto q1 = quantizer_grid(0.25);
    REQUIRE(q1.points.size() == 2);
    CHECK(q1.points[0] == doctest::Approx(0.25));
    CHECK(q1.points[1] == doctest::Approx(0.75));

    auto q2 = quantizer_grid(0.24);
    REQUIRE(q2.points.size() == 3);
    CHECK(q2.points[0] == doctest::Approx(0.24));
    CHECK(q2.points[1] == doctest::Approx(0.72));
    CHECK(q2.points[2] == doctest::Approx(1.0));

    // Covering radius <= delta_eps over probe points, multiple grids.
    Rng rng(11);
    for (int g = 0; g < 10; ++g) {
        const double de = 0.01 + 0.3 * rng.uniform01();
        auto q = quantizer_grid(de);
        for (int i = 0; i < 10000; ++i) {
            const double x = i / 9999.0;
            double best = 1e9;
            for (double v : q.points) best = std::min(best, std::abs(x - v));
            CHECK(best <= de + 1e-12);
        }
        // Size matches ceil(1/(2 de)) on the unit range.
        CHECK(q.points.size() == static_cast<std::size_t>(std::ceil(1.0 / (2 * de) - 1e-9)));
    }
}

TEST_CASE("simple forwarding inverts the crossover mixing") {
    auto src = SourceModel::make_bernoulli(0.0);
    auto bsc = make_bsc(0.1);
    Rng rng(17);
    auto r = run_simple_forwarding(src, bsc, 4000, 0.1, rng);
    CHECK(std::abs(r.theta_hat - 0.0) <= 0.05);

    auto mid = SourceModel::make_bernoulli(0.5);
    Rng rng2(18);
    auto r2 = run_simple_forwarding(mid, bsc, 4000, 0.1, rng2);
    CHECK(std::abs(r2.theta_hat - 0.5) <= 0.06);

    auto gauss = SourceModel::make_gaussian(0.5, 1.0);
    Rng rng3(19);
    CHECK_THROWS_AS(run_simple_forwarding(gauss, bsc, 100, 0.1, rng3),
                    std::invalid_argument);
}

TEST_CASE("simple forwarding over the identity channel reduces to the direct estimator") {
    auto identity = make_identity_channel(2);
    auto src = SourceModel::make_bernoulli(0.3);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        auto fwd = run_simple_forwarding(src, identity, 500, 0.1, rng);
        // Reconstruct the forwarded samples from the same stream.
        Rng rng2(seed);
        std::vector<int> xs(499);
        for (auto& v : xs) v = rng2.bernoulli(0.3) ? 1 : 0;
        auto direct = direct_estimator_bernoulli(xs, 0.1);
        CHECK(fwd.theta_hat == direct.theta_hat);
    }
}

TEST_CASE("one-shot estimate-and-forward stays within eps over a clean channel") {
    auto src = SourceModel::make_bernoulli(0.37);
    auto identity = make_identity_channel(2);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(derive_seed(7, "oneshot", 600, seed));
        auto r = run_oneshot(src, identity, 600, 0.1, 0.2, 0.3, rng);
        CHECK_FALSE(r.noncausal);
        CHECK(std::abs(r.theta_hat - 0.37) <= 0.1);
    }
}

TEST_CASE("one-shot and non-causal runs are deterministic and flagged") {
    auto src = SourceModel::make_bernoulli(0.5);
    auto bsc = make_bsc(0.1);
    Rng a(3), b(3);
    auto r1 = run_oneshot(src, bsc, 400, 0.2, 0.3, 0.5, a);
    auto r2 = run_oneshot(src, bsc, 400, 0.2, 0.3, 0.5, b);
    CHECK(r1.theta_hat == r2.theta_hat);
    CHECK(r1.grid_index == r2.grid_index);

    Rng c(4);
    auto nc = run_noncausal(src, bsc, 400, 0.2, 0.5, c);
    CHECK(nc.noncausal);
    CHECK_THROWS_AS(run_oneshot(src, bsc, 400, 0.2, 1.5, 0.5, a), std::invalid_argument);
    CHECK_THROWS_AS(run_oneshot(src, bsc, 400, 0.2, 0.5, 1.5, a), std::invalid_argument);
}

TEST_CASE("non-causal gets both budgets in full") {
    // With all n uses for the channel stage, the non-causal run survives a
    // noisy channel at block lengths where the one-shot stage would be thin.
    auto src = SourceModel::make_bernoulli(0.5);
    auto bsc = make_bsc(0.1);
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(derive_seed(9, "noncausal", 300, seed));
        auto r = run_noncausal(src, bsc, 300, 0.15, 0.5, rng);
        if (std::abs(r.theta_hat - 0.5) <= 0.15) ++ok;
    }
    CHECK(ok >= 19);
}
