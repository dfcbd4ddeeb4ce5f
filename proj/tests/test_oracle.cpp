#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "relaymean/exponents.hpp"
#include "relaymean/oracle.hpp"
#include "test_helpers.hpp"

using namespace relaymean;

TEST_CASE("Bernoulli expectation ratio is exactly 1 at theta' = theta*") {
    auto ch = make_bsc(0.1);
    Rng rng(2);
    auto cb = generate_binary(6, 7, 0.3, rng, 500);
    for (double t : {0.2, 0.5, 0.81}) {
        auto r = exact_ef_ratio_bernoulli(t, t, 6, cb, ch);
        CHECK(r.exact == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.satisfied);
    }
}

TEST_CASE("Bernoulli expectation ratio respects the decomposition bound") {
    for (double p : {0.1, 0.25}) {
        auto ch = make_bsc(p);
        for (std::uint64_t s = 0; s < 3; ++s) {
            Rng rng(s);
            auto cb = generate_binary(6, 7, 0.3, rng, 500);
            Rng pr(100 + s);
            for (int i = 0; i < 6; ++i) {
                const auto r = exact_ef_ratio_bernoulli(pr.uniform01(), pr.uniform01(),
                                                        6, cb, ch);
                CHECK(r.satisfied);
                CHECK(r.exact >= 0.0);
            }
        }
    }
}

TEST_CASE("cross terms vanish over a noiseless channel with distinct codewords") {
    auto ch = make_identity_channel(2);
    // Distinct codewords: the 5 standard patterns of length 4.
    Codebook cb;
    cb.k = 4;
    cb.metric = CodebookMetric::hamming;
    cb.codewords = {Word({0, 0, 0, 0}), Word({0, 0, 0, 1}), Word({0, 0, 1, 1}),
                    Word({0, 1, 1, 1}), Word({1, 1, 1, 1})};
    const double ts = 0.3, tp = 0.7;
    auto r = exact_ef_ratio_bernoulli(ts, tp, 4, cb, ch);
    const double rho = std::sqrt(ts * tp) + std::sqrt((1 - ts) * (1 - tp));
    CHECK(r.exact == doctest::Approx(std::pow(rho, 4)).epsilon(1e-12));
    CHECK(r.satisfied);
}

TEST_CASE("sub-Gaussian ratio collapses for a single-point index space") {
    auto ch = make_identity_channel(2);
    SubgIndexMap map;
    map.quant_step = 1.0;
    map.denom = 1;
    map.clip_int = 0;
    map.k = 4;
    Codebook cb;
    cb.k = 4;
    cb.metric = CodebookMetric::bhattacharyya;
    cb.codewords = {Word({0, 1, 0, 1})};
    auto src = SourceModel::make_discrete(SourceKind::custom_bounded,
                                          {{0.0, 0.5}, {1.0, 0.5}});
    const double sigma2 = 0.25;
    const double ts = 0.5, tp = 0.1;
    auto r = exact_ef_ratio_subg(ts, tp, cb, ch, sigma2, src, map);
    // Single alpha = 0: the ratio is constant in Z.
    const double expected = std::exp(-4.0 * ((tp * tp) - (ts * ts)) / (4.0 * sigma2));
    CHECK(r.exact == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sub-Gaussian ratio respects the displayed bound") {
    const int k = 4;
    ChannelModel ch(2, 3, {0.7, 0.2, 0.1, 0.1, 0.2, 0.7});
    auto map = make_subg_index_map(k, 1.0, 1.0, BaseEstimator::sample_mean, 1);
    Rng rng(5);
    Codebook cb;
    cb.k = k;
    cb.metric = CodebookMetric::bhattacharyya;
    for (std::size_t i = 0; i < map.size(); ++i)
        cb.codewords.push_back(testutil::random_word(rng, k, 2));
    auto src = SourceModel::make_discrete(SourceKind::custom_bounded,
                                          {{0.0, 0.6}, {1.0, 0.4}});
    for (double tp : {0.1, 0.4, 0.9}) {
        auto r = exact_ef_ratio_subg(src.theta_star, tp, cb, ch, src.sigma2, src, map);
        CHECK(r.satisfied);
    }
    auto same = exact_ef_ratio_subg(src.theta_star, src.theta_star, cb, ch, src.sigma2,
                                    src, map);
    CHECK(same.exact == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exact error probability is zero when the accuracy ball covers the range") {
    auto ch = make_identity_channel(2);
    Rng rng(7);
    auto cb = generate_binary(3, 4, 0.4, rng, 500);
    ProtocolConfig cfg;
    cfg.n = 9;
    cfg.k = 3;
    cfg.eps = 0.49;
    cfg.codebook = &cb;
    auto src = SourceModel::make_bernoulli(0.5);
    auto r = exact_error_probability(src, ch, cfg);
    CHECK(r.miss_prob == 0.0);
}

TEST_CASE("exact miss probability, containment, and Monte Carlo agreement") {
    auto ch = make_bsc(0.2);
    Rng rng(7);
    auto cb = generate_binary(3, 4, 0.4, rng, 500);
    ProtocolConfig cfg;
    cfg.n = 9;
    cfg.k = 3;
    cfg.eps = 0.3;
    cfg.codebook = &cb;
    auto src = SourceModel::make_bernoulli(0.4);
    const auto exact = exact_error_probability(src, ch, cfg);
    CHECK(exact.miss_prob > 0.0);
    CHECK(exact.miss_prob < 1.0);
    CHECK(exact.miss_prob <= exact.p_rounded_not_in_s + 1e-15);

    const long trials = 200000;
    long misses = 0;
    ProtocolRunner runner(src, ch, cfg);
    for (long t = 0; t < trials; ++t) {
        Rng trng(derive_seed(99, "oracle-mc", 9, static_cast<std::uint64_t>(t)));
        auto tr = runner.run(trng);
        if (std::abs(tr.theta_hat - 0.4) > 0.3) ++misses;
    }
    const double p_hat = static_cast<double>(misses) / trials;
    const double se = std::sqrt(exact.miss_prob * (1 - exact.miss_prob) / trials);
    CHECK(std::abs(p_hat - exact.miss_prob) <= 5.0 * se);
}

TEST_CASE("per-block expectations multiply across independent blocks") {
    // Joint enumeration over two blocks equals the square of the one-block
    // expectation ratio.
    auto ch = make_bsc(0.2);
    Rng rng(11);
    auto cb = generate_binary(3, 4, 0.4, rng, 500);
    const double ts = 0.4, tp = 0.9;
    const auto single = exact_ef_ratio_bernoulli(ts, tp, 3, cb, ch);

    // Test-local joint enumeration over (Z1, Z2).
    auto pmf = [&](int a) {
        return std::exp(std::lgamma(4.0) - std::lgamma(a + 1.0) - std::lgamma(4.0 - a) +
                        a * std::log(ts) + (3 - a) * std::log1p(-ts));
    };
    std::vector<Word> zs;
    for (int bits = 0; bits < 8; ++bits)
        zs.push_back(Word({static_cast<Symbol>(bits & 1), static_cast<Symbol>((bits >> 1) & 1),
                           static_cast<Symbol>((bits >> 2) & 1)}));
    auto ratio = [&](const Word& z) {
        const double fs = testutil::brute_force_f_bernoulli(ts, z, cb, ch);
        const double fp = testutil::brute_force_f_bernoulli(tp, z, cb, ch);
        return fp / fs;
    };
    auto pz = [&](const Word& z) {
        double acc = 0.0;
        for (int a = 0; a <= 3; ++a)
            acc += pmf(a) * std::exp(word_log_likelihood(ch, cb.codewords[a], z));
        return acc;
    };
    double joint = 0.0;
    for (const auto& z1 : zs)
        for (const auto& z2 : zs) joint += pz(z1) * pz(z2) * ratio(z1) * ratio(z2);
    CHECK(joint == doctest::Approx(single.exact * single.exact).epsilon(1e-12));
}

TEST_CASE("verification suite passes and serializes") {
    auto reports = run_verification_suite(6, 12345);
    CHECK(reports.size() > 10);
    CHECK(all_satisfied(reports));
    const auto js = reports_to_json(reports);
    CHECK(js.find("\"all_satisfied\": true") != std::string::npos);
    CHECK(js.find("ef_ratio_bernoulli") != std::string::npos);
    CHECK(js.find("union_markov_chain") != std::string::npos);
}

TEST_CASE("oracle guards reject oversized enumerations") {
    auto ch = make_bsc(0.1);
    Rng rng(3);
    auto cb = generate_binary(20, 21, 0.3, rng, 500);
    CHECK_THROWS_AS(exact_ef_ratio_bernoulli(0.4, 0.6, 20, cb, ch),
                    std::invalid_argument);
    ProtocolConfig cfg;
    cfg.n = 200;
    cfg.k = 20;
    cfg.eps = 0.2;
    cfg.codebook = &cb;
    auto src = SourceModel::make_bernoulli(0.4);
    CHECK_THROWS_AS(exact_error_probability(src, ch, cfg), std::invalid_argument);
}
