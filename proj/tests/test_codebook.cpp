#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "relaymean/codebook.hpp"
#include "relaymean/exponents.hpp"

using namespace relaymean;

TEST_CASE("generate_binary meets the distance target and is deterministic") {
    Rng a(11), b(11);
    auto cb1 = generate_binary(64, 20, 0.4, a);
    auto cb2 = generate_binary(64, 20, 0.4, b);
    CHECK(cb1.codewords == cb2.codewords);
    CHECK(cb1.min_pairwise >= 0.4 * 64);
    CHECK(cb1.metric == CodebookMetric::hamming);
    auto v = verify(cb1);
    CHECK(v.min_pairwise == cb1.min_pairwise);
}

TEST_CASE("generate_binary trivial and impossible cases") {
    Rng rng(3);
    auto single = generate_binary(16, 1, 0.4, rng);
    CHECK(std::isinf(single.min_pairwise)); // no pairs

    // All of {0,1}^4 used: pairs at distance 1 must exist.
    Rng rng2(4);
    CHECK_THROWS_AS(generate_binary(4, 16, 0.4, rng2, 50), CodebookGenerationError);
    try {
        Rng rng3(4);
        generate_binary(4, 16, 0.4, rng3, 50);
    } catch (const CodebookGenerationError& e) {
        CHECK(e.best_min_pairwise < 0.4 * 4);
        CHECK(e.attempts_used == 50);
    }

    Rng rng4(5);
    CHECK_THROWS_AS(generate_binary(4, 17, 0.3, rng4), std::invalid_argument);
    CHECK_THROWS_AS(generate_binary(8, 4, 0.5, rng4), std::invalid_argument);
}

TEST_CASE("generate_binary success rate at the documented working point (reduced k)") {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        try {
            auto cb = generate_binary(100, 101, 0.4, rng);
            CHECK(cb.min_pairwise >= 40.0);
            ++ok;
        } catch (const CodebookGenerationError&) {
        }
    }
    CHECK(ok >= 9);
}

TEST_CASE("generate_dmc over a BSC meets the Bhattacharyya threshold") {
    auto ch = make_bsc(0.1);
    const double e0 = zero_rate_exponent(ch).value;
    Rng rng(21);
    auto cb = generate_dmc(100, 20, ch, rng, 0.2);
    CHECK(cb.metric == CodebookMetric::bhattacharyya);
    CHECK(cb.min_pairwise >= 0.8 * 100 * e0);
    auto v = verify(cb, &ch);
    CHECK(v.min_pairwise == cb.min_pairwise);
}

TEST_CASE("generate_dmc on a noiseless channel gives infinite pairwise distance") {
    auto ch = make_identity_channel(2);
    Rng rng(8);
    auto cb = generate_dmc(64, 8, ch, rng, 0.2);
    CHECK(std::isinf(cb.min_pairwise));
    Rng rng2(9);
    auto one = generate_dmc(16, 1, ch, rng2, 0.2);
    CHECK(std::isinf(one.min_pairwise)); // vacuous
}

TEST_CASE("generate_dmc minimum distance approaches k E0 as k grows") {
    auto ch = make_bsc(0.1);
    const double e0 = zero_rate_exponent(ch).value;
    double prev_ratio = 0.0;
    for (std::size_t k : {100, 200, 400}) {
        std::vector<double> ratios;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            Rng rng(seed);
            auto cb = generate_dmc(k, k / 10, ch, rng, 0.25);
            ratios.push_back(cb.min_pairwise / (static_cast<double>(k) * e0));
        }
        std::sort(ratios.begin(), ratios.end());
        const double median = ratios[ratios.size() / 2];
        CHECK(median > prev_ratio);
        prev_ratio = median;
    }
    CHECK(prev_ratio < 1.0 + 1e-12);
}

TEST_CASE("verify reports offending pairs") {
    Codebook cb;
    cb.k = 4;
    cb.metric = CodebookMetric::hamming;
    cb.codewords = {Word({0, 0, 0, 0}), Word({1, 1, 1, 1}), Word({0, 0, 0, 0})};
    auto v = verify(cb);
    CHECK(v.min_pairwise == 0.0);
    REQUIRE(v.offending_pair.has_value());
    CHECK(v.offending_pair->first == 0);
    CHECK(v.offending_pair->second == 2);

    cb.codewords = {Word({0, 0, 0, 0}), Word({1, 1, 1, 1})};
    CHECK(verify(cb).min_pairwise == 4.0);
}

TEST_CASE("verify metric/channel consistency") {
    auto ch = make_bsc(0.1);
    Codebook hamming;
    hamming.k = 2;
    hamming.metric = CodebookMetric::hamming;
    hamming.codewords = {Word({0, 0}), Word({1, 1})};
    CHECK_THROWS_AS(verify(hamming, &ch), std::invalid_argument);
    Codebook bhat = hamming;
    bhat.metric = CodebookMetric::bhattacharyya;
    CHECK_THROWS_AS(verify(bhat), std::invalid_argument);
    CHECK(verify(bhat, &ch).min_pairwise ==
          doctest::Approx(2 * 0.5108256237659907).epsilon(1e-12));
}

TEST_CASE("codebook text round trip") {
    Rng rng(17);
    auto cb = generate_binary(12, 5, 0.3, rng);
    const auto text = codebook_to_text(cb);
    auto back = codebook_from_text(text);
    CHECK(back.k == cb.k);
    CHECK(back.codewords == cb.codewords);
    CHECK(back.metric == cb.metric);
    CHECK(back.min_pairwise == cb.min_pairwise);

    const std::string path = "/tmp/relaymean_test_codebook.txt";
    save_codebook(cb, path);
    auto loaded = load_codebook(path);
    CHECK(loaded.codewords == cb.codewords);
    std::remove(path.c_str());

    CHECK_THROWS(codebook_from_text("garbage"));
    CHECK_THROWS(codebook_from_text("2 1 hamming\n0x\n"));
}
