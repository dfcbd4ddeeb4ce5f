#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <limits>

#include "relaymean/channel.hpp"

using namespace relaymean;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("make_bsc builds the expected matrix and rejects bad p") {
    auto c = make_bsc(0.1);
    CHECK(c.prob(0, 0) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(c.prob(0, 1) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(c.prob(1, 0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(c.prob(1, 1) == doctest::Approx(0.9).epsilon(1e-15));
    auto c2 = make_bsc(0.25);
    CHECK(c2.prob(0, 1) == doctest::Approx(0.25));
    CHECK_THROWS_AS(make_bsc(0.5), std::invalid_argument);
    CHECK_THROWS_AS(make_bsc(0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_bsc(-0.1), std::invalid_argument);
}

TEST_CASE("channel constructor validates rows") {
    CHECK_THROWS_AS(ChannelModel(2, 2, {0.5, 0.6, 0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(ChannelModel(2, 2, {1.5, -0.5, 0.5, 0.5}), std::invalid_argument);
    CHECK_NOTHROW(ChannelModel(1, 3, {0.2, 0.3, 0.5}));
}

TEST_CASE("channel json round trip") {
    auto c = ChannelModel::from_json(R"({"type":"bsc","p":0.1})");
    double p = 0;
    CHECK(c.is_bsc(&p));
    CHECK(p == doctest::Approx(0.1));
    auto d = ChannelModel::from_json(R"({"type":"dmc","matrix":[[0.5,0.5,0.0],[0.0,0.5,0.5]]})");
    CHECK(d.input_size() == 2);
    CHECK(d.output_size() == 3);
    CHECK(!d.is_bsc());
    auto back = ChannelModel::from_json(d.to_json());
    CHECK(back.prob(1, 2) == doctest::Approx(0.5));
    CHECK_THROWS(ChannelModel::from_json(R"({"type":"awgn"})"));
}

TEST_CASE("transmit is identity for the noiseless channel") {
    auto c = make_identity_channel(2);
    Rng rng(7);
    Word in({0, 1, 1, 0});
    auto out = transmit(c, in, rng);
    CHECK(out == in);
}

TEST_CASE("transmit at negligible crossover keeps long words intact") {
    auto c = make_bsc(1e-9);
    Rng rng(123);
    Word in(std::vector<Symbol>(10000, 0));
    auto out = transmit(c, in, rng);
    std::size_t dist = 0;
    for (std::size_t i = 0; i < in.length(); ++i) dist += in.symbols[i] != out.symbols[i];
    CHECK(dist == 0);
}

TEST_CASE("transmit is reproducible and rejects bad symbols") {
    auto c = make_bsc(0.1);
    Word in({0, 0, 0, 0});
    Rng a(42), b(42);
    auto z1 = transmit(c, in, a);
    auto z2 = transmit(c, in, b);
    CHECK(z1 == z2);
    CHECK(z1.length() == 4);
    Word bad({0, 2});
    Rng r(1);
    CHECK_THROWS_AS(transmit(c, bad, r), std::invalid_argument);
}

TEST_CASE("transmit matches the transition row empirically") {
    auto c = ChannelModel(2, 3, {0.2, 0.5, 0.3, 0.6, 0.1, 0.3});
    Rng rng(2024);
    const int n = 100000;
    int counts[3] = {0, 0, 0};
    Word in({1});
    for (int i = 0; i < n; ++i) {
        auto z = transmit(c, in, rng);
        counts[z.symbols[0]]++;
    }
    for (int z = 0; z < 3; ++z) {
        const double p = c.prob(1, static_cast<Symbol>(z));
        const double se = std::sqrt(p * (1 - p) / n);
        CHECK(std::abs(counts[z] / double(n) - p) < 5 * se);
    }
}

TEST_CASE("symbol_db_matrix values") {
    auto c = make_bsc(0.1);
    auto d = symbol_db_matrix(c);
    CHECK(d[0 * 2 + 1] == doctest::Approx(0.5108256237659907).epsilon(1e-12));
    CHECK(d[0] == 0.0);
    CHECK(d[3] == 0.0);
    CHECK(d[1] == d[2]);

    auto noiseless = make_identity_channel(2);
    auto dn = symbol_db_matrix(noiseless);
    CHECK(std::isinf(dn[1]));
}

TEST_CASE("symbol_db_matrix is symmetric with zero diagonal on random channels") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t in = 2 + rng.below(3), out = 2 + rng.below(3);
        std::vector<double> m(in * out);
        for (std::size_t w = 0; w < in; ++w) {
            double s = 0;
            for (std::size_t z = 0; z < out; ++z) {
                m[w * out + z] = -std::log(rng.uniform01() + 1e-12);
                s += m[w * out + z];
            }
            for (std::size_t z = 0; z < out; ++z) m[w * out + z] /= s;
            double rowsum = 0;
            for (std::size_t z = 0; z + 1 < out; ++z) rowsum += m[w * out + z];
            m[w * out + out - 1] = 1.0 - rowsum;
        }
        ChannelModel c(in, out, m);
        auto d = symbol_db_matrix(c);
        for (std::size_t i = 0; i < in; ++i) {
            CHECK(d[i * in + i] == 0.0);
            for (std::size_t j = 0; j < in; ++j) CHECK(d[i * in + j] == d[j * in + i]);
        }
    }
}

TEST_CASE("word_log_likelihood basics") {
    auto c = make_bsc(0.1);
    Word a({0, 0}), same({0, 0}), flip({0, 1});
    CHECK(word_log_likelihood(c, a, same) == doctest::Approx(2 * std::log(0.9)).epsilon(1e-14));
    CHECK(word_log_likelihood(c, a, flip) ==
          doctest::Approx(std::log(0.9) + std::log(0.1)).epsilon(1e-14));
    auto noiseless = make_identity_channel(2);
    CHECK(word_log_likelihood(noiseless, a, flip) == -kInf);
    Word shorter({0});
    CHECK_THROWS_AS(word_log_likelihood(c, a, shorter), std::invalid_argument);
}

// Tensorization: word-level d_B computed by brute force over all output
// words equals the sum of per-symbol distances.
TEST_CASE("word-level Bhattacharyya distance tensorizes") {
    Rng rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t in = 2 + rng.below(2), out = 2 + rng.below(2);
        std::vector<double> m(in * out);
        for (std::size_t w = 0; w < in; ++w) {
            double s = 0;
            for (std::size_t z = 0; z < out; ++z) {
                m[w * out + z] = rng.uniform01() + 0.05;
                s += m[w * out + z];
            }
            double rowsum = 0;
            for (std::size_t z = 0; z + 1 < out; ++z) {
                m[w * out + z] /= s;
                rowsum += m[w * out + z];
            }
            m[w * out + out - 1] = 1.0 - rowsum;
        }
        ChannelModel c(in, out, m);
        const std::size_t k = 2 + rng.below(7); // length <= 8
        Word w1, w2;
        for (std::size_t i = 0; i < k; ++i) {
            w1.symbols.push_back(static_cast<Symbol>(rng.below(in)));
            w2.symbols.push_back(static_cast<Symbol>(rng.below(in)));
        }
        // Brute force: sum over all output words of sqrt(P(z|w1) P(z|w2)).
        double rho = 0.0;
        std::vector<Symbol> z(k, 0);
        while (true) {
            double p1 = 1.0, p2 = 1.0;
            for (std::size_t i = 0; i < k; ++i) {
                p1 *= c.prob(w1.symbols[i], z[i]);
                p2 *= c.prob(w2.symbols[i], z[i]);
            }
            rho += std::sqrt(p1 * p2);
            std::size_t pos = 0;
            while (pos < k && ++z[pos] == out) z[pos++] = 0;
            if (pos == k) break;
        }
        const auto d = symbol_db_matrix(c);
        double expected = 0.0;
        for (std::size_t i = 0; i < k; ++i)
            expected += d[w1.symbols[i] * in + w2.symbols[i]];
        CHECK(-std::log(rho) == doctest::Approx(expected).epsilon(1e-9));
    }
}
