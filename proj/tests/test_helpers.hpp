#pragma once

// Test-only oracles, kept independent of the library's computation paths.

#include <cmath>
#include <limits>
#include <vector>

#include "relaymean/channel.hpp"
#include "relaymean/codebook.hpp"
#include "relaymean/protocol.hpp"

namespace testutil {

// Quadratic-time survivor set straight from the definition: theta is a
// survivor when its score beats every grid point at distance >= radius.
struct RefDecodeResult {
    std::vector<char> survivor;
    long s_lo = -1, s_hi = -1;
    bool fallback_used = false;
    double theta_hat = 0.0;
};

inline RefDecodeResult reference_survivors(const std::vector<double>& grid,
                                           const std::vector<double>& scores,
                                           double radius) {
    const long n = static_cast<long>(grid.size());
    RefDecodeResult r;
    r.survivor.assign(n, 0);
    for (long i = 0; i < n; ++i) {
        bool surv = true;
        for (long j = 0; j < n; ++j) {
            if (std::abs(grid[j] - grid[i]) >= radius && !(scores[i] > scores[j])) {
                surv = false;
                break;
            }
        }
        if (surv) {
            r.survivor[i] = 1;
            if (r.s_lo < 0) r.s_lo = i;
            r.s_hi = i;
        }
    }
    if (r.s_lo >= 0) {
        r.theta_hat = 0.5 * (grid[r.s_lo] + grid[r.s_hi]);
    } else {
        r.fallback_used = true;
        long best = 0;
        for (long i = 1; i < n; ++i)
            if (scores[i] > scores[best]) best = i;
        r.theta_hat = grid[best];
    }
    return r;
}

// Brute-force f(theta, Z) = sum_alpha sqrt(Binom(k,theta)(alpha) P(Z|W_alpha))
// by direct term-by-term summation in the linear domain.
inline double brute_force_f_bernoulli(double theta, const relaymean::Word& z,
                                      const relaymean::Codebook& cb,
                                      const relaymean::ChannelModel& ch) {
    const int k = static_cast<int>(cb.k);
    double f = 0.0;
    for (int a = 0; a <= k; ++a) {
        double pmf;
        if (theta == 0.0) {
            pmf = a == 0 ? 1.0 : 0.0;
        } else if (theta == 1.0) {
            pmf = a == k ? 1.0 : 0.0;
        } else {
            pmf = std::exp(std::lgamma(k + 1.0) - std::lgamma(a + 1.0) -
                           std::lgamma(k - a + 1.0) + a * std::log(theta) +
                           (k - a) * std::log1p(-theta));
        }
        const double like =
            std::exp(relaymean::word_log_likelihood(ch, cb.codewords[a], z));
        f += std::sqrt(pmf * like);
    }
    return f;
}

// Random row-stochastic channel for property tests.
inline relaymean::ChannelModel random_channel(relaymean::Rng& rng, std::size_t in,
                                              std::size_t out) {
    std::vector<double> m(in * out);
    for (std::size_t w = 0; w < in; ++w) {
        double s = 0.0;
        for (std::size_t z = 0; z < out; ++z) {
            m[w * out + z] = rng.uniform01() + 0.02;
            s += m[w * out + z];
        }
        double acc = 0.0;
        for (std::size_t z = 0; z + 1 < out; ++z) {
            m[w * out + z] /= s;
            acc += m[w * out + z];
        }
        m[w * out + out - 1] = 1.0 - acc;
    }
    return relaymean::ChannelModel(in, out, m);
}

// Uniformly random word of the given length.
inline relaymean::Word random_word(relaymean::Rng& rng, std::size_t len,
                                   std::size_t alphabet) {
    relaymean::Word w;
    w.symbols.reserve(len);
    for (std::size_t i = 0; i < len; ++i)
        w.symbols.push_back(static_cast<relaymean::Symbol>(rng.below(alphabet)));
    return w;
}

} // namespace testutil
