#pragma once

#include <cstdint>
#include <vector>

#include "relaymean/channel.hpp"
#include "relaymean/codebook.hpp"
#include "relaymean/protocol.hpp"

namespace relaymean {

struct EstimateResult {
    double theta_hat = 0.0;
    bool fallback_used = false;
};

// Direct-observation estimator: pairwise-test decoder on the exact sample
// likelihood over a grid with 2 eps exclusion and the midpoint rule.  This
// attains the source exponent, which the sample mean generally does not.
EstimateResult direct_estimator_bernoulli(const std::vector<int>& samples, double eps,
                                          double grid_step = 0.0);
EstimateResult direct_estimator_subg(const std::vector<double>& samples, double eps,
                                     double sigma2, double range_lo, double range_hi,
                                     double grid_step = 0.0);
// Dispatch on the source class; heavy-tailed sources use median-of-means.
EstimateResult direct_estimator(const SourceModel& source,
                                const std::vector<double>& samples, double eps,
                                double grid_step = 0.0, int mom_groups = 0);

// Maximum-likelihood decoding; ties broken by the smallest index.
std::size_t ml_decode(const Codebook& codebook, const ChannelModel& channel,
                      const Word& received);

// Quantizer grid of odd multiples of delta_eps covering [lo, hi] within
// delta_eps, with the right endpoint appended when uncovered.
struct QuantizerGrid {
    std::vector<double> points;
    double step = 0.0; // 2 * delta_eps
};
QuantizerGrid quantizer_grid(double delta_eps, double lo = 0.0, double hi = 1.0);

// Simple forwarding over a binary symmetric channel: W_i = X_{i-1} with a
// fixed first symbol; the student inverts the crossover mixing.  Accepts
// p = 0 (identity channel) so the construction degenerates to the direct
// estimator.
EstimateResult run_simple_forwarding(const SourceModel& source,
                                     const ChannelModel& channel, long n, double eps,
                                     Rng& rng);

struct BaselineRun {
    double theta_hat = 0.0;
    std::size_t grid_index = 0; // decoded quantizer point
    bool noncausal = false;     // hypothetical-setting marker
};

// One-shot estimate-and-forward: estimate on the first (1-lambda) n samples
// at accuracy (1-delta) eps, quantize to the delta-eps grid, transmit the
// index over the last lambda n channel uses.
BaselineRun run_oneshot(const SourceModel& source, const ChannelModel& channel, long n,
                        double eps, double lambda, double delta, Rng& rng);

// Hypothetical non-causal protocol: both stages get all n samples / uses.
// Outputs are flagged; used for converse-side comparison curves only.
BaselineRun run_noncausal(const SourceModel& source, const ChannelModel& channel,
                          long n, double eps, double delta, Rng& rng);

} // namespace relaymean
