#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relaymean/channel.hpp"
#include "relaymean/codebook.hpp"
#include "relaymean/protocol.hpp"

namespace relaymean {

// Exact brute-force checks for the analysis chain behind the block protocol.
// Everything here enumerates tiny instances with hard size guards; these run
// in the test suite and the `verify` subcommand, never on a hot path.

struct OracleReport {
    std::string name;
    double exact = 0.0;
    double bound = 0.0;
    bool satisfied = false; // exact <= bound + 1e-12
    std::string params_json;

    std::string to_json() const;
};

// Exact E[f(theta', Z) / f(theta*, Z)] for one Bernoulli block, enumerated
// over all (alpha, Z) pairs, compared against the two-term decomposition
// exp(-k d_B(theta*, theta')) + sum_{alpha != alpha'} rho(W_alpha, W_alpha').
OracleReport exact_ef_ratio_bernoulli(double theta_star, double theta_prime, int k,
                                      const Codebook& codebook,
                                      const ChannelModel& channel);

// Sub-Gaussian analog over a finite discrete source whose atoms lie on the
// quantization grid; bound is 4 k^3 exp(-k (theta'-theta*)^2 / (8 sigma^2))
// plus the pairwise Bhattacharyya sum.
OracleReport exact_ef_ratio_subg(double theta_star, double theta_prime,
                                 const Codebook& codebook, const ChannelModel& channel,
                                 double sigma2, const SourceModel& source,
                                 const SubgIndexMap& map,
                                 BaseEstimator estimator = BaseEstimator::sample_mean,
                                 int mom_groups = 1);

struct ExactErrorResult {
    double miss_prob = 0.0;          // P(|theta_hat - theta*| > eps), exact
    double p_rounded_not_in_s = 0.0; // P(theta** not in S), exact
    double theta_rounded = 0.0;      // theta**
    double outcomes_per_block = 0.0;
    long usable_blocks = 0;
};

// Exact miss probability of the full protocol by enumeration over all joint
// block outcomes; requires (outcomes per block)^(usable blocks) <= 1e7.
ExactErrorResult exact_error_probability(const SourceModel& source,
                                         const ChannelModel& channel,
                                         const ProtocolConfig& config);

// Canned verification suite run by the CLI: decomposition and rounding
// bounds across small instances up to max_k.
std::vector<OracleReport> run_verification_suite(int max_k, std::uint64_t seed);

bool all_satisfied(const std::vector<OracleReport>& reports);
std::string reports_to_json(const std::vector<OracleReport>& reports);

} // namespace relaymean
