#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "relaymean/channel.hpp"
#include "relaymean/rng.hpp"

namespace relaymean {

// All exponents are in nats (natural-log units).

// Binary KL divergence D(a || b); +infinity when b is degenerate and a
// puts mass where b does not.
double binary_kl(double a, double b);

// Bhattacharyya distance between Ber(t1) and Ber(t2).
double bernoulli_db(double t1, double t2);

// Source exponent for Bernoulli sources at accuracy eps in (0, 1/2):
// D(1/2 || 1/2 + eps) = -(1/2) log(1 - 4 eps^2).
double e_src_bernoulli(double eps);

// Source exponent for sub-Gaussian sources: eps^2 / (2 sigma^2).
double e_src_gaussian(double eps, double sigma2);

struct ZeroRateResult {
    double value = 0.0;                // possibly +infinity
    std::vector<double> input_dist;    // an attaining input distribution
};

// Zero-rate channel exponent: max over input distributions q of
// sum_{w,w'} q(w) q(w') d_B(w, w').  Closed form for 2-input channels;
// multi-start projected gradient ascent otherwise.
ZeroRateResult zero_rate_exponent(const ChannelModel& channel);

// The projected-gradient optimizer on an explicit distance matrix; used
// directly for channels with >= 3 inputs and exposed for verification.
// extra_random_starts > 0 adds that many random simplex starts from rng.
ZeroRateResult zero_rate_optimize(const std::vector<double>& db_matrix,
                                  std::size_t num_inputs,
                                  int extra_random_starts = 0,
                                  Rng* rng = nullptr);

// Ratio c_M between the M-message BSC exponent and the zero-rate exponent.
double c_m_bsc(std::uint64_t m);

// Number of messages M = ceil(1/(2 eps)), with a tolerance so values that
// are integers up to rounding noise are not bumped upward.
std::uint64_t message_count(double eps);

// M-message channel exponent.  Exact only for BSCs (via c_M); for other
// channels the value is the c = 1 lower bracket and exact is false.
struct ChannelExponentM {
    double value = 0.0;
    bool exact = false;
};
ChannelExponentM channel_exponent_m(const ChannelModel& channel, std::uint64_t m);

// Headline achievable/converse exponents for the Bernoulli + BSC setting.
double achievable_bernoulli(double eps, double p);
double instance_bernoulli(double theta_star, double eps, double p);
double converse_bernoulli(double eps, double p);

// Sub-Gaussian setting over a general DMC.
double achievable_subg(double eps, double sigma2, const ChannelModel& channel);
struct ConverseResult {
    double value = 0.0;
    bool cm_exact = false; // false: c_M unavailable, value uses the c = 1 bracket
};
ConverseResult converse_gaussian(double eps, double sigma2, const ChannelModel& channel);

using SourceExponentFn = std::function<double(double eps)>;

// One-shot estimate-and-forward exponent:
// min((1-lambda) E^src_{(1-delta) eps}, lambda E^chan_{ceil(1/(2 delta eps))}).
double oneshot_exponent(double eps, double lambda, double delta,
                        const SourceExponentFn& e_src, const ChannelModel& channel);

// The lambda that equates the two terms of the one-shot exponent.
double oneshot_equalizing_lambda(double eps, double delta,
                                 const SourceExponentFn& e_src,
                                 const ChannelModel& channel);

struct NoncausalExponents {
    double achievable = 0.0;
    double converse = 0.0;
};
NoncausalExponents noncausal_exponents(double eps, double delta,
                                       const SourceExponentFn& e_src,
                                       const ChannelModel& channel);

// Simple forwarding over a BSC: E^src_{(1-2p) eps}.
double simple_forwarding_exponent(double eps, double p);

// Best one-shot exponent over (lambda, delta), using the equalizing lambda
// and scanning the per-message-count candidate deltas.
struct OptimizedOneshot {
    double value = 0.0;
    double lambda = 0.0;
    double delta = 0.0;
};
OptimizedOneshot optimize_oneshot(double eps, const SourceExponentFn& e_src,
                                  const ChannelModel& channel);

// Best non-causal achievable exponent over delta.
struct OptimizedNoncausal {
    double value = 0.0;
    double delta = 0.0;
};
OptimizedNoncausal optimize_noncausal(double eps, const SourceExponentFn& e_src,
                                      const ChannelModel& channel);

// Named analytic exponents for one (source, channel, eps) instance.
struct ExponentReport {
    double e_src = 0.0;
    double e_chan_zero = 0.0;
    double c_m = 0.0;
    bool c_m_exact = false;
    double e_achievable = 0.0;
    double e_converse = 0.0;
    double e_simple_forwarding = 0.0;     // NaN when not applicable
    double e_oneshot = 0.0;
    double oneshot_lambda = 0.0;
    double oneshot_delta = 0.0;
    double e_noncausal_ach = 0.0;
    std::uint64_t message_count_m = 0;

    std::string to_json() const;
};

} // namespace relaymean
