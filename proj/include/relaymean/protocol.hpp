#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "relaymean/channel.hpp"
#include "relaymean/codebook.hpp"
#include "relaymean/rng.hpp"

namespace relaymean {

enum class SourceKind { bernoulli, gaussian, discrete_heavy_tailed, custom_bounded };

// A sampleable source with known mean.
struct SourceModel {
    SourceKind kind = SourceKind::bernoulli;
    double theta_star = 0.5;
    double sigma2 = 0.0;   // sub-Gaussian parameter, when applicable
    double variance = 0.0; // computed for discrete kinds
    double clip_c = 1.0;   // mean-range half-width C >= 1 (non-Bernoulli kinds)
    std::vector<std::pair<double, double>> atoms; // discrete kinds: (value, prob)

    static SourceModel make_bernoulli(double theta);
    static SourceModel make_gaussian(double theta, double sigma2, double clip_c = 1.0);
    static SourceModel make_discrete(SourceKind kind,
                                     std::vector<std::pair<double, double>> atoms,
                                     double clip_c = 1.0);

    double sample(Rng& rng) const;
    // Decoder grid range: [0,1] for Bernoulli, [-C, C] otherwise.
    std::pair<double, double> mean_range() const;
    void validate() const;

    static SourceModel from_json(const std::string& text);
    std::string to_json() const;
};

enum class BaseEstimator { sample_mean, median_of_means };
enum class ProtocolVariant { bernoulli, subg };

struct ProtocolConfig {
    long n = 0;            // total samples / channel uses
    int k = 0;             // block length
    double eps = 0.0;      // accuracy in (0, 1/2)
    double grid_step = 0.0;     // 0 = default: 1/(2n) Bernoulli, 1/n^2 sub-Gaussian
    double quant_step = 0.0;    // 0 = default 1/k (sub-Gaussian teacher)
    BaseEstimator base_estimator = BaseEstimator::sample_mean;
    int mom_groups = 1;
    const Codebook* codebook = nullptr;
    double grid_override = 0.0; // optional coarser grid for desk-scale runs

    double resolved_grid_step(ProtocolVariant variant) const;
    double resolved_quant_step() const;
    void validate(ProtocolVariant variant) const;
};

// ---- teacher side -------------------------------------------------------

// Number of ones in a block of binary samples.
int teacher_block_bernoulli(const std::vector<int>& block);

struct RoundBranches {
    double lo = 0.0;
    double hi = 0.0;
    double p_hi = 0.0; // probability of rounding up
};
// Deterministic part of stochastic rounding; E[outcome] = x by construction.
RoundBranches stochastic_round_branches(double x, double step);
// Randomized rounding of x to the step grid; conditional mean equals x.
double stochastic_round(double x, double step, Rng& rng);
// Same, returning the grid index (value = index * step).
std::int64_t stochastic_round_int(double x, double step, Rng& rng);

// Partition into `groups` nearly equal contiguous groups, mean each, return
// the lower median of the group means.
double median_of_means(const std::vector<double>& block, int groups);

// Exact bookkeeping of the sub-Gaussian teacher's index space: attainable
// estimator outputs are integer multiples of unit() = quant_step / denom,
// clipped to +-clip_int units (the clip bound C + k snapped outward to the
// unit grid).  Index <-> value mapping is collision-free.
struct SubgIndexMap {
    double quant_step = 0.0;
    std::int64_t denom = 1;    // k for the sample mean, lcm of group sizes for MoM
    std::int64_t clip_int = 0; // clip bound in units
    int k = 0;

    std::size_t size() const { return static_cast<std::size_t>(2 * clip_int + 1); }
    double unit() const { return quant_step / static_cast<double>(denom); }
    double value(std::size_t index) const {
        return static_cast<double>(static_cast<std::int64_t>(index) - clip_int) * unit();
    }
};
SubgIndexMap make_subg_index_map(int k, double quant_step, double clip_c,
                                 BaseEstimator estimator, int mom_groups);

// Stochastically quantizes the block, applies the base estimator, clips, and
// returns the index of the resulting value.
std::size_t teacher_block_subg(const std::vector<double>& block,
                               const SubgIndexMap& map, BaseEstimator estimator,
                               int mom_groups, Rng& rng);

// ---- student side -------------------------------------------------------

// log f(theta, Z) = log sum_alpha sqrt(P(alpha|theta) P(Z|W_alpha)) for the
// Bernoulli variant (binomial P(alpha|theta), codeword W_alpha per count).
double log_f_bernoulli(double theta, const Word& received, const Codebook& codebook,
                       const ChannelModel& channel);

// log f(theta, Z) = log sum_alpha exp(-k (theta - a_alpha)^2 / (4 sigma^2))
// * P(Z|W_alpha) over the whole index space.
double log_f_subg(double theta, const Word& received, const Codebook& codebook,
                  const ChannelModel& channel, double sigma2, const SubgIndexMap& map);

struct DecoderState {
    std::vector<double> grid;   // T
    std::vector<double> scores; // accumulated L(theta)
    double exclusion_radius = 0.0; // 2 eps - slack, slack = 2 * grid step
    std::vector<char> survivor_mask; // membership of each grid point in S
    long s_lo = -1, s_hi = -1;  // index range spanned by the survivor set
    bool fallback_used = false;
    double theta_hat = 0.0;

    bool survivors_empty() const { return s_lo < 0; }
};

// Survivor-set extraction shared by the production decoder and the oracle:
// S = { i : L[i] > max over j with |grid[j] - grid[i]| >= radius of L[j] },
// computed with prefix/suffix running maxima in O(|T|).  theta_hat is the
// midpoint of S, or argmax L with fallback_used when S is empty.
void compute_survivors(DecoderState& state);

// Full decode of a sequence of received blocks (the ignored first block is
// not among them).
DecoderState decode(const std::vector<Word>& blocks, const ChannelModel& channel,
                    const ProtocolConfig& config, ProtocolVariant variant,
                    const SourceModel& source);

struct BlockRecord {
    long index = 0;          // block position within the transmission
    long alpha = 0;          // block summary (count or index-space index)
    long codeword_index = 0; // codeword actually sent
};

struct Transcript {
    std::vector<BlockRecord> blocks;
    bool fallback_used = false;
    long effective_n = 0; // samples actually encoded by the teacher
    long usable_blocks = 0;
    double theta_hat = 0.0;

    std::string to_jsonl() const;
};

// Reusable per-configuration protocol state; run() is safe to call from
// multiple threads with distinct rngs.
class ProtocolRunner {
public:
    ProtocolRunner(const SourceModel& source, const ChannelModel& channel,
                   const ProtocolConfig& config);
    ~ProtocolRunner();
    ProtocolRunner(ProtocolRunner&&) noexcept;

    Transcript run(Rng& rng) const;
    ProtocolVariant variant() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// One-shot convenience wrapper around ProtocolRunner.
Transcript run_protocol(const SourceModel& source, const ChannelModel& channel,
                        const ProtocolConfig& config, Rng& rng);

namespace detail {
// Uniform grid from lo to hi with the given step; hi is appended when the
// last multiple falls short by more than a sliver.
std::vector<double> make_grid(double lo, double hi, double step);
double log_choose(int k, int a);
} // namespace detail

} // namespace relaymean
