#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relaymean/baselines.hpp"
#include "relaymean/channel.hpp"
#include "relaymean/exponents.hpp"
#include "relaymean/protocol.hpp"

namespace relaymean {

// A reproducible Monte Carlo experiment: one strategy, one (source, channel,
// eps) instance, a list of n values, and a trial budget per n.
struct ExperimentSpec {
    std::string strategy; // main | simple_forwarding | oneshot | noncausal | direct
    SourceModel source;
    ChannelModel channel;
    double eps = 0.1;
    std::vector<long> n_values;
    long trials = 1;
    std::uint64_t master_seed = 0;

    // Strategy parameters.
    double lambda = 0.0; // 0: use the equalizing lambda
    double delta = 0.5;
    std::string k_rule = "sqrt"; // k = ceil(sqrt(n)), or "fixed:<K>"
    double grid_override = 0.0;  // 0: defaults (see resolve_grid_override)
    BaseEstimator base_estimator = BaseEstimator::sample_mean;
    int mom_groups = 1;
    double quant_step = 0.0;
    double codebook_min_fraction = 0.4;
    double codebook_slack = 0.2;

    ExperimentSpec(SourceModel src, ChannelModel ch)
        : source(std::move(src)), channel(std::move(ch)) {}

    int resolve_k(long n) const;
    // Desk-scale default for the sub-Gaussian decoder grid; the Bernoulli
    // variant keeps its 1/(2n) default.
    double resolve_grid_override(long n) const;
    void validate() const;

    static ExperimentSpec from_json(const std::string& text);
    std::string to_json() const;
};

struct ResultRow {
    long n = 0;
    long misses = 0;
    long trials = 0;
    double p_hat = 0.0;
    double wilson_lo = 0.0;
    double wilson_hi = 0.0;
    long fallback_count = 0;
    long effective_n = 0;
};

struct FitResult {
    bool ok = false;
    double slope = 0.0;
    double stderr_slope = 0.0;
    std::vector<long> excluded_n; // zero-miss rows left out of the regression
};

struct ResultTable {
    std::vector<ResultRow> rows;
    FitResult fit;
    std::string metadata_json;
};

// Wilson 95% score interval for a binomial proportion.
std::pair<double, double> wilson_interval(long misses, long trials);

// Runs `trials` independent executions at sample budget n; trial seeds are
// derived from (master seed, strategy, n, trial index).  threads = 0 uses
// the hardware concurrency; results do not depend on the thread count.
ResultRow estimate_error_prob(const ExperimentSpec& spec, long n, int threads = 0);

// Least-squares slope of -log p_hat against n; zero-miss rows are excluded
// and reported.  Throws when fewer than two usable rows remain.
FitResult fit_exponent(const std::vector<ResultRow>& rows);

ResultTable run_experiment(const ExperimentSpec& spec, int threads = 0);

std::string result_table_to_csv(const ResultTable& table);
std::string result_table_to_json(const ResultTable& table);

// Analytic exponent sweeps matching the comparison figures.
struct SweepTable {
    std::string var_name; // "eps" or "p"
    double fixed_value = 0.0;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

SweepTable sweep_eps(double p, const std::vector<double>& eps_grid);
SweepTable sweep_p(double eps, const std::vector<double>& p_grid);
std::string sweep_to_csv(const SweepTable& table);

// Deterministic SVG line chart of a sweep table; identical input gives
// byte-identical output.
std::string emit_svg(const SweepTable& table, const std::string& title);

// Named analytic exponents for one (source, channel, eps) instance.
ExponentReport make_exponent_report(const SourceModel& source,
                                    const ChannelModel& channel, double eps);

// Uniformly spaced grid of `points` values across (lo, hi), endpoints inset
// by half a step.
std::vector<double> open_interval_grid(double lo, double hi, int points);

} // namespace relaymean
