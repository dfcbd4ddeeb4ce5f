#include "relaymean/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace relaymean {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

EstimateResult midpoint_decode(std::vector<double> grid, std::vector<double> scores,
                               double eps, double step) {
    DecoderState st;
    st.grid = std::move(grid);
    st.scores = std::move(scores);
    st.exclusion_radius = 2.0 * eps - 2.0 * step;
    compute_survivors(st);
    return {st.theta_hat, st.fallback_used};
}

// Symmetric 2x2 channels including the identity; crossover may be 0.
double bsc_like_crossover(const ChannelModel& ch) {
    if (ch.input_size() != 2 || ch.output_size() != 2)
        throw std::invalid_argument("simple forwarding: binary channel required");
    const double p = ch.prob(0, 1);
    if (std::abs(ch.prob(1, 0) - p) > 1e-12 || p >= 0.5)
        throw std::invalid_argument("simple forwarding: symmetric crossover < 1/2 required");
    return p;
}

} // namespace

EstimateResult direct_estimator_bernoulli(const std::vector<int>& samples, double eps,
                                          double grid_step) {
    if (samples.empty()) throw std::invalid_argument("direct_estimator: no samples");
    if (!(eps > 0.0 && eps < 0.5))
        throw std::invalid_argument("direct_estimator: eps must lie in (0, 1/2)");
    const auto n = static_cast<double>(samples.size());
    long count = 0;
    for (int v : samples) {
        if (v != 0 && v != 1)
            throw std::invalid_argument("direct_estimator: non-binary sample");
        count += v;
    }
    const double step = grid_step > 0.0 ? grid_step : 1.0 / (2.0 * n);
    if (!(step < eps)) throw std::invalid_argument("direct_estimator: grid too coarse");
    auto grid = detail::make_grid(0.0, 1.0, step);
    std::vector<double> scores(grid.size());
    const double s = static_cast<double>(count);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double th = grid[i];
        double L;
        if (th <= 0.0)
            L = count == 0 ? 0.0 : -kInf;
        else if (th >= 1.0)
            L = count == static_cast<long>(samples.size()) ? 0.0 : -kInf;
        else
            L = s * std::log(th) + (n - s) * std::log1p(-th);
        scores[i] = L;
    }
    return midpoint_decode(std::move(grid), std::move(scores), eps, step);
}

EstimateResult direct_estimator_subg(const std::vector<double>& samples, double eps,
                                     double sigma2, double range_lo, double range_hi,
                                     double grid_step) {
    if (samples.empty()) throw std::invalid_argument("direct_estimator: no samples");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("direct_estimator: sigma2 > 0");
    const auto n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= n;
    const double step =
        grid_step > 0.0 ? grid_step : std::max(1.0 / (n * n), eps / 50.0);
    if (!(step < eps)) throw std::invalid_argument("direct_estimator: grid too coarse");
    auto grid = detail::make_grid(range_lo, range_hi, step);
    std::vector<double> scores(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = grid[i] - mean;
        scores[i] = -n * d * d / (2.0 * sigma2);
    }
    return midpoint_decode(std::move(grid), std::move(scores), eps, step);
}

EstimateResult direct_estimator(const SourceModel& source,
                                const std::vector<double>& samples, double eps,
                                double grid_step, int mom_groups) {
    switch (source.kind) {
        case SourceKind::bernoulli: {
            std::vector<int> bits(samples.size());
            for (std::size_t i = 0; i < samples.size(); ++i)
                bits[i] = samples[i] > 0.5 ? 1 : 0;
            return direct_estimator_bernoulli(bits, eps, grid_step);
        }
        case SourceKind::gaussian:
        case SourceKind::custom_bounded: {
            const auto [lo, hi] = source.mean_range();
            return direct_estimator_subg(samples, eps, source.sigma2, lo, hi, grid_step);
        }
        case SourceKind::discrete_heavy_tailed: {
            // Median-of-means point estimate; groups default to 8.
            const int g = mom_groups > 0
                              ? mom_groups
                              : static_cast<int>(std::min<std::size_t>(8, samples.size()));
            const auto [lo, hi] = source.mean_range();
            const double v = std::clamp(median_of_means(samples, g), lo, hi);
            return {v, false};
        }
    }
    throw std::logic_error("direct_estimator: unreachable");
}

std::size_t ml_decode(const Codebook& codebook, const ChannelModel& channel,
                      const Word& received) {
    if (codebook.codewords.empty())
        throw std::invalid_argument("ml_decode: empty codebook");
    std::size_t best = 0;
    double best_ll = word_log_likelihood(channel, codebook.codewords[0], received);
    for (std::size_t i = 1; i < codebook.size(); ++i) {
        const double ll = word_log_likelihood(channel, codebook.codewords[i], received);
        if (ll > best_ll) {
            best = i;
            best_ll = ll;
        }
    }
    return best;
}

QuantizerGrid quantizer_grid(double delta_eps, double lo, double hi) {
    if (!(delta_eps > 0.0)) throw std::invalid_argument("quantizer_grid: delta_eps > 0");
    if (!(hi > lo)) throw std::invalid_argument("quantizer_grid: empty range");
    QuantizerGrid q;
    q.step = 2.0 * delta_eps;
    for (long i = 0;; ++i) {
        const double v = lo + (2.0 * static_cast<double>(i) + 1.0) * delta_eps;
        if (v > hi + 1e-12) break;
        q.points.push_back(std::min(v, hi));
    }
    if (q.points.empty() || hi - q.points.back() > delta_eps + 1e-12)
        q.points.push_back(hi);
    return q;
}

EstimateResult run_simple_forwarding(const SourceModel& source,
                                     const ChannelModel& channel, long n, double eps,
                                     Rng& rng) {
    if (source.kind != SourceKind::bernoulli)
        throw std::invalid_argument("simple forwarding: Bernoulli source required");
    const double p = bsc_like_crossover(channel);
    if (n < 2) throw std::invalid_argument("simple forwarding: n too small");

    std::vector<Symbol> inputs(static_cast<std::size_t>(n));
    inputs[0] = 0; // no sample observed yet at time 1
    for (long i = 1; i < n; ++i)
        inputs[static_cast<std::size_t>(i)] = rng.bernoulli(source.theta_star) ? 1 : 0;
    const Word sent{std::move(inputs)};
    const Word z = transmit(channel, sent, rng);

    std::vector<int> observed;
    observed.reserve(static_cast<std::size_t>(n - 1));
    for (long i = 1; i < n; ++i)
        observed.push_back(static_cast<int>(z.symbols[static_cast<std::size_t>(i)]));

    const double inner_eps = (1.0 - 2.0 * p) * eps;
    auto est = direct_estimator_bernoulli(observed, inner_eps);
    const double theta = std::clamp((est.theta_hat - p) / (1.0 - 2.0 * p), 0.0, 1.0);
    return {theta, est.fallback_used};
}

namespace {

BaselineRun estimate_and_forward(const SourceModel& source, const ChannelModel& channel,
                                 long n_samples, long n_uses, double eps, double delta,
                                 bool noncausal, Rng& rng) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("estimate-and-forward: delta must lie in (0,1)");
    if (n_samples < 1 || n_uses < 1)
        throw std::invalid_argument("estimate-and-forward: empty stage budget");

    const auto [lo, hi] = source.mean_range();
    const auto grid = quantizer_grid(delta * eps, lo, hi);
    const std::size_t m = grid.points.size();
    if (static_cast<double>(m) >
        std::pow(2.0, static_cast<double>(std::min<long>(n_uses, 62))))
        throw std::invalid_argument("estimate-and-forward: codebook cannot fit the grid");

    // Codebook agreed ahead of time (drawn first from the shared stream).
    Codebook cb;
    if (channel.input_size() == 2) {
        cb = generate_binary(static_cast<std::size_t>(n_uses), m, 0.4, rng);
    } else {
        cb = generate_dmc(static_cast<std::size_t>(n_uses), m, channel, rng, 0.2);
    }

    std::vector<double> samples(static_cast<std::size_t>(n_samples));
    for (auto& x : samples) x = source.sample(rng);
    const auto est = direct_estimator(source, samples, (1.0 - delta) * eps);

    // Nearest quantizer point, lower on ties.
    std::size_t qi = 0;
    double best = std::abs(grid.points[0] - est.theta_hat);
    for (std::size_t i = 1; i < m; ++i) {
        const double d = std::abs(grid.points[i] - est.theta_hat);
        if (d < best) {
            best = d;
            qi = i;
        }
    }

    const Word z = transmit(channel, cb.codewords[qi], rng);
    const std::size_t decoded = ml_decode(cb, channel, z);
    return {grid.points[decoded], decoded, noncausal};
}

} // namespace

BaselineRun run_oneshot(const SourceModel& source, const ChannelModel& channel, long n,
                        double eps, double lambda, double delta, Rng& rng) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("run_oneshot: lambda must lie in (0,1)");
    const long uses = std::max<long>(1, static_cast<long>(std::llround(lambda * n)));
    const long samples = n - uses;
    return estimate_and_forward(source, channel, samples, uses, eps, delta, false, rng);
}

BaselineRun run_noncausal(const SourceModel& source, const ChannelModel& channel,
                          long n, double eps, double delta, Rng& rng) {
    return estimate_and_forward(source, channel, n, n, eps, delta, true, rng);
}

} // namespace relaymean
