#include "relaymean/simharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>


namespace relaymean {

namespace {

constexpr double kZ95 = 1.959963984540054;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt12(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

SourceExponentFn source_exponent_fn(const SourceModel& source) {
    switch (source.kind) {
        case SourceKind::bernoulli:
            return [](double e) { return e_src_bernoulli(e); };
        case SourceKind::gaussian:
        case SourceKind::custom_bounded: {
            const double s2 = source.sigma2;
            return [s2](double e) { return e_src_gaussian(e, s2); };
        }
        case SourceKind::discrete_heavy_tailed: {
            const double s2 = 32.0 * source.variance;
            return [s2](double e) { return e_src_gaussian(e, s2); };
        }
    }
    throw std::logic_error("source_exponent_fn: unreachable");
}

// Splits [0, total) into chunks and reduces integer counts; the reduction is
// associative so the thread count never changes results.
template <typename Body>
void parallel_trials(long total, int threads, Body&& body) {
    if (threads <= 0) {
        const auto hw = std::thread::hardware_concurrency();
        threads = hw > 0 ? static_cast<int>(hw) : 1;
    }
    threads = static_cast<int>(std::min<long>(threads, std::max<long>(total, 1)));
    if (threads <= 1) {
        body(0, total);
        return;
    }
    std::vector<std::thread> pool;
    const long chunk = (total + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const long lo = t * chunk;
        const long hi = std::min(total, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] { body(lo, hi); });
    }
    for (auto& th : pool) th.join();
}

} // namespace

int ExperimentSpec::resolve_k(long n) const {
    if (k_rule == "sqrt")
        return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    if (k_rule.rfind("fixed:", 0) == 0) {
        const int k = std::stoi(k_rule.substr(6));
        if (k < 2) throw std::invalid_argument("k_rule: fixed block length must be >= 2");
        return k;
    }
    throw std::invalid_argument("k_rule: expected 'sqrt' or 'fixed:<K>'");
}

double ExperimentSpec::resolve_grid_override(long n) const {
    if (grid_override > 0.0) return grid_override;
    if (source.kind == SourceKind::bernoulli) return 0.0; // 1/(2n) default
    const double nn = static_cast<double>(n);
    return std::max(1.0 / (nn * nn), eps / 50.0);
}

void ExperimentSpec::validate() const {
    static const char* known[] = {"main", "simple_forwarding", "oneshot", "noncausal",
                                  "direct"};
    if (std::find(std::begin(known), std::end(known), strategy) == std::end(known))
        throw std::invalid_argument("experiment: unknown strategy '" + strategy + "'");
    if (!(eps > 0.0 && eps < 0.5))
        throw std::invalid_argument("experiment: eps must lie in (0, 1/2)");
    if (n_values.empty()) throw std::invalid_argument("experiment: n_values required");
    for (std::size_t i = 1; i < n_values.size(); ++i)
        if (n_values[i] <= n_values[i - 1])
            throw std::invalid_argument("experiment: n_values must be strictly increasing");
    if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
    if (lambda < 0.0 || lambda >= 1.0)
        throw std::invalid_argument("experiment: lambda must lie in [0, 1)");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("experiment: delta must lie in (0, 1)");
    source.validate();
}

ExperimentSpec ExperimentSpec::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ExperimentSpec spec(SourceModel::from_json(j.at("source").dump()),
                        ChannelModel::from_json(j.at("channel").dump()));
    spec.strategy = j.at("strategy").get<std::string>();
    spec.eps = j.at("eps").get<double>();
    spec.n_values = j.at("n_values").get<std::vector<long>>();
    spec.trials = j.at("trials").get<long>();
    spec.master_seed = j.at("master_seed").get<std::uint64_t>();
    spec.lambda = j.value("lambda", 0.0);
    spec.delta = j.value("delta", 0.5);
    spec.k_rule = j.value("k_rule", std::string("sqrt"));
    spec.grid_override = j.value("grid_override", 0.0);
    spec.mom_groups = j.value("mom_groups", 1);
    spec.base_estimator = j.value("base_estimator", std::string("sample_mean")) ==
                                  "median_of_means"
                              ? BaseEstimator::median_of_means
                              : BaseEstimator::sample_mean;
    spec.quant_step = j.value("quant_step", 0.0);
    spec.codebook_min_fraction = j.value("codebook_min_fraction", 0.4);
    spec.codebook_slack = j.value("codebook_slack", 0.2);
    spec.validate();
    return spec;
}

std::string ExperimentSpec::to_json() const {
    nlohmann::json j;
    j["strategy"] = strategy;
    j["source"] = nlohmann::json::parse(source.to_json());
    j["channel"] = nlohmann::json::parse(channel.to_json());
    j["eps"] = eps;
    j["n_values"] = n_values;
    j["trials"] = trials;
    j["master_seed"] = master_seed;
    j["lambda"] = lambda;
    j["delta"] = delta;
    j["k_rule"] = k_rule;
    j["grid_override"] = grid_override;
    j["base_estimator"] = base_estimator == BaseEstimator::median_of_means
                              ? "median_of_means"
                              : "sample_mean";
    j["mom_groups"] = mom_groups;
    j["quant_step"] = quant_step;
    j["codebook_min_fraction"] = codebook_min_fraction;
    j["codebook_slack"] = codebook_slack;
    return j.dump();
}

std::pair<double, double> wilson_interval(long misses, long trials) {
    if (trials < 1) throw std::invalid_argument("wilson_interval: trials must be >= 1");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(misses) / n;
    const double z2 = kZ95 * kZ95;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half =
        kZ95 * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    const double lo = misses == 0 ? 0.0 : std::max(0.0, center - half);
    const double hi = misses == trials ? 1.0 : std::min(1.0, center + half);
    return {lo, hi};
}

ResultRow estimate_error_prob(const ExperimentSpec& spec, long n, int threads) {
    spec.validate();
    ResultRow row;
    row.n = n;
    row.trials = spec.trials;
    row.effective_n = n;

    std::atomic<long> misses{0};
    std::atomic<long> fallbacks{0};
    const double eps = spec.eps;
    const double theta = spec.source.theta_star;

    if (spec.strategy == "main") {
        const int k = spec.resolve_k(n);
        ProtocolConfig cfg;
        cfg.n = n;
        cfg.k = k;
        cfg.eps = eps;
        cfg.grid_override = spec.resolve_grid_override(n);
        cfg.base_estimator = spec.base_estimator;
        cfg.mom_groups = spec.mom_groups;
        cfg.quant_step = spec.quant_step;

        Codebook cb;
        Rng cbr(derive_seed(spec.master_seed, "codebook", static_cast<std::uint64_t>(n), 0));
        if (spec.source.kind == SourceKind::bernoulli) {
            cb = generate_binary(static_cast<std::size_t>(k),
                                 static_cast<std::size_t>(k) + 1,
                                 spec.codebook_min_fraction, cbr);
        } else {
            const auto map =
                make_subg_index_map(k, cfg.resolved_quant_step(), spec.source.clip_c,
                                    cfg.base_estimator, cfg.mom_groups);
            cb = generate_dmc(static_cast<std::size_t>(k), map.size(), spec.channel, cbr,
                              spec.codebook_slack);
        }
        cfg.codebook = &cb;
        ProtocolRunner runner(spec.source, spec.channel, cfg);
        row.effective_n = (n / k - 1) * static_cast<long>(k);
        parallel_trials(spec.trials, threads, [&](long lo, long hi) {
            long m = 0, f = 0;
            for (long t = lo; t < hi; ++t) {
                Rng rng(derive_seed(spec.master_seed, spec.strategy,
                                    static_cast<std::uint64_t>(n),
                                    static_cast<std::uint64_t>(t)));
                const auto tr = runner.run(rng);
                if (std::abs(tr.theta_hat - theta) > eps) ++m;
                if (tr.fallback_used) ++f;
            }
            misses += m;
            fallbacks += f;
        });
    } else {
        // Per-trial lambdas resolved once.
        double lambda = spec.lambda;
        if (spec.strategy == "oneshot" && lambda == 0.0) {
            lambda = oneshot_equalizing_lambda(eps, spec.delta,
                                               source_exponent_fn(spec.source),
                                               spec.channel);
            if (!(lambda > 0.0 && lambda < 1.0)) lambda = 0.5;
        }
        parallel_trials(spec.trials, threads, [&](long lo, long hi) {
            long m = 0, f = 0;
            for (long t = lo; t < hi; ++t) {
                Rng rng(derive_seed(spec.master_seed, spec.strategy,
                                    static_cast<std::uint64_t>(n),
                                    static_cast<std::uint64_t>(t)));
                double theta_hat = 0.0;
                bool fallback = false;
                if (spec.strategy == "direct") {
                    std::vector<double> xs(static_cast<std::size_t>(n));
                    for (auto& x : xs) x = spec.source.sample(rng);
                    const auto r = direct_estimator(spec.source, xs, eps,
                                                    spec.grid_override, spec.mom_groups);
                    theta_hat = r.theta_hat;
                    fallback = r.fallback_used;
                } else if (spec.strategy == "simple_forwarding") {
                    const auto r =
                        run_simple_forwarding(spec.source, spec.channel, n, eps, rng);
                    theta_hat = r.theta_hat;
                    fallback = r.fallback_used;
                } else if (spec.strategy == "oneshot") {
                    theta_hat = run_oneshot(spec.source, spec.channel, n, eps, lambda,
                                            spec.delta, rng)
                                    .theta_hat;
                } else { // noncausal
                    theta_hat =
                        run_noncausal(spec.source, spec.channel, n, eps, spec.delta, rng)
                            .theta_hat;
                }
                if (std::abs(theta_hat - theta) > eps) ++m;
                if (fallback) ++f;
            }
            misses += m;
            fallbacks += f;
        });
    }

    row.misses = misses.load();
    row.fallback_count = fallbacks.load();
    row.p_hat = static_cast<double>(row.misses) / static_cast<double>(row.trials);
    std::tie(row.wilson_lo, row.wilson_hi) = wilson_interval(row.misses, row.trials);
    return row;
}

FitResult fit_exponent(const std::vector<ResultRow>& rows) {
    FitResult fit;
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
        if (r.misses == 0) {
            fit.excluded_n.push_back(r.n);
            continue;
        }
        xs.push_back(static_cast<double>(r.n));
        ys.push_back(-std::log(r.p_hat));
    }
    if (xs.size() < 2)
        throw std::invalid_argument("fit_exponent: fewer than 2 usable rows");
    const auto m = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("fit_exponent: degenerate n values");
    fit.slope = sxy / sxx;
    double ss_res = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double pred = my + fit.slope * (xs[i] - mx);
        ss_res += (ys[i] - pred) * (ys[i] - pred);
    }
    const double dof = std::max(m - 2.0, 1.0);
    fit.stderr_slope = std::sqrt(ss_res / dof / sxx);
    fit.ok = true;
    return fit;
}

ResultTable run_experiment(const ExperimentSpec& spec, int threads) {
    spec.validate();
    ResultTable table;
    for (long n : spec.n_values) table.rows.push_back(estimate_error_prob(spec, n, threads));
    try {
        table.fit = fit_exponent(table.rows);
    } catch (const std::invalid_argument&) {
        table.fit.ok = false;
        for (const auto& r : table.rows)
            if (r.misses == 0) table.fit.excluded_n.push_back(r.n);
    }
    nlohmann::json meta;
    meta["spec"] = nlohmann::json::parse(spec.to_json());
    meta["hypothetical"] = spec.strategy == "noncausal";
    meta["delta_optimizer"] =
        "per-message-count candidate deltas, equalizing lambda inside";
    table.metadata_json = meta.dump();
    return table;
}

std::string result_table_to_csv(const ResultTable& table) {
    std::ostringstream os;
    nlohmann::json meta = nlohmann::json::parse(table.metadata_json);
    os << "# strategy=" << meta["spec"]["strategy"].get<std::string>();
    if (meta["hypothetical"].get<bool>()) os << " (hypothetical non-causal setting)";
    os << "\n";
    os << "n,misses,trials,p_hat,wilson_lo,wilson_hi,fallback_count,effective_n\n";
    for (const auto& r : table.rows) {
        os << r.n << ',' << r.misses << ',' << r.trials << ',' << fmt12(r.p_hat) << ','
           << fmt12(r.wilson_lo) << ',' << fmt12(r.wilson_hi) << ',' << r.fallback_count
           << ',' << r.effective_n << '\n';
    }
    if (table.fit.ok) {
        os << "# fitted_exponent=" << fmt12(table.fit.slope)
           << " stderr=" << fmt12(table.fit.stderr_slope);
    } else {
        os << "# fitted_exponent=unavailable";
    }
    if (!table.fit.excluded_n.empty()) {
        os << " excluded_zero_miss_n=";
        for (std::size_t i = 0; i < table.fit.excluded_n.size(); ++i)
            os << (i ? ";" : "") << table.fit.excluded_n[i];
    }
    os << '\n';
    return os.str();
}

std::string result_table_to_json(const ResultTable& table) {
    nlohmann::json j;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : table.rows) {
        j["rows"].push_back({{"n", r.n},
                             {"misses", r.misses},
                             {"trials", r.trials},
                             {"p_hat", r.p_hat},
                             {"wilson_lo", r.wilson_lo},
                             {"wilson_hi", r.wilson_hi},
                             {"fallback_count", r.fallback_count},
                             {"effective_n", r.effective_n}});
    }
    j["fit"] = {{"ok", table.fit.ok},
                {"slope", table.fit.ok ? nlohmann::json(table.fit.slope) : nullptr},
                {"stderr", table.fit.ok ? nlohmann::json(table.fit.stderr_slope) : nullptr},
                {"excluded_zero_miss_n", table.fit.excluded_n}};
    j["metadata"] = nlohmann::json::parse(table.metadata_json);
    return j.dump(2);
}

namespace {

SweepTable sweep_impl(bool vary_eps, double fixed, const std::vector<double>& grid) {
    SweepTable t;
    t.var_name = vary_eps ? "eps" : "p";
    t.fixed_value = fixed;
    t.columns = {t.var_name,       "e_src",   "achievable", "converse",
                 "simple_forwarding", "oneshot", "noncausal_ach"};
    SourceExponentFn src_fn = [](double e) { return e_src_bernoulli(e); };
    for (double v : grid) {
        const double eps = vary_eps ? v : fixed;
        const double p = vary_eps ? fixed : v;
        auto channel = make_bsc(p);
        std::vector<double> row;
        row.push_back(v);
        row.push_back(e_src_bernoulli(eps));
        row.push_back(achievable_bernoulli(eps, p));
        row.push_back(converse_bernoulli(eps, p));
        row.push_back(simple_forwarding_exponent(eps, p));
        row.push_back(optimize_oneshot(eps, src_fn, channel).value);
        row.push_back(optimize_noncausal(eps, src_fn, channel).value);
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace

SweepTable sweep_eps(double p, const std::vector<double>& eps_grid) {
    for (double e : eps_grid)
        if (!(e > 0.0 && e < 0.5))
            throw std::invalid_argument("sweep_eps: eps grid outside (0, 1/2)");
    return sweep_impl(true, p, eps_grid);
}

SweepTable sweep_p(double eps, const std::vector<double>& p_grid) {
    for (double p : p_grid)
        if (!(p > 0.0 && p < 0.5))
            throw std::invalid_argument("sweep_p: p grid outside (0, 1/2)");
    return sweep_impl(false, eps, p_grid);
}

std::string sweep_to_csv(const SweepTable& table) {
    std::ostringstream os;
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        os << (c ? "," : "") << table.columns[c];
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << fmt12(row[c]);
        os << '\n';
    }
    return os.str();
}

ExponentReport make_exponent_report(const SourceModel& source,
                                    const ChannelModel& channel, double eps) {
    source.validate();
    ExponentReport r;
    const auto src_fn = source_exponent_fn(source);
    r.e_src = src_fn(eps);
    r.e_chan_zero = zero_rate_exponent(channel).value;
    r.message_count_m = message_count(eps);
    double p = 0.0;
    const bool bsc = channel.is_bsc(&p);
    r.c_m = bsc ? c_m_bsc(r.message_count_m) : 1.0;
    r.c_m_exact = bsc;
    r.e_achievable = std::min(r.e_src, r.e_chan_zero);
    r.e_converse = std::min(r.e_src, r.c_m * r.e_chan_zero);
    r.e_simple_forwarding = (source.kind == SourceKind::bernoulli && bsc)
                                ? simple_forwarding_exponent(eps, p)
                                : kNaN;
    const auto os = optimize_oneshot(eps, src_fn, channel);
    r.e_oneshot = os.value;
    r.oneshot_lambda = os.lambda;
    r.oneshot_delta = os.delta;
    r.e_noncausal_ach = optimize_noncausal(eps, src_fn, channel).value;
    return r;
}

std::vector<double> open_interval_grid(double lo, double hi, int points) {
    if (points < 1) throw std::invalid_argument("open_interval_grid: points >= 1");
    std::vector<double> g(points);
    const double step = (hi - lo) / points;
    for (int i = 0; i < points; ++i) g[i] = lo + (i + 0.5) * step;
    return g;
}

} // namespace relaymean
