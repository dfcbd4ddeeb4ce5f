#include "relaymean/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "relaymean/exponents.hpp"

namespace relaymean {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Kahan {
    double sum = 0.0, c = 0.0;
    void add(double v) {
        const double y = v - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

// Iterates all words of the given length over an alphabet.
struct WordOdometer {
    std::vector<Symbol> digits;
    std::size_t alphabet;
    bool done = false;

    WordOdometer(std::size_t len, std::size_t alphabet)
        : digits(len, 0), alphabet(alphabet) {}
    void next() {
        std::size_t pos = 0;
        while (pos < digits.size() && ++digits[pos] == alphabet) digits[pos++] = 0;
        if (pos == digits.size()) done = true;
    }
};

double binom_pmf(int k, int a, double theta) {
    if (theta <= 0.0) return a == 0 ? 1.0 : 0.0;
    if (theta >= 1.0) return a == k ? 1.0 : 0.0;
    return std::exp(detail::log_choose(k, a) + a * std::log(theta) +
                    (k - a) * std::log1p(-theta));
}

// P(Z | W) in the linear domain.
double word_likelihood(const ChannelModel& ch, const Word& w, const Word& z) {
    double p = 1.0;
    for (std::size_t i = 0; i < w.length(); ++i) p *= ch.prob(w.symbols[i], z.symbols[i]);
    return p;
}

// Pairwise Bhattacharyya coefficient sum over ordered distinct codeword pairs.
double cross_term_sum(const Codebook& cb, const ChannelModel& ch) {
    const std::size_t a = ch.input_size();
    std::vector<double> rho(a * a, 0.0);
    for (std::size_t w = 0; w < a; ++w)
        for (std::size_t v = 0; v < a; ++v) {
            double r = 0.0;
            for (std::size_t z = 0; z < ch.output_size(); ++z)
                r += std::sqrt(ch.prob(static_cast<Symbol>(w), static_cast<Symbol>(z)) *
                               ch.prob(static_cast<Symbol>(v), static_cast<Symbol>(z)));
            rho[w * a + v] = r;
        }
    Kahan acc;
    for (std::size_t i = 0; i < cb.size(); ++i)
        for (std::size_t j = 0; j < cb.size(); ++j) {
            if (i == j) continue;
            double r = 1.0;
            for (std::size_t s = 0; s < cb.k; ++s)
                r *= rho[cb.codewords[i].symbols[s] * a + cb.codewords[j].symbols[s]];
            acc.add(r);
        }
    return acc.sum;
}

void guard_enumeration(double size, const char* what) {
    if (size > 2e6) throw std::invalid_argument(std::string(what) + ": enumeration too large");
}

// Direct survivor-membership check from the definition.
bool is_survivor(const std::vector<double>& grid, const std::vector<double>& L,
                 double radius, std::size_t i) {
    for (std::size_t j = 0; j < grid.size(); ++j)
        if (std::abs(grid[j] - grid[i]) >= radius && !(L[i] > L[j])) return false;
    return true;
}

} // namespace

std::string OracleReport::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["exact"] = std::isfinite(exact) ? nlohmann::json(exact) : nlohmann::json("inf");
    j["bound"] = std::isfinite(bound) ? nlohmann::json(bound) : nlohmann::json("inf");
    j["satisfied"] = satisfied;
    j["parameters"] = nlohmann::json::parse(params_json.empty() ? "{}" : params_json);
    return j.dump();
}

OracleReport exact_ef_ratio_bernoulli(double theta_star, double theta_prime, int k,
                                      const Codebook& codebook,
                                      const ChannelModel& channel) {
    if (k < 1 || codebook.k != static_cast<std::size_t>(k))
        throw std::invalid_argument("exact_ef_ratio_bernoulli: k mismatch");
    if (codebook.size() < static_cast<std::size_t>(k) + 1)
        throw std::invalid_argument("exact_ef_ratio_bernoulli: need k+1 codewords");
    if (k > 12) throw std::invalid_argument("exact_ef_ratio_bernoulli: k too large");
    guard_enumeration(std::pow(static_cast<double>(channel.output_size()), k) * (k + 1),
                      "exact_ef_ratio_bernoulli");

    std::vector<double> pmf_star(k + 1), pmf_prime(k + 1);
    for (int a = 0; a <= k; ++a) {
        pmf_star[a] = binom_pmf(k, a, theta_star);
        pmf_prime[a] = binom_pmf(k, a, theta_prime);
    }

    Kahan exact;
    std::vector<double> like(k + 1);
    for (WordOdometer od(static_cast<std::size_t>(k), channel.output_size()); !od.done;
         od.next()) {
        const Word z{od.digits};
        double pz = 0.0;
        for (int a = 0; a <= k; ++a) {
            like[a] = word_likelihood(channel, codebook.codewords[a], z);
            pz += pmf_star[a] * like[a];
        }
        if (pz == 0.0) continue;
        double f_star = 0.0, f_prime = 0.0;
        for (int a = 0; a <= k; ++a) {
            f_star += std::sqrt(pmf_star[a] * like[a]);
            f_prime += std::sqrt(pmf_prime[a] * like[a]);
        }
        exact.add(pz * f_prime / f_star);
    }

    const double rho1 = std::sqrt(theta_star * theta_prime) +
                        std::sqrt((1.0 - theta_star) * (1.0 - theta_prime));
    const double diag = std::pow(rho1, k);
    const double bound = diag + cross_term_sum(codebook, channel);

    OracleReport r;
    r.name = "ef_ratio_bernoulli";
    r.exact = exact.sum;
    r.bound = bound;
    r.satisfied = exact.sum <= bound + 1e-12;
    nlohmann::json p{{"theta_star", theta_star},
                     {"theta_prime", theta_prime},
                     {"k", k},
                     {"diagonal_term", diag}};
    r.params_json = p.dump();
    return r;
}

OracleReport exact_ef_ratio_subg(double theta_star, double theta_prime,
                                 const Codebook& codebook, const ChannelModel& channel,
                                 double sigma2, const SourceModel& source,
                                 const SubgIndexMap& map, BaseEstimator estimator,
                                 int mom_groups) {
    const int k = map.k;
    if (codebook.k != static_cast<std::size_t>(k))
        throw std::invalid_argument("exact_ef_ratio_subg: k mismatch");
    if (codebook.size() < map.size())
        throw std::invalid_argument("exact_ef_ratio_subg: codebook smaller than index space");
    if (source.atoms.empty())
        throw std::invalid_argument("exact_ef_ratio_subg: finite discrete source required");
    if (static_cast<double>(map.size()) > 4.0 * k * k * k)
        throw std::invalid_argument("exact_ef_ratio_subg: index space exceeds 4k^3");
    for (const auto& [v, p] : source.atoms) {
        const double r = v / map.quant_step;
        if (std::abs(r - std::round(r)) > 1e-9)
            throw std::invalid_argument(
                "exact_ef_ratio_subg: source atoms must lie on the quantization grid");
    }
    guard_enumeration(std::pow(static_cast<double>(source.atoms.size()), k),
                      "exact_ef_ratio_subg");
    guard_enumeration(std::pow(static_cast<double>(channel.output_size()), k) *
                          static_cast<double>(map.size()),
                      "exact_ef_ratio_subg");

    // Exact source-induced distribution over the index space (the atoms sit
    // on the grid, so the teacher map is deterministic).
    const std::size_t space = map.size();
    std::vector<double> pmf_alpha(space, 0.0);
    {
        Rng dummy(0);
        std::vector<double> block(static_cast<std::size_t>(k));
        for (WordOdometer od(static_cast<std::size_t>(k), source.atoms.size()); !od.done;
             od.next()) {
            double w = 1.0;
            for (int i = 0; i < k; ++i) {
                block[static_cast<std::size_t>(i)] = source.atoms[od.digits[i]].first;
                w *= source.atoms[od.digits[i]].second;
            }
            const auto idx = teacher_block_subg(block, map, estimator, mom_groups, dummy);
            pmf_alpha[idx] += w;
        }
    }

    const double coef = static_cast<double>(k) / (4.0 * sigma2);
    std::vector<double> kern_star(space), kern_prime(space);
    for (std::size_t a = 0; a < space; ++a) {
        const double v = map.value(a);
        kern_star[a] = std::exp(-coef * (theta_star - v) * (theta_star - v));
        kern_prime[a] = std::exp(-coef * (theta_prime - v) * (theta_prime - v));
    }

    Kahan exact;
    std::vector<double> like(space);
    for (WordOdometer od(static_cast<std::size_t>(k), channel.output_size()); !od.done;
         od.next()) {
        const Word z{od.digits};
        double pz = 0.0;
        for (std::size_t a = 0; a < space; ++a) {
            like[a] = word_likelihood(channel, codebook.codewords[a], z);
            pz += pmf_alpha[a] * like[a];
        }
        if (pz == 0.0) continue;
        double f_star = 0.0, f_prime = 0.0;
        for (std::size_t a = 0; a < space; ++a) {
            f_star += kern_star[a] * like[a];
            f_prime += kern_prime[a] * like[a];
        }
        exact.add(pz * f_prime / f_star);
    }

    const double dd = theta_prime - theta_star;
    const double diag =
        4.0 * k * k * k * std::exp(-static_cast<double>(k) * dd * dd / (8.0 * sigma2));
    // Only codewords inside the index space participate in f.
    Codebook used = codebook;
    used.codewords.resize(space);
    const double bound = diag + cross_term_sum(used, channel);

    OracleReport r;
    r.name = "ef_ratio_subg";
    r.exact = exact.sum;
    r.bound = bound;
    r.satisfied = exact.sum <= bound + 1e-12;
    nlohmann::json p{{"theta_star", theta_star},
                     {"theta_prime", theta_prime},
                     {"k", k},
                     {"sigma2", sigma2},
                     {"index_space", space},
                     {"diagonal_term", diag}};
    r.params_json = p.dump();
    return r;
}

ExactErrorResult exact_error_probability(const SourceModel& source,
                                         const ChannelModel& channel,
                                         const ProtocolConfig& config) {
    const ProtocolVariant variant = source.kind == SourceKind::bernoulli
                                        ? ProtocolVariant::bernoulli
                                        : ProtocolVariant::subg;
    config.validate(variant);
    const int k = config.k;
    const long nb = config.n / k;
    const long blocks = nb - 1;
    const std::size_t n_z = [&] {
        const double raw = std::pow(static_cast<double>(channel.output_size()), k);
        guard_enumeration(raw, "exact_error_probability");
        return static_cast<std::size_t>(raw);
    }();
    if (std::pow(static_cast<double>(n_z), static_cast<double>(blocks)) > 1e7)
        throw std::invalid_argument("exact_error_probability: joint enumeration too large");

    const double step = config.resolved_grid_step(variant);
    const auto [lo, hi] = source.mean_range();
    const auto grid = detail::make_grid(lo, hi, step);
    const double radius = 2.0 * config.eps - 2.0 * step;

    // Per-block distribution of the block summary over codeword indices.
    std::vector<double> pmf_alpha;
    SubgIndexMap map;
    if (variant == ProtocolVariant::bernoulli) {
        pmf_alpha.resize(static_cast<std::size_t>(k) + 1);
        for (int a = 0; a <= k; ++a) pmf_alpha[a] = binom_pmf(k, a, source.theta_star);
    } else {
        if (source.atoms.empty())
            throw std::invalid_argument(
                "exact_error_probability: enumerable source required");
        map = make_subg_index_map(k, config.resolved_quant_step(), source.clip_c,
                                  config.base_estimator, config.mom_groups);
        pmf_alpha.assign(map.size(), 0.0);
        Rng dummy(0);
        std::vector<double> block(static_cast<std::size_t>(k));
        guard_enumeration(std::pow(static_cast<double>(source.atoms.size()), k),
                          "exact_error_probability");
        for (WordOdometer od(static_cast<std::size_t>(k), source.atoms.size()); !od.done;
             od.next()) {
            double w = 1.0;
            for (int i = 0; i < k; ++i) {
                const double r = source.atoms[od.digits[i]].first / map.quant_step;
                if (std::abs(r - std::round(r)) > 1e-9)
                    throw std::invalid_argument(
                        "exact_error_probability: atoms must lie on the quantization grid");
                block[static_cast<std::size_t>(i)] = source.atoms[od.digits[i]].first;
                w *= source.atoms[od.digits[i]].second;
            }
            pmf_alpha[teacher_block_subg(block, map, config.base_estimator,
                                         config.mom_groups, dummy)] += w;
        }
    }
    if (config.codebook->size() < pmf_alpha.size())
        throw std::invalid_argument("exact_error_probability: codebook too small");

    // Per-Z outcome weights and score rows; the decoder sees only Z.
    std::vector<double> weights;
    std::vector<std::vector<double>> rows;
    const double sig2 = source.kind == SourceKind::discrete_heavy_tailed
                            ? 32.0 * source.variance
                            : source.sigma2;
    for (WordOdometer od(static_cast<std::size_t>(k), channel.output_size()); !od.done;
         od.next()) {
        const Word z{od.digits};
        double pz = 0.0;
        for (std::size_t a = 0; a < pmf_alpha.size(); ++a)
            pz += pmf_alpha[a] * word_likelihood(channel, config.codebook->codewords[a], z);
        if (pz == 0.0) continue;
        std::vector<double> row(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            row[i] = variant == ProtocolVariant::bernoulli
                         ? log_f_bernoulli(grid[i], z, *config.codebook, channel)
                         : log_f_subg(grid[i], z, *config.codebook, channel, sig2, map);
        weights.push_back(pz);
        rows.push_back(std::move(row));
    }

    // Rounded parameter theta** and its grid index.
    double theta_ss;
    if (variant == ProtocolVariant::bernoulli) {
        const double t = source.theta_star;
        if (t > 0.5)
            theta_ss = std::floor(t / step) * step;
        else if (t < 0.5)
            theta_ss = std::ceil(t / step) * step;
        else
            theta_ss = t;
    } else {
        theta_ss = std::round((source.theta_star - lo) / step) * step + lo;
    }
    std::size_t ss_index = 0;
    double best = kInf;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double d = std::abs(grid[i] - theta_ss);
        if (d < best) {
            best = d;
            ss_index = i;
        }
    }

    ExactErrorResult out;
    out.theta_rounded = theta_ss;
    out.outcomes_per_block = static_cast<double>(weights.size());
    out.usable_blocks = blocks;

    Kahan miss, not_in_s;
    std::vector<std::size_t> choice(static_cast<std::size_t>(blocks), 0);
    DecoderState st;
    st.grid = grid;
    st.exclusion_radius = radius;
    for (;;) {
        double prob = 1.0;
        st.scores.assign(grid.size(), 0.0);
        for (long b = 0; b < blocks; ++b) {
            const auto c = choice[static_cast<std::size_t>(b)];
            prob *= weights[c];
            const auto& row = rows[c];
            for (std::size_t i = 0; i < grid.size(); ++i) st.scores[i] += row[i];
        }
        compute_survivors(st);
        if (std::abs(st.theta_hat - source.theta_star) > config.eps) miss.add(prob);
        if (!is_survivor(grid, st.scores, radius, ss_index)) not_in_s.add(prob);

        std::size_t pos = 0;
        while (pos < choice.size() && ++choice[pos] == weights.size()) choice[pos++] = 0;
        if (pos == choice.size()) break;
    }
    out.miss_prob = miss.sum;
    out.p_rounded_not_in_s = not_in_s.sum;
    return out;
}

std::vector<OracleReport> run_verification_suite(int max_k, std::uint64_t seed) {
    std::vector<OracleReport> reports;
    if (max_k < 4) max_k = 4;
    if (max_k > 10) max_k = 10;

    // Bernoulli decomposition bound across small instances.
    for (int k = 4; k <= max_k; k += 2) {
        for (double p : {0.1, 0.25}) {
            auto ch = make_bsc(p);
            for (int book = 0; book < 2; ++book) {
                Rng rng(derive_seed(seed, "verify-book", static_cast<std::uint64_t>(k),
                                    static_cast<std::uint64_t>(book) * 100 +
                                        static_cast<std::uint64_t>(p * 100)));
                auto cb = generate_binary(static_cast<std::size_t>(k),
                                          static_cast<std::size_t>(k) + 1, 0.3, rng, 500);
                Rng pr(derive_seed(seed, "verify-pairs", static_cast<std::uint64_t>(k),
                                   static_cast<std::uint64_t>(book)));
                for (int pair = 0; pair < 4; ++pair) {
                    const double ts = pr.uniform01();
                    const double tp = pr.uniform01();
                    reports.push_back(exact_ef_ratio_bernoulli(ts, tp, k, cb, ch));
                }
            }
        }
    }

    // Rounding ratio bound over random transcripts (worst observed vs 2).
    {
        const int k = 8;
        const long n = 64;
        auto ch = make_bsc(0.1);
        Rng rng(derive_seed(seed, "verify-round", 0, 0));
        auto cb = generate_binary(static_cast<std::size_t>(k),
                                  static_cast<std::size_t>(k) + 1, 0.3, rng, 500);
        double worst = 0.0;
        const double step = 1.0 / (2.0 * static_cast<double>(n));
        for (int t = 0; t < 100; ++t) {
            const double theta = rng.uniform01();
            double rounded;
            if (theta > 0.5)
                rounded = std::floor(theta / step) * step;
            else if (theta < 0.5)
                rounded = std::ceil(theta / step) * step;
            else
                rounded = theta;
            double log_ratio = 0.0;
            for (long j = 0; j < n / k - 1; ++j) {
                Word z;
                for (int i = 0; i < k; ++i)
                    z.symbols.push_back(static_cast<Symbol>(rng.below(2)));
                log_ratio +=
                    log_f_bernoulli(theta, z, cb, ch) - log_f_bernoulli(rounded, z, cb, ch);
            }
            worst = std::max(worst, std::exp(log_ratio));
        }
        OracleReport r;
        r.name = "bernoulli_rounding_ratio";
        r.exact = worst;
        r.bound = 2.0;
        r.satisfied = worst <= 2.0 + 1e-9;
        r.params_json = R"({"k":8,"n":64,"transcripts":100})";
        reports.push_back(r);
    }

    // Sub-Gaussian decomposition bound with a two-point source over a
    // ternary-output channel.
    {
        const int k = 4;
        ChannelModel ch(2, 3, {0.7, 0.2, 0.1, 0.1, 0.2, 0.7});
        auto map = make_subg_index_map(k, 1.0, 1.0, BaseEstimator::sample_mean, 1);
        Rng rng(derive_seed(seed, "verify-subg", 0, 0));
        Codebook cb;
        cb.k = static_cast<std::size_t>(k);
        cb.metric = CodebookMetric::bhattacharyya;
        for (std::size_t i = 0; i < map.size(); ++i) {
            Word w;
            for (int s = 0; s < k; ++s)
                w.symbols.push_back(static_cast<Symbol>(rng.below(2)));
            cb.codewords.push_back(std::move(w));
        }
        auto source = SourceModel::make_discrete(SourceKind::custom_bounded,
                                                 {{0.0, 0.6}, {1.0, 0.4}});
        for (int pair = 0; pair < 4; ++pair) {
            const double ts = source.theta_star;
            const double tp = rng.uniform01();
            reports.push_back(
                exact_ef_ratio_subg(ts, tp, cb, ch, source.sigma2, source, map));
        }
    }

    // Exact error probability: containment and block independence.
    {
        auto ch = make_bsc(0.2);
        Rng rng(derive_seed(seed, "verify-exact", 0, 0));
        auto cb = generate_binary(3, 4, 0.4, rng, 500);
        ProtocolConfig cfg;
        cfg.n = 9;
        cfg.k = 3;
        cfg.eps = 0.3;
        cfg.codebook = &cb;
        auto src = SourceModel::make_bernoulli(0.4);
        const auto exact = exact_error_probability(src, ch, cfg);
        OracleReport contain;
        contain.name = "miss_prob_containment";
        contain.exact = exact.miss_prob;
        contain.bound = exact.p_rounded_not_in_s;
        contain.satisfied = exact.miss_prob <= exact.p_rounded_not_in_s + 1e-12;
        contain.params_json = R"({"k":3,"n":9,"p":0.2,"eps":0.3,"theta_star":0.4})";
        reports.push_back(contain);

        // Union bound chain: P(theta** not in S) <= 2 sum over the far grid
        // of per-block expectation ratios raised to the block count.
        const double step = cfg.resolved_grid_step(ProtocolVariant::bernoulli);
        const auto grid = detail::make_grid(0.0, 1.0, step);
        Kahan rhs;
        for (double tp : grid) {
            if (std::abs(tp - exact.theta_rounded) <
                2.0 * cfg.eps - 1.0 / static_cast<double>(cfg.n))
                continue;
            const auto r = exact_ef_ratio_bernoulli(src.theta_star, tp, cfg.k, cb, ch);
            rhs.add(2.0 * std::pow(r.exact, static_cast<double>(exact.usable_blocks)));
        }
        OracleReport markov;
        markov.name = "union_markov_chain";
        markov.exact = exact.p_rounded_not_in_s;
        markov.bound = rhs.sum;
        markov.satisfied = markov.exact <= markov.bound + 1e-12;
        markov.params_json = contain.params_json;
        reports.push_back(markov);
    }

    return reports;
}

bool all_satisfied(const std::vector<OracleReport>& reports) {
    for (const auto& r : reports)
        if (!r.satisfied) return false;
    return true;
}

std::string reports_to_json(const std::vector<OracleReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(nlohmann::json::parse(r.to_json()));
    nlohmann::json out;
    out["reports"] = arr;
    out["all_satisfied"] = all_satisfied(reports);
    return out.dump(2);
}

} // namespace relaymean
