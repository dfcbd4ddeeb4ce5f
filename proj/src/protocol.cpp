#include "relaymean/protocol.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace relaymean {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.6931471805599453094172321214581766;
} // namespace

// ---- SourceModel ---------------------------------------------------------

SourceModel SourceModel::make_bernoulli(double theta) {
    SourceModel s;
    s.kind = SourceKind::bernoulli;
    s.theta_star = theta;
    s.variance = theta * (1.0 - theta);
    s.validate();
    return s;
}

SourceModel SourceModel::make_gaussian(double theta, double sigma2, double clip_c) {
    SourceModel s;
    s.kind = SourceKind::gaussian;
    s.theta_star = theta;
    s.sigma2 = sigma2;
    s.variance = sigma2;
    s.clip_c = clip_c;
    s.validate();
    return s;
}

SourceModel SourceModel::make_discrete(SourceKind kind,
                                       std::vector<std::pair<double, double>> atoms,
                                       double clip_c) {
    if (kind != SourceKind::discrete_heavy_tailed && kind != SourceKind::custom_bounded)
        throw std::invalid_argument("make_discrete: kind must be a discrete kind");
    SourceModel s;
    s.kind = kind;
    s.clip_c = clip_c;
    s.atoms = std::move(atoms);
    double mean = 0.0;
    for (const auto& [v, p] : s.atoms) mean += v * p;
    s.theta_star = mean;
    double var = 0.0;
    double lo = kInf, hi = -kInf;
    for (const auto& [v, p] : s.atoms) {
        var += (v - mean) * (v - mean) * p;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    s.variance = var;
    // Bounded support is sub-Gaussian with parameter (range/2)^2 (Hoeffding).
    s.sigma2 = (hi - lo) * (hi - lo) / 4.0;
    s.validate();
    return s;
}

void SourceModel::validate() const {
    switch (kind) {
        case SourceKind::bernoulli:
            if (!(theta_star >= 0.0 && theta_star <= 1.0))
                throw std::invalid_argument("source: Bernoulli mean outside [0,1]");
            break;
        case SourceKind::gaussian:
            if (!(sigma2 > 0.0))
                throw std::invalid_argument("source: sigma2 must be positive");
            [[fallthrough]];
        case SourceKind::discrete_heavy_tailed:
        case SourceKind::custom_bounded:
            if (!(clip_c >= 1.0))
                throw std::invalid_argument("source: clip_c must be >= 1");
            if (!(std::abs(theta_star) <= clip_c))
                throw std::invalid_argument("source: mean outside [-C, C]");
            break;
    }
    if (kind == SourceKind::discrete_heavy_tailed || kind == SourceKind::custom_bounded) {
        if (atoms.empty()) throw std::invalid_argument("source: discrete kind needs atoms");
        double tot = 0.0;
        for (const auto& [v, p] : atoms) {
            if (p < 0.0) throw std::invalid_argument("source: negative atom probability");
            tot += p;
        }
        if (std::abs(tot - 1.0) > 1e-9)
            throw std::invalid_argument("source: atom probabilities must sum to 1");
        if (!(variance >= 0.0)) throw std::invalid_argument("source: invalid variance");
    }
}

double SourceModel::sample(Rng& rng) const {
    switch (kind) {
        case SourceKind::bernoulli:
            return rng.bernoulli(theta_star) ? 1.0 : 0.0;
        case SourceKind::gaussian:
            return theta_star + std::sqrt(sigma2) * rng.normal();
        case SourceKind::discrete_heavy_tailed:
        case SourceKind::custom_bounded: {
            const double u = rng.uniform01();
            double acc = 0.0;
            for (const auto& [v, p] : atoms) {
                acc += p;
                if (u < acc) return v;
            }
            return atoms.back().first;
        }
    }
    return 0.0;
}

std::pair<double, double> SourceModel::mean_range() const {
    if (kind == SourceKind::bernoulli) return {0.0, 1.0};
    return {-clip_c, clip_c};
}

SourceModel SourceModel::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "bernoulli")
        return make_bernoulli(j.at("theta_star").get<double>());
    if (kind == "gaussian")
        return make_gaussian(j.at("theta_star").get<double>(),
                             j.at("sigma2").get<double>(),
                             j.value("clip_c", 1.0));
    if (kind == "discrete_heavy_tailed" || kind == "custom_bounded") {
        std::vector<std::pair<double, double>> atoms;
        for (const auto& a : j.at("atoms"))
            atoms.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
        auto s = make_discrete(kind == "custom_bounded" ? SourceKind::custom_bounded
                                                        : SourceKind::discrete_heavy_tailed,
                               std::move(atoms), j.value("clip_c", 1.0));
        if (j.contains("sigma2")) {
            s.sigma2 = j.at("sigma2").get<double>();
            s.validate();
        }
        return s;
    }
    throw std::invalid_argument("source json: unknown kind '" + kind + "'");
}

std::string SourceModel::to_json() const {
    nlohmann::json j;
    switch (kind) {
        case SourceKind::bernoulli:
            j["kind"] = "bernoulli";
            j["theta_star"] = theta_star;
            break;
        case SourceKind::gaussian:
            j["kind"] = "gaussian";
            j["theta_star"] = theta_star;
            j["sigma2"] = sigma2;
            j["clip_c"] = clip_c;
            break;
        case SourceKind::discrete_heavy_tailed:
        case SourceKind::custom_bounded: {
            j["kind"] = kind == SourceKind::custom_bounded ? "custom_bounded"
                                                           : "discrete_heavy_tailed";
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& [v, p] : atoms) arr.push_back({v, p});
            j["atoms"] = arr;
            j["clip_c"] = clip_c;
            j["sigma2"] = sigma2;
            break;
        }
    }
    return j.dump();
}

// ---- ProtocolConfig ------------------------------------------------------

double ProtocolConfig::resolved_grid_step(ProtocolVariant variant) const {
    if (grid_override > 0.0) return grid_override;
    if (grid_step > 0.0) return grid_step;
    if (variant == ProtocolVariant::bernoulli) return 1.0 / (2.0 * static_cast<double>(n));
    return 1.0 / (static_cast<double>(n) * static_cast<double>(n));
}

double ProtocolConfig::resolved_quant_step() const {
    return quant_step > 0.0 ? quant_step : 1.0 / static_cast<double>(k);
}

void ProtocolConfig::validate(ProtocolVariant variant) const {
    if (k < 2) throw std::invalid_argument("config: k must be >= 2");
    if (n < 3L * k) throw std::invalid_argument("config: n must be >= 3k");
    if (!(eps > 0.0 && eps < 0.5))
        throw std::invalid_argument("config: eps must lie in (0, 1/2)");
    if (!codebook) throw std::invalid_argument("config: codebook required");
    if (codebook->k != static_cast<std::size_t>(k))
        throw std::invalid_argument("config: codebook length differs from block length");
    const double step = resolved_grid_step(variant);
    if (!(step > 0.0 && step < eps))
        throw std::invalid_argument("config: decoder grid step must lie in (0, eps)");
    if (variant == ProtocolVariant::subg && !(resolved_quant_step() > 0.0))
        throw std::invalid_argument("config: quantization step must be positive");
    if (base_estimator == BaseEstimator::median_of_means &&
        (mom_groups < 1 || mom_groups > k))
        throw std::invalid_argument("config: mom_groups must lie in [1, k]");
}

// ---- teacher -------------------------------------------------------------

int teacher_block_bernoulli(const std::vector<int>& block) {
    int ones = 0;
    for (int v : block) {
        if (v != 0 && v != 1)
            throw std::invalid_argument("teacher_block_bernoulli: non-binary sample");
        ones += v;
    }
    return ones;
}

RoundBranches stochastic_round_branches(double x, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("stochastic_round: step must be > 0");
    const double r = x / step;
    const double nearest = std::round(r);
    if (std::abs(r - nearest) <= 1e-9 * std::max(1.0, std::abs(nearest))) {
        const double v = nearest * step;
        return {v, v, 0.0};
    }
    const double lo = std::floor(r);
    return {lo * step, (lo + 1.0) * step, r - lo};
}

double stochastic_round(double x, double step, Rng& rng) {
    const auto b = stochastic_round_branches(x, step);
    return rng.uniform01() < b.p_hi ? b.hi : b.lo;
}

std::int64_t stochastic_round_int(double x, double step, Rng& rng) {
    if (!(step > 0.0)) throw std::invalid_argument("stochastic_round: step must be > 0");
    const double r = x / step;
    const double nearest = std::round(r);
    if (std::abs(r - nearest) <= 1e-9 * std::max(1.0, std::abs(nearest)))
        return static_cast<std::int64_t>(nearest);
    const double lo = std::floor(r);
    const double frac = r - lo;
    return static_cast<std::int64_t>(lo) + (rng.uniform01() < frac ? 1 : 0);
}

double median_of_means(const std::vector<double>& block, int groups) {
    if (block.empty()) throw std::invalid_argument("median_of_means: empty block");
    if (groups < 1 || static_cast<std::size_t>(groups) > block.size())
        throw std::invalid_argument("median_of_means: groups must lie in [1, k]");
    const std::size_t k = block.size();
    std::vector<double> means;
    means.reserve(groups);
    const std::size_t base = k / groups;
    const std::size_t rem = k % groups;
    std::size_t pos = 0;
    for (int g = 0; g < groups; ++g) {
        const std::size_t len = base + (static_cast<std::size_t>(g) < rem ? 1 : 0);
        double acc = 0.0;
        for (std::size_t i = 0; i < len; ++i) acc += block[pos + i];
        pos += len;
        means.push_back(acc / static_cast<double>(len));
    }
    std::sort(means.begin(), means.end());
    return means[(means.size() - 1) / 2]; // lower median
}

SubgIndexMap make_subg_index_map(int k, double quant_step, double clip_c,
                                 BaseEstimator estimator, int mom_groups) {
    if (k < 1) throw std::invalid_argument("index map: k must be >= 1");
    if (!(quant_step > 0.0)) throw std::invalid_argument("index map: quant_step > 0");
    SubgIndexMap map;
    map.quant_step = quant_step;
    map.k = k;
    if (estimator == BaseEstimator::sample_mean || mom_groups <= 1) {
        map.denom = k;
    } else {
        const std::int64_t lo = k / mom_groups;
        const std::int64_t hi = (k % mom_groups == 0) ? lo : lo + 1;
        map.denom = std::lcm(lo, hi);
    }
    // Clip bound C + k, snapped outward so the clip values sit on the grid.
    const double bound = clip_c + static_cast<double>(k);
    map.clip_int = static_cast<std::int64_t>(std::ceil(bound / map.unit() - 1e-9));
    return map;
}

std::size_t teacher_block_subg(const std::vector<double>& block,
                               const SubgIndexMap& map, BaseEstimator estimator,
                               int mom_groups, Rng& rng) {
    if (block.size() != static_cast<std::size_t>(map.k))
        throw std::invalid_argument("teacher_block_subg: block length mismatch");
    // Integer bookkeeping: each quantized sample is q_i * quant_step, and
    // every group mean is an exact multiple of unit() = quant_step / denom.
    std::vector<std::int64_t> q(block.size());
    for (std::size_t i = 0; i < block.size(); ++i)
        q[i] = stochastic_round_int(block[i], map.quant_step, rng);

    std::int64_t value_units = 0;
    if (estimator == BaseEstimator::sample_mean || mom_groups <= 1) {
        // mean = (sum q_i) * quant_step / k; denom == k.
        for (std::int64_t v : q) value_units += v;
    } else {
        const int g = mom_groups;
        const std::size_t k = q.size();
        const std::size_t base = k / g;
        const std::size_t rem = k % g;
        std::vector<std::int64_t> means_units;
        means_units.reserve(g);
        std::size_t pos = 0;
        for (int j = 0; j < g; ++j) {
            const std::size_t len = base + (static_cast<std::size_t>(j) < rem ? 1 : 0);
            std::int64_t s = 0;
            for (std::size_t i = 0; i < len; ++i) s += q[pos + i];
            pos += len;
            means_units.push_back(s * (map.denom / static_cast<std::int64_t>(len)));
        }
        std::sort(means_units.begin(), means_units.end());
        value_units = means_units[(means_units.size() - 1) / 2];
    }
    value_units = std::clamp(value_units, -map.clip_int, map.clip_int);
    return static_cast<std::size_t>(value_units + map.clip_int);
}

// ---- grid / binomial helpers ----------------------------------------------

namespace detail {

std::vector<double> make_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi > lo)) throw std::invalid_argument("make_grid: bad range");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> g;
    g.reserve(count + 2);
    for (std::size_t i = 0; i <= count; ++i) g.push_back(lo + static_cast<double>(i) * step);
    if (hi - g.back() > 1e-6 * step) g.push_back(hi);
    return g;
}

double log_choose(int k, int a) {
    return std::lgamma(k + 1.0) - std::lgamma(a + 1.0) - std::lgamma(k - a + 1.0);
}

} // namespace detail

// ---- Bernoulli proxy likelihood -------------------------------------------
//
// f(theta, Z) = sum_alpha sqrt(Binom(k,theta)(alpha)) * sqrt(P(Z|W_alpha)).
// With t = sqrt(theta/(1-theta)) this is a degree-k polynomial in t times
// (1-theta)^{k/2}, which evaluates with plain multiply-adds instead of a
// log-sum-exp per alpha.  Coefficients are normalized per block by their
// maximum so the polynomial value stays within double range whenever
// k*|log t| < 580; otherwise a log-sum-exp fallback is used.

namespace {

struct BernGridTables {
    std::vector<double> grid;
    std::vector<signed char> kind; // 0 interior, 1 theta==0, 2 theta==1
    std::vector<double> log_t;
    std::vector<double> t1, t2, t4;
    std::vector<double> khalf_log1m; // (k/2) log(1-theta)

    void build(const std::vector<double>& g, int k) {
        grid = g;
        const std::size_t n = g.size();
        kind.assign(n, 0);
        log_t.assign(n, 0.0);
        t1.assign(n, 0.0);
        t2.assign(n, 0.0);
        t4.assign(n, 0.0);
        khalf_log1m.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double th = g[i];
            if (th <= 0.0) {
                kind[i] = 1;
            } else if (th >= 1.0) {
                kind[i] = 2;
            } else {
                const double lt = 0.5 * (std::log(th) - std::log1p(-th));
                log_t[i] = lt;
                t1[i] = std::exp(lt);
                t2[i] = t1[i] * t1[i];
                t4[i] = t2[i] * t2[i];
                khalf_log1m[i] = 0.5 * static_cast<double>(k) * std::log1p(-th);
            }
        }
    }
};

// Channel log-likelihoods of every codeword for one received block.
struct BlockLikelihoods {
    std::vector<double> wll; // log P(Z | W_alpha)
};

struct CodewordLikelihoodTables {
    const ChannelModel* channel = nullptr;
    const Codebook* codebook = nullptr;
    bool packed = false; // BSC with k <= 64: XOR + popcount
    double log_p = 0.0, log_1mp = 0.0;
    std::vector<std::uint64_t> masks;
    int k = 0;

    void build(const ChannelModel& ch, const Codebook& cb) {
        channel = &ch;
        codebook = &cb;
        k = static_cast<int>(cb.k);
        double p = 0.0;
        if (ch.is_bsc(&p) && cb.k <= 64) {
            packed = true;
            log_p = std::log(p);
            log_1mp = std::log1p(-p);
            masks.clear();
            masks.reserve(cb.size());
            for (const auto& w : cb.codewords) {
                std::uint64_t m = 0;
                for (std::size_t i = 0; i < w.length(); ++i)
                    m |= static_cast<std::uint64_t>(w.symbols[i] & 1u) << i;
                masks.push_back(m);
            }
        }
    }

    void fill(const Word& z, BlockLikelihoods& out) const {
        const std::size_t m = codebook->size();
        out.wll.resize(m);
        if (packed) {
            std::uint64_t zm = 0;
            for (std::size_t i = 0; i < z.length(); ++i)
                zm |= static_cast<std::uint64_t>(z.symbols[i] & 1u) << i;
            for (std::size_t a = 0; a < m; ++a) {
                const int d = std::popcount(masks[a] ^ zm);
                out.wll[a] = static_cast<double>(k - d) * log_1mp +
                             static_cast<double>(d) * log_p;
            }
        } else {
            for (std::size_t a = 0; a < m; ++a)
                out.wll[a] = word_log_likelihood(*channel, codebook->codewords[a], z);
        }
    }
};

// Four-way split Horner evaluation of sum_a c[a] t^a; c is padded with
// zeros to a multiple of four.
inline double poly_eval4(const double* c, int top_m, double t, double t4) {
    double p0 = 0.0, p1 = 0.0, p2 = 0.0, p3 = 0.0;
    for (int m = top_m; m >= 0; --m) {
        const double* cc = c + 4 * m;
        p0 = p0 * t4 + cc[0];
        p1 = p1 * t4 + cc[1];
        p2 = p2 * t4 + cc[2];
        p3 = p3 * t4 + cc[3];
    }
    return ((p3 * t + p2) * t + p1) * t + p0;
}

// Accumulates sum_j log f(theta, Z^j) over the grid, keeping the product of
// normalized polynomial values as (mantissa, base-2 exponent) pairs so only
// one log is needed per grid point at the end.
struct BernScoreAccum {
    std::vector<double> mant;
    std::vector<long> exp2;
    std::vector<double> add; // contributions outside the product path
    double s_sum = 0.0;
    double acc_theta0 = 0.0, acc_theta1 = 0.0;
    long blocks = 0;
    bool dead = false; // some block had zero likelihood under every codeword

    void reset(std::size_t grid_size) {
        mant.assign(grid_size, 1.0);
        exp2.assign(grid_size, 0);
        add.assign(grid_size, 0.0);
        s_sum = 0.0;
        acc_theta0 = acc_theta1 = 0.0;
        blocks = 0;
        dead = false;
    }
};

struct BernScorer {
    BernGridTables grid;
    CodewordLikelihoodTables lik;
    std::vector<double> half_lchoose; // 0.5 log C(k, alpha)
    int k = 0;
    int top_m = 0; // padded coefficient blocks minus one

    void build(const ChannelModel& ch, const Codebook& cb, const std::vector<double>& g) {
        k = static_cast<int>(cb.k);
        grid.build(g, k);
        lik.build(ch, cb);
        half_lchoose.resize(k + 1);
        for (int a = 0; a <= k; ++a) half_lchoose[a] = 0.5 * detail::log_choose(k, a);
        top_m = k / 4;
    }

    void add_block(const Word& z, BernScoreAccum& acc, BlockLikelihoods& scratch,
                   std::vector<double>& coeffs) const {
        lik.fill(z, scratch);
        const auto& wll = scratch.wll;

        coeffs.assign(static_cast<std::size_t>(4 * (top_m + 1)), 0.0);
        double s = -kInf;
        std::vector<double> d(k + 1);
        for (int a = 0; a <= k; ++a) {
            d[a] = 0.5 * wll[a] + half_lchoose[a];
            s = std::max(s, d[a]);
        }
        acc.acc_theta0 += 0.5 * wll[0];
        acc.acc_theta1 += 0.5 * wll[k];
        acc.blocks += 1;
        if (std::isinf(s) && s < 0) {
            acc.dead = true;
            return;
        }
        acc.s_sum += s;
        int nnz = 0;
        int last_nz = 0;
        for (int a = 0; a <= k; ++a) {
            if (d[a] > -kInf) {
                coeffs[a] = std::exp(d[a] - s);
                ++nnz;
                last_nz = a;
            }
        }

        const std::size_t n = grid.grid.size();
        const double guard = 580.0;
        if (nnz == 1) {
            // Single surviving term: log poly = (d - s) + a log t = a log t.
            const double a = static_cast<double>(last_nz);
            for (std::size_t i = 0; i < n; ++i)
                if (grid.kind[i] == 0) acc.add[i] += a * grid.log_t[i];
            return;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (grid.kind[i] != 0) continue;
            const double lt = grid.log_t[i];
            if (std::abs(lt) * static_cast<double>(k) < guard) {
                const double poly = poly_eval4(coeffs.data(), top_m, grid.t1[i], grid.t4[i]);
                int e = 0;
                acc.mant[i] = std::frexp(acc.mant[i] * poly, &e);
                acc.exp2[i] += e;
            } else {
                // Extreme theta: log-sum-exp over alpha.
                double m = -kInf;
                for (int a = 0; a <= k; ++a) {
                    if (d[a] == -kInf) continue;
                    m = std::max(m, d[a] - s + static_cast<double>(a) * lt);
                }
                double sum = 0.0;
                for (int a = 0; a <= k; ++a) {
                    if (d[a] == -kInf) continue;
                    sum += std::exp(d[a] - s + static_cast<double>(a) * lt - m);
                }
                acc.add[i] += m + std::log(sum);
            }
        }
    }

    void finalize(const BernScoreAccum& acc, std::vector<double>& L) const {
        const std::size_t n = grid.grid.size();
        L.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (grid.kind[i] == 1) {
                L[i] = acc.acc_theta0;
            } else if (grid.kind[i] == 2) {
                L[i] = acc.acc_theta1;
            } else if (acc.dead) {
                L[i] = -kInf;
            } else {
                L[i] = acc.s_sum + static_cast<double>(acc.blocks) * grid.khalf_log1m[i] +
                       std::log(acc.mant[i]) + static_cast<double>(acc.exp2[i]) * kLn2 +
                       acc.add[i];
            }
        }
    }
};

// ---- sub-Gaussian proxy likelihood ----------------------------------------

struct SubgScorer {
    CodewordLikelihoodTables lik;
    std::vector<double> grid;
    std::vector<double> alpha_values;
    double gauss_coef = 0.0; // k / (4 sigma^2)
    std::size_t space = 0;

    void build(const ChannelModel& ch, const Codebook& cb, const SubgIndexMap& map,
               double sigma2, const std::vector<double>& g) {
        if (cb.size() < map.size())
            throw std::invalid_argument(
                "protocol: codebook too small for index space (need " +
                std::to_string(map.size()) + " codewords, have " +
                std::to_string(cb.size()) + ")");
        lik.build(ch, cb);
        grid = g;
        space = map.size();
        alpha_values.resize(space);
        for (std::size_t i = 0; i < space; ++i) alpha_values[i] = map.value(i);
        gauss_coef = static_cast<double>(map.k) / (4.0 * sigma2);
    }

    void add_block(const Word& z, std::vector<double>& L, BlockLikelihoods& scratch) const {
        lik.fill(z, scratch);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double th = grid[i];
            double m = -kInf;
            for (std::size_t a = 0; a < space; ++a) {
                const double dv = th - alpha_values[a];
                const double e = -gauss_coef * dv * dv + scratch.wll[a];
                m = std::max(m, e);
            }
            if (std::isinf(m) && m < 0) {
                L[i] = -kInf;
                continue;
            }
            double sum = 0.0;
            for (std::size_t a = 0; a < space; ++a) {
                const double dv = th - alpha_values[a];
                sum += std::exp(-gauss_coef * dv * dv + scratch.wll[a] - m);
            }
            L[i] += m + std::log(sum);
        }
    }
};

double effective_sigma2(const SourceModel& source) {
    if (source.kind == SourceKind::discrete_heavy_tailed) return 32.0 * source.variance;
    return source.sigma2;
}

} // namespace

double log_f_bernoulli(double theta, const Word& received, const Codebook& codebook,
                       const ChannelModel& channel) {
    if (!(theta >= 0.0 && theta <= 1.0))
        throw std::invalid_argument("log_f_bernoulli: theta outside [0,1]");
    BernScorer scorer;
    scorer.build(channel, codebook, {theta});
    BernScoreAccum acc;
    acc.reset(1);
    BlockLikelihoods scratch;
    std::vector<double> coeffs;
    scorer.add_block(received, acc, scratch, coeffs);
    std::vector<double> L;
    scorer.finalize(acc, L);
    return L[0];
}

double log_f_subg(double theta, const Word& received, const Codebook& codebook,
                  const ChannelModel& channel, double sigma2, const SubgIndexMap& map) {
    SubgScorer scorer;
    scorer.build(channel, codebook, map, sigma2, {theta});
    std::vector<double> L(1, 0.0);
    BlockLikelihoods scratch;
    scorer.add_block(received, L, scratch);
    return L[0];
}

// ---- survivor set ----------------------------------------------------------

void compute_survivors(DecoderState& state) {
    const auto& L = state.scores;
    const auto& g = state.grid;
    const double r = state.exclusion_radius;
    const long n = static_cast<long>(L.size());
    if (n == 0) throw std::invalid_argument("compute_survivors: empty grid");

    std::vector<double> prefix(n), suffix(n);
    prefix[0] = L[0];
    for (long i = 1; i < n; ++i) prefix[i] = std::max(prefix[i - 1], L[i]);
    suffix[n - 1] = L[n - 1];
    for (long i = n - 2; i >= 0; --i) suffix[i] = std::max(suffix[i + 1], L[i]);

    state.s_lo = state.s_hi = -1;
    state.survivor_mask.assign(static_cast<std::size_t>(n), 0);
    long lo_end = -1;   // last j with g[i] - g[j] >= r
    long hi_start = 0;  // first j with g[j] - g[i] >= r
    for (long i = 0; i < n; ++i) {
        while (lo_end + 1 < n && g[i] - g[lo_end + 1] >= r) ++lo_end;
        while (hi_start < n && g[hi_start] - g[i] < r) ++hi_start;
        bool surv;
        if (lo_end < 0 && hi_start >= n) {
            surv = true; // no far points: vacuously beats everything
        } else {
            double far = -kInf;
            if (lo_end >= 0) far = prefix[lo_end];
            if (hi_start < n) far = std::max(far, suffix[hi_start]);
            surv = L[i] > far;
        }
        if (surv) {
            state.survivor_mask[static_cast<std::size_t>(i)] = 1;
            if (state.s_lo < 0) state.s_lo = i;
            state.s_hi = i;
        }
    }
    if (state.s_lo >= 0) {
        state.fallback_used = false;
        state.theta_hat = 0.5 * (g[state.s_lo] + g[state.s_hi]);
    } else {
        state.fallback_used = true;
        long best = 0;
        for (long i = 1; i < n; ++i)
            if (L[i] > L[best]) best = i;
        state.theta_hat = g[best];
    }
}

// ---- decode ----------------------------------------------------------------

DecoderState decode(const std::vector<Word>& blocks, const ChannelModel& channel,
                    const ProtocolConfig& config, ProtocolVariant variant,
                    const SourceModel& source) {
    if (blocks.empty()) throw std::invalid_argument("decode: no usable blocks");
    config.validate(variant);
    const double step = config.resolved_grid_step(variant);
    const auto [lo, hi] = source.mean_range();

    DecoderState st;
    st.grid = detail::make_grid(lo, hi, step);
    st.exclusion_radius = 2.0 * config.eps - 2.0 * step;
    if (variant == ProtocolVariant::bernoulli) {
        BernScorer scorer;
        scorer.build(channel, *config.codebook, st.grid);
        BernScoreAccum acc;
        acc.reset(st.grid.size());
        BlockLikelihoods scratch;
        std::vector<double> coeffs;
        for (const auto& z : blocks) scorer.add_block(z, acc, scratch, coeffs);
        scorer.finalize(acc, st.scores);
    } else {
        const auto map = make_subg_index_map(config.k, config.resolved_quant_step(),
                                             source.clip_c, config.base_estimator,
                                             config.mom_groups);
        SubgScorer scorer;
        scorer.build(channel, *config.codebook, map, effective_sigma2(source), st.grid);
        st.scores.assign(st.grid.size(), 0.0);
        BlockLikelihoods scratch;
        for (const auto& z : blocks) scorer.add_block(z, st.scores, scratch);
    }
    compute_survivors(st);
    return st;
}

// ---- ProtocolRunner --------------------------------------------------------

struct ProtocolRunner::Impl {
    SourceModel source;
    ChannelModel channel;
    Codebook codebook;
    ProtocolConfig config; // codebook pointer rebound to the copy above
    ProtocolVariant variant;
    std::vector<double> grid;
    double exclusion_radius = 0.0;

    BernScorer bern;
    SubgScorer subg;
    SubgIndexMap map;

    Impl(const SourceModel& src, const ChannelModel& ch, const ProtocolConfig& cfg)
        : source(src), channel(ch), codebook(*cfg.codebook), config(cfg) {
        source.validate();
        config.codebook = &codebook;
        variant = source.kind == SourceKind::bernoulli ? ProtocolVariant::bernoulli
                                                       : ProtocolVariant::subg;
        config.validate(variant);
        const double step = config.resolved_grid_step(variant);
        const auto [lo, hi] = source.mean_range();
        grid = detail::make_grid(lo, hi, step);
        exclusion_radius = 2.0 * config.eps - 2.0 * step;
        if (variant == ProtocolVariant::bernoulli) {
            if (codebook.size() < static_cast<std::size_t>(config.k) + 1)
                throw std::invalid_argument("protocol: Bernoulli variant needs k+1 codewords");
            bern.build(channel, codebook, grid);
        } else {
            map = make_subg_index_map(config.k, config.resolved_quant_step(),
                                      source.clip_c, config.base_estimator,
                                      config.mom_groups);
            subg.build(channel, codebook, map, effective_sigma2(source), grid);
        }
    }

    Transcript run(Rng& rng) const {
        const long n = config.n;
        const int k = config.k;
        const long nb = n / k; // trailing remainder of samples is ignored
        Transcript tr;
        tr.usable_blocks = nb - 1;
        tr.effective_n = (nb - 1) * static_cast<long>(k);

        // All n samples are observed before encoding decisions are applied;
        // the last block of samples is never encoded.
        std::vector<double> samples(static_cast<std::size_t>(n));
        for (auto& x : samples) x = source.sample(rng);

        DecoderState st;
        st.grid = grid;
        st.exclusion_radius = exclusion_radius;

        BernScoreAccum acc;
        BlockLikelihoods scratch;
        std::vector<double> coeffs;
        if (variant == ProtocolVariant::bernoulli) {
            acc.reset(grid.size());
        } else {
            st.scores.assign(grid.size(), 0.0);
        }

        std::vector<int> bits(k);
        std::vector<double> reals(k);
        for (long j = 0; j < nb; ++j) {
            long cw_index = 0;
            long alpha = 0;
            if (j > 0) {
                const std::size_t off = static_cast<std::size_t>((j - 1) * k);
                if (variant == ProtocolVariant::bernoulli) {
                    for (int i = 0; i < k; ++i)
                        bits[i] = samples[off + i] > 0.5 ? 1 : 0;
                    alpha = teacher_block_bernoulli(bits);
                } else {
                    for (int i = 0; i < k; ++i) reals[i] = samples[off + i];
                    alpha = static_cast<long>(teacher_block_subg(
                        reals, map, config.base_estimator, config.mom_groups, rng));
                }
                cw_index = alpha;
                tr.blocks.push_back({j, alpha, cw_index});
            }
            const Word sent = codebook.codewords[static_cast<std::size_t>(cw_index)];
            const Word z = transmit(channel, sent, rng);
            if (j > 0) {
                if (variant == ProtocolVariant::bernoulli)
                    bern.add_block(z, acc, scratch, coeffs);
                else
                    subg.add_block(z, st.scores, scratch);
            }
        }
        if (variant == ProtocolVariant::bernoulli) bern.finalize(acc, st.scores);
        compute_survivors(st);
        tr.fallback_used = st.fallback_used;
        tr.theta_hat = st.theta_hat;
        return tr;
    }
};

ProtocolRunner::ProtocolRunner(const SourceModel& source, const ChannelModel& channel,
                               const ProtocolConfig& config)
    : impl_(std::make_unique<Impl>(source, channel, config)) {}
ProtocolRunner::~ProtocolRunner() = default;
ProtocolRunner::ProtocolRunner(ProtocolRunner&&) noexcept = default;

Transcript ProtocolRunner::run(Rng& rng) const { return impl_->run(rng); }
ProtocolVariant ProtocolRunner::variant() const { return impl_->variant; }

Transcript run_protocol(const SourceModel& source, const ChannelModel& channel,
                        const ProtocolConfig& config, Rng& rng) {
    ProtocolRunner runner(source, channel, config);
    return runner.run(rng);
}

std::string Transcript::to_jsonl() const {
    std::ostringstream os;
    for (const auto& b : blocks) {
        nlohmann::json j;
        j["index"] = b.index;
        j["alpha"] = b.alpha;
        j["codeword_index"] = b.codeword_index;
        os << j.dump() << '\n';
    }
    return os.str();
}

} // namespace relaymean
