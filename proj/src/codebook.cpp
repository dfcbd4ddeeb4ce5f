#include "relaymean/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "relaymean/exponents.hpp"

namespace relaymean {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t hamming_distance(const Word& a, const Word& b) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.length(); ++i) d += a.symbols[i] != b.symbols[i];
    return d;
}

double word_db(const Word& a, const Word& b, const std::vector<double>& sym_db,
               std::size_t alphabet) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.length(); ++i) {
        const double v = sym_db[a.symbols[i] * alphabet + b.symbols[i]];
        if (std::isinf(v)) return kInf;
        d += v;
    }
    return d;
}

// Rejection loop: resample only codewords participating in a violating pair.
// Each codeword in turn is redrawn i.i.d. until it clears every earlier one,
// keeping the prefix valid.  At small k a fixed prefix can exclude every
// remaining word, so a stuck round redraws the whole book and tries again;
// max_attempts counts these rounds.  `ok(i, j)` decides a pair,
// `resample(word)` refreshes one codeword, `pair_metric(i, j)` is used for
// failure diagnostics.
template <typename Ok, typename Resample, typename Metric>
void rejection_fill(std::vector<Word>& words, int max_attempts, Ok&& ok,
                    Resample&& resample, Metric&& pair_metric, const char* what) {
    constexpr int kPerWordBudget = 256;
    const std::size_t m = words.size();
    for (int round = 0; round < max_attempts; ++round) {
        if (round > 0)
            for (auto& w : words) resample(w);
        bool all_ok = true;
        for (std::size_t i = 1; i < m && all_ok; ++i) {
            int attempts = 0;
            for (;;) {
                bool clean = true;
                for (std::size_t j = 0; j < i; ++j)
                    if (!ok(j, i)) {
                        clean = false;
                        break;
                    }
                if (clean) break;
                if (++attempts > kPerWordBudget) {
                    all_ok = false;
                    break;
                }
                resample(words[i]);
            }
        }
        if (all_ok) return;
    }
    double best = kInf;
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
            best = std::min(best, pair_metric(a, b));
    throw CodebookGenerationError(
        std::string(what) +
            ": attempts exhausted; the distance target may be unreachable at this "
            "block length (lower min_fraction/slack or raise max_attempts)",
        best, max_attempts);
}

} // namespace

Codebook generate_binary(std::size_t k, std::size_t m, double min_fraction, Rng& rng,
                         int max_attempts) {
    if (k == 0 || m == 0) throw std::invalid_argument("generate_binary: k, m must be positive");
    if (!(min_fraction < 0.5))
        throw std::invalid_argument("generate_binary: min_fraction must be < 1/2");
    if (k < 64 && m > (1ull << k))
        throw std::invalid_argument("generate_binary: m exceeds 2^k");
    const double threshold = min_fraction * static_cast<double>(k);

    Codebook cb;
    cb.k = k;
    cb.metric = CodebookMetric::hamming;
    cb.codewords.resize(m);
    auto fresh = [&](Word& w) {
        w.symbols.resize(k);
        for (auto& s : w.symbols) s = static_cast<Symbol>(rng.next_u64() & 1u);
    };
    for (auto& w : cb.codewords) fresh(w);

    if (m > 1) {
        rejection_fill(
            cb.codewords, max_attempts,
            [&](std::size_t i, std::size_t j) {
                return static_cast<double>(hamming_distance(cb.codewords[i],
                                                            cb.codewords[j])) >= threshold;
            },
            fresh,
            [&](std::size_t i, std::size_t j) {
                return static_cast<double>(hamming_distance(cb.codewords[i], cb.codewords[j]));
            },
            "generate_binary");
    }
    cb.min_pairwise = verify(cb).min_pairwise;
    return cb;
}

Codebook generate_dmc(std::size_t k, std::size_t m, const ChannelModel& channel,
                      Rng& rng, double slack, int max_attempts) {
    if (k == 0 || m == 0) throw std::invalid_argument("generate_dmc: k, m must be positive");
    if (!(slack > 0.0 && slack < 1.0))
        throw std::invalid_argument("generate_dmc: slack must lie in (0,1)");

    const auto zr = zero_rate_exponent(channel);
    const auto sym_db = symbol_db_matrix(channel);
    const std::size_t a = channel.input_size();
    const bool infinite = std::isinf(zr.value);
    const double threshold =
        infinite ? kInf : (1.0 - slack) * static_cast<double>(k) * zr.value;

    // Sampling from the optimizing input distribution.
    std::vector<double> cdf(a, 0.0);
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < a; ++i) {
            acc += zr.input_dist[i];
            cdf[i] = acc;
        }
        cdf[a - 1] = 1.0;
    }
    auto fresh = [&](Word& w) {
        w.symbols.resize(k);
        for (auto& s : w.symbols) {
            const double u = rng.uniform01();
            std::size_t z = 0;
            while (z + 1 < a && u >= cdf[z]) ++z;
            s = static_cast<Symbol>(z);
        }
    };

    Codebook cb;
    cb.k = k;
    cb.metric = CodebookMetric::bhattacharyya;
    cb.codewords.resize(m);
    for (auto& w : cb.codewords) fresh(w);

    if (m > 1) {
        auto pair_db = [&](std::size_t i, std::size_t j) {
            return word_db(cb.codewords[i], cb.codewords[j], sym_db, a);
        };
        rejection_fill(
            cb.codewords, max_attempts,
            [&](std::size_t i, std::size_t j) {
                const double d = pair_db(i, j);
                return infinite ? std::isinf(d) : d >= threshold;
            },
            fresh, pair_db, "generate_dmc");
    }
    cb.min_pairwise = verify(cb, &channel).min_pairwise;
    return cb;
}

VerifyResult verify(const Codebook& codebook, const ChannelModel* channel) {
    if ((codebook.metric == CodebookMetric::bhattacharyya) != (channel != nullptr))
        throw std::invalid_argument(
            "verify: channel required exactly for the bhattacharyya metric");
    VerifyResult out;
    out.min_pairwise = kInf;
    std::vector<double> sym_db;
    std::size_t a = 0;
    if (channel) {
        sym_db = symbol_db_matrix(*channel);
        a = channel->input_size();
    }
    const auto& words = codebook.codewords;
    for (std::size_t i = 0; i < words.size(); ++i) {
        for (std::size_t j = i + 1; j < words.size(); ++j) {
            const double d = channel
                ? word_db(words[i], words[j], sym_db, a)
                : static_cast<double>(hamming_distance(words[i], words[j]));
            if (d < out.min_pairwise) {
                out.min_pairwise = d;
                out.offending_pair = {i, j};
            }
        }
    }
    if (words.size() < 2) out.offending_pair.reset();
    return out;
}

std::string codebook_to_text(const Codebook& codebook) {
    std::ostringstream os;
    os << codebook.k << ' ' << codebook.size() << ' '
       << (codebook.metric == CodebookMetric::hamming ? "hamming" : "bhattacharyya")
       << '\n';
    for (const auto& w : codebook.codewords) {
        for (Symbol s : w.symbols) {
            if (s > 9)
                throw std::invalid_argument(
                    "codebook_to_text: only alphabets up to 10 symbols serialize");
            os << static_cast<char>('0' + s);
        }
        os << '\n';
    }
    return os.str();
}

Codebook codebook_from_text(const std::string& text) {
    std::istringstream is(text);
    Codebook cb;
    std::size_t m = 0;
    std::string metric;
    if (!(is >> cb.k >> m >> metric))
        throw std::invalid_argument("codebook_from_text: bad header");
    if (metric == "hamming")
        cb.metric = CodebookMetric::hamming;
    else if (metric == "bhattacharyya")
        cb.metric = CodebookMetric::bhattacharyya;
    else
        throw std::invalid_argument("codebook_from_text: unknown metric '" + metric + "'");
    std::string line;
    std::getline(is, line);
    for (std::size_t i = 0; i < m; ++i) {
        if (!std::getline(is, line) || line.size() != cb.k)
            throw std::invalid_argument("codebook_from_text: bad codeword line");
        Word w;
        w.symbols.reserve(cb.k);
        for (char c : line) {
            if (c < '0' || c > '9')
                throw std::invalid_argument("codebook_from_text: non-digit symbol");
            w.symbols.push_back(static_cast<Symbol>(c - '0'));
        }
        cb.codewords.push_back(std::move(w));
    }
    // min_pairwise is metadata; recompute for the Hamming metric, leave the
    // caller to verify() with a channel for the Bhattacharyya metric.
    if (cb.metric == CodebookMetric::hamming)
        cb.min_pairwise = verify(cb).min_pairwise;
    else
        cb.min_pairwise = std::numeric_limits<double>::quiet_NaN();
    return cb;
}

void save_codebook(const Codebook& codebook, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_codebook: cannot open " + path);
    out << codebook_to_text(codebook);
}

Codebook load_codebook(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_codebook: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return codebook_from_text(ss.str());
}

} // namespace relaymean
