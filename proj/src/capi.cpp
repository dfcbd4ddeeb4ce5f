#include "relaymean.h"

#include <cstring>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "relaymean/baselines.hpp"
#include "relaymean/channel.hpp"
#include "relaymean/codebook.hpp"
#include "relaymean/exponents.hpp"
#include "relaymean/oracle.hpp"
#include "relaymean/protocol.hpp"
#include "relaymean/simharness.hpp"

using namespace relaymean;

struct rm_channel {
    ChannelModel model;
};
struct rm_codebook {
    Codebook book;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename Fn>
rm_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        g_last_error = e.what();
        return RM_ERR_INVALID;
    } catch (const CodebookGenerationError& e) {
        g_last_error = std::string(e.what()) +
                       " (best pairwise distance " + std::to_string(e.best_min_pairwise) +
                       ")";
        return RM_ERR_RUNTIME;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RM_ERR_RUNTIME;
    }
}

rm_status require(bool cond, const char* msg) {
    if (!cond) {
        g_last_error = msg;
        return RM_ERR_INVALID;
    }
    return RM_OK;
}

} // namespace

extern "C" {

const char* rm_version(void) { return "relaymean 1.0.0"; }

const char* rm_last_error(void) { return g_last_error.c_str(); }

void rm_string_free(char* s) { delete[] s; }

/* ---- channels ---------------------------------------------------------- */

rm_status rm_channel_create_bsc(double p, rm_channel** out) {
    if (auto st = require(out != nullptr, "null output pointer")) return st;
    return guarded([&] {
        *out = new rm_channel{make_bsc(p)};
        return RM_OK;
    });
}

rm_status rm_channel_from_json(const char* json, rm_channel** out) {
    if (auto st = require(json && out, "null argument")) return st;
    return guarded([&] {
        *out = new rm_channel{ChannelModel::from_json(json)};
        return RM_OK;
    });
}

rm_status rm_channel_to_json(const rm_channel* ch, char** out_json) {
    if (auto st = require(ch && out_json, "null argument")) return st;
    return guarded([&] {
        *out_json = dup_string(ch->model.to_json());
        return RM_OK;
    });
}

int rm_channel_input_size(const rm_channel* ch) {
    return ch ? static_cast<int>(ch->model.input_size()) : 0;
}

int rm_channel_output_size(const rm_channel* ch) {
    return ch ? static_cast<int>(ch->model.output_size()) : 0;
}

rm_status rm_channel_zero_rate_exponent(const rm_channel* ch, double* value,
                                        double* input_dist) {
    if (auto st = require(ch && value, "null argument")) return st;
    return guarded([&] {
        const auto r = zero_rate_exponent(ch->model);
        *value = r.value;
        if (input_dist)
            for (std::size_t i = 0; i < r.input_dist.size(); ++i)
                input_dist[i] = r.input_dist[i];
        return RM_OK;
    });
}

void rm_channel_free(rm_channel* ch) { delete ch; }

/* ---- analytic exponents ------------------------------------------------- */

rm_status rm_exponent_report_json(const char* source_json, const char* channel_json,
                                  double eps, char** out_json) {
    if (auto st = require(source_json && channel_json && out_json, "null argument"))
        return st;
    return guarded([&] {
        const auto source = SourceModel::from_json(source_json);
        const auto channel = ChannelModel::from_json(channel_json);
        *out_json = dup_string(make_exponent_report(source, channel, eps).to_json());
        return RM_OK;
    });
}

namespace {

SweepTable sweep_from_fix(const std::string& fix, int grid_points) {
    const auto pos = fix.find('=');
    if (pos == std::string::npos)
        throw std::invalid_argument("sweep: fix must be 'p=<value>' or 'eps=<value>'");
    const std::string name = fix.substr(0, pos);
    const double value = std::stod(fix.substr(pos + 1));
    if (grid_points < 2) throw std::invalid_argument("sweep: grid must have >= 2 points");
    const auto grid = open_interval_grid(0.0, 0.5, grid_points);
    if (name == "p") return sweep_eps(value, grid);
    if (name == "eps") return sweep_p(value, grid);
    throw std::invalid_argument("sweep: fix must name 'p' or 'eps'");
}

} // namespace

rm_status rm_sweep_csv(const char* fix, int grid_points, char** out_csv) {
    if (auto st = require(fix && out_csv, "null argument")) return st;
    return guarded([&] {
        *out_csv = dup_string(sweep_to_csv(sweep_from_fix(fix, grid_points)));
        return RM_OK;
    });
}

rm_status rm_sweep_svg(const char* fix, int grid_points, char** out_svg) {
    if (auto st = require(fix && out_svg, "null argument")) return st;
    return guarded([&] {
        const auto table = sweep_from_fix(fix, grid_points);
        const std::string title = table.var_name == "eps"
                                      ? "error exponents vs eps"
                                      : "error exponents vs crossover probability";
        *out_svg = dup_string(emit_svg(table, title));
        return RM_OK;
    });
}

/* ---- codebooks ----------------------------------------------------------- */

rm_status rm_codebook_generate_binary(int k, int m, double min_fraction,
                                      uint64_t seed, int max_attempts,
                                      rm_codebook** out) {
    if (auto st = require(out != nullptr, "null output pointer")) return st;
    return guarded([&] {
        Rng rng(seed);
        *out = new rm_codebook{generate_binary(static_cast<std::size_t>(k),
                                               static_cast<std::size_t>(m), min_fraction,
                                               rng, max_attempts)};
        return RM_OK;
    });
}

rm_status rm_codebook_generate_dmc(const rm_channel* ch, int k, int m, double slack,
                                   uint64_t seed, int max_attempts, rm_codebook** out) {
    if (auto st = require(ch && out, "null argument")) return st;
    return guarded([&] {
        Rng rng(seed);
        *out = new rm_codebook{generate_dmc(static_cast<std::size_t>(k),
                                            static_cast<std::size_t>(m), ch->model, rng,
                                            slack, max_attempts)};
        return RM_OK;
    });
}

rm_status rm_codebook_save(const rm_codebook* cb, const char* path) {
    if (auto st = require(cb && path, "null argument")) return st;
    return guarded([&] {
        save_codebook(cb->book, path);
        return RM_OK;
    });
}

rm_status rm_codebook_load(const char* path, rm_codebook** out) {
    if (auto st = require(path && out, "null argument")) return st;
    return guarded([&] {
        *out = new rm_codebook{load_codebook(path)};
        return RM_OK;
    });
}

rm_status rm_codebook_verify(const rm_codebook* cb, const rm_channel* ch,
                             double* min_pairwise, int* pair_lo, int* pair_hi) {
    if (auto st = require(cb && min_pairwise, "null argument")) return st;
    return guarded([&] {
        const auto r = verify(cb->book, ch ? &ch->model : nullptr);
        *min_pairwise = r.min_pairwise;
        if (pair_lo) *pair_lo = r.offending_pair ? static_cast<int>(r.offending_pair->first) : -1;
        if (pair_hi) *pair_hi = r.offending_pair ? static_cast<int>(r.offending_pair->second) : -1;
        return RM_OK;
    });
}

int rm_codebook_size(const rm_codebook* cb) {
    return cb ? static_cast<int>(cb->book.size()) : 0;
}

int rm_codebook_length(const rm_codebook* cb) {
    return cb ? static_cast<int>(cb->book.k) : 0;
}

void rm_codebook_free(rm_codebook* cb) { delete cb; }

/* ---- Monte Carlo experiments -------------------------------------------- */

rm_status rm_experiment_run_json(const char* experiment_json, int threads,
                                 char** out_json) {
    if (auto st = require(experiment_json && out_json, "null argument")) return st;
    return guarded([&] {
        const auto spec = ExperimentSpec::from_json(experiment_json);
        *out_json = dup_string(result_table_to_json(run_experiment(spec, threads)));
        return RM_OK;
    });
}

rm_status rm_experiment_run_csv(const char* experiment_json, int threads,
                                char** out_csv) {
    if (auto st = require(experiment_json && out_csv, "null argument")) return st;
    return guarded([&] {
        const auto spec = ExperimentSpec::from_json(experiment_json);
        *out_csv = dup_string(result_table_to_csv(run_experiment(spec, threads)));
        return RM_OK;
    });
}

rm_status rm_protocol_transcript_jsonl(const char* experiment_json, int64_t n,
                                       uint64_t trial, char** out_jsonl) {
    if (auto st = require(experiment_json && out_jsonl, "null argument")) return st;
    return guarded([&] {
        const auto spec = ExperimentSpec::from_json(experiment_json);
        if (spec.strategy != "main")
            throw std::invalid_argument("transcript export requires the main strategy");
        const int k = spec.resolve_k(n);
        ProtocolConfig cfg;
        cfg.n = n;
        cfg.k = k;
        cfg.eps = spec.eps;
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
        Rng rng(derive_seed(spec.master_seed, spec.strategy,
                            static_cast<std::uint64_t>(n), trial));
        *out_jsonl = dup_string(run_protocol(spec.source, spec.channel, cfg, rng).to_jsonl());
        return RM_OK;
    });
}

rm_status rm_transcript_validate_jsonl(const char* jsonl, int k, int codebook_size,
                                       char** out_summary_json) {
    if (auto st = require(jsonl != nullptr, "null argument")) return st;
    rm_status status = RM_OK;
    const rm_status parse_status = guarded([&] {
        std::istringstream is(jsonl);
        std::string line;
        long expected_index = 1;
        long records = 0;
        std::string problem;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            const long index = j.at("index").get<long>();
            const long alpha = j.at("alpha").get<long>();
            const long cw = j.at("codeword_index").get<long>();
            if (index != expected_index) {
                problem = "non-consecutive block index " + std::to_string(index);
                break;
            }
            if (alpha < 0 || (codebook_size > 0 && alpha >= codebook_size) ||
                (codebook_size <= 0 && alpha > k)) {
                problem = "alpha out of range at block " + std::to_string(index);
                break;
            }
            if (cw != alpha) {
                problem = "codeword index disagrees with alpha at block " +
                          std::to_string(index);
                break;
            }
            ++expected_index;
            ++records;
        }
        nlohmann::json summary;
        summary["records"] = records;
        summary["valid"] = problem.empty();
        if (!problem.empty()) summary["problem"] = problem;
        if (out_summary_json) *out_summary_json = dup_string(summary.dump());
        if (!problem.empty()) {
            g_last_error = problem;
            status = RM_ERR_VERIFY;
        }
        return RM_OK;
    });
    return parse_status != RM_OK ? parse_status : status;
}

/* ---- verification oracle suite ------------------------------------------ */

rm_status rm_verify_suite_json(int max_k, uint64_t seed, char** out_json) {
    if (auto st = require(out_json != nullptr, "null output pointer")) return st;
    rm_status status = RM_OK;
    const rm_status run_status = guarded([&] {
        const auto reports = run_verification_suite(max_k, seed);
        *out_json = dup_string(reports_to_json(reports));
        if (!all_satisfied(reports)) {
            g_last_error = "verification suite found violated bounds";
            status = RM_ERR_VERIFY;
        }
        return RM_OK;
    });
    return run_status != RM_OK ? run_status : status;
}

} // extern "C"
