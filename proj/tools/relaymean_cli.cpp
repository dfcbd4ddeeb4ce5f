// Command-line front end for the relaymean shared library.  Everything
// below goes through the C API in relaymean.h.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "relaymean.h"

namespace {

// Exit codes: 0 success, 1 invalid config, 2 runtime failure,
// 3 verification failure.
int exit_code(rm_status st) { return static_cast<int>(st); }

int fail(rm_status st, const std::string& context) {
    std::cerr << "error: " << context << ": " << rm_last_error() << "\n";
    return exit_code(st);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int write_output(const char* data, const std::string& path) {
    if (path.empty()) {
        std::cout << data;
        return 0;
    }
    std::ofstream out(path);
    if (!out) {
        std::cerr << "error: cannot write " << path << "\n";
        return 2;
    }
    out << data;
    return 0;
}

struct StringGuard {
    char* s = nullptr;
    ~StringGuard() { rm_string_free(s); }
};

struct ChannelGuard {
    rm_channel* ch = nullptr;
    ~ChannelGuard() { rm_channel_free(ch); }
};

struct CodebookGuard {
    rm_codebook* cb = nullptr;
    ~CodebookGuard() { rm_codebook_free(cb); }
};

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean estimation over noisy relay channels: exponents, codebooks, "
                 "simulations, verification"};
    app.require_subcommand(1);

    // ---- exponents ----
    auto* exponents = app.add_subcommand(
        "exponents", "analytic exponent report for one (source, channel, eps)");
    std::string exp_source = R"({"kind":"bernoulli","theta_star":0.5})";
    std::string exp_channel = R"({"type":"bsc","p":0.1})";
    double exp_eps = 0.1;
    std::string exp_out;
    exponents->add_option("--source", exp_source, "source JSON");
    exponents->add_option("--channel", exp_channel, "channel JSON");
    exponents->add_option("--eps", exp_eps, "accuracy parameter")->required();
    exponents->add_option("--out", exp_out, "output file (stdout if omitted)");

    // ---- sweep ----
    auto* sweep = app.add_subcommand(
        "sweep", "analytic exponent sweep over eps (fixed p) or p (fixed eps)");
    std::string sweep_fix = "p=0.1";
    int sweep_grid = 100;
    std::string sweep_out;
    sweep->add_option("--fix", sweep_fix, "fixed parameter, 'p=0.1' or 'eps=0.1'")
        ->required();
    sweep->add_option("--grid", sweep_grid, "number of grid points (default 100)");
    sweep->add_option("--out", sweep_out,
                      "output file; .svg renders a chart, anything else gets CSV");

    // ---- simulate ----
    auto* simulate =
        app.add_subcommand("simulate", "Monte Carlo experiment from a config file");
    std::string sim_config;
    std::string sim_out_dir;
    int sim_threads = 0;
    std::string sim_transcript_out;
    std::int64_t sim_transcript_n = 0;
    std::uint64_t sim_transcript_trial = 0;
    simulate->add_option("--config", sim_config, "experiment JSON file")->required();
    simulate->add_option("--out", sim_out_dir,
                         "output directory for results.json/results.csv");
    simulate->add_option("--threads", sim_threads, "worker threads (0 = all cores)");
    simulate->add_option("--transcript-out", sim_transcript_out,
                         "also dump one protocol transcript (JSON lines) to this file");
    simulate->add_option("--transcript-n", sim_transcript_n,
                         "sample budget for the transcript (required with --transcript-out)");
    simulate->add_option("--transcript-trial", sim_transcript_trial,
                         "trial index for the transcript (default 0)");

    // ---- codebook ----
    auto* codebook = app.add_subcommand("codebook", "generate and verify codebooks");
    codebook->require_subcommand(1);
    auto* cb_gen = codebook->add_subcommand("generate", "generate a codebook file");
    std::string cb_kind = "binary";
    int cb_k = 0, cb_m = 0, cb_attempts = 200;
    double cb_min_fraction = 0.4, cb_slack = 0.2;
    std::uint64_t cb_seed = 1;
    std::string cb_channel, cb_out;
    cb_gen->add_option("--kind", cb_kind, "binary (Hamming) or dmc (Bhattacharyya)");
    cb_gen->add_option("--k", cb_k, "codeword length")->required();
    cb_gen->add_option("--m", cb_m, "number of codewords")->required();
    cb_gen->add_option("--min-fraction", cb_min_fraction,
                       "Hamming distance target as a fraction of k");
    cb_gen->add_option("--slack", cb_slack, "Bhattacharyya slack fraction");
    cb_gen->add_option("--channel", cb_channel, "channel JSON (dmc kind)");
    cb_gen->add_option("--seed", cb_seed, "generation seed");
    cb_gen->add_option("--max-attempts", cb_attempts, "restart budget");
    cb_gen->add_option("--out", cb_out, "output file")->required();

    auto* cb_verify = codebook->add_subcommand("verify", "recheck a codebook file");
    std::string cbv_file, cbv_channel;
    cb_verify->add_option("--file", cbv_file, "codebook file")->required();
    cb_verify->add_option("--channel", cbv_channel,
                          "channel JSON (required for Bhattacharyya codebooks)");

    // ---- verify ----
    auto* verify = app.add_subcommand(
        "verify", "exact oracle suite, or structural transcript validation");
    int verify_max_k = 6;
    std::uint64_t verify_seed = 1;
    std::string verify_out, verify_transcript;
    int verify_k = 0, verify_codebook_size = 0;
    verify->add_option("--max-k", verify_max_k, "largest block length to enumerate");
    verify->add_option("--seed", verify_seed, "suite seed");
    verify->add_option("--out", verify_out, "output file (stdout if omitted)");
    verify->add_option("--transcript", verify_transcript,
                       "validate a transcript JSONL file instead of running the suite");
    verify->add_option("--k", verify_k, "block length for transcript validation");
    verify->add_option("--codebook-size", verify_codebook_size,
                       "codebook size for transcript validation");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*exponents) {
            StringGuard out;
            const auto st = rm_exponent_report_json(exp_source.c_str(),
                                                    exp_channel.c_str(), exp_eps, &out.s);
            if (st != RM_OK) return fail(st, "exponents");
            return write_output(out.s, exp_out);
        }

        if (*sweep) {
            StringGuard out;
            const bool svg = ends_with(sweep_out, ".svg");
            const auto st = svg ? rm_sweep_svg(sweep_fix.c_str(), sweep_grid, &out.s)
                                : rm_sweep_csv(sweep_fix.c_str(), sweep_grid, &out.s);
            if (st != RM_OK) return fail(st, "sweep");
            return write_output(out.s, sweep_out);
        }

        if (*simulate) {
            const auto config = read_file(sim_config);
            StringGuard json, csv;
            auto st = rm_experiment_run_json(config.c_str(), sim_threads, &json.s);
            if (st != RM_OK) return fail(st, "simulate");
            st = rm_experiment_run_csv(config.c_str(), sim_threads, &csv.s);
            if (st != RM_OK) return fail(st, "simulate");
            if (sim_out_dir.empty()) {
                std::cout << json.s;
            } else {
                if (int rc = write_output(json.s, sim_out_dir + "/results.json")) return rc;
                if (int rc = write_output(csv.s, sim_out_dir + "/results.csv")) return rc;
                std::cout << "wrote " << sim_out_dir << "/results.json and results.csv\n";
            }
            if (!sim_transcript_out.empty()) {
                StringGuard tr;
                st = rm_protocol_transcript_jsonl(config.c_str(), sim_transcript_n,
                                                  sim_transcript_trial, &tr.s);
                if (st != RM_OK) return fail(st, "transcript export");
                if (int rc = write_output(tr.s, sim_transcript_out)) return rc;
            }
            return 0;
        }

        if (*cb_gen) {
            CodebookGuard cb;
            rm_status st;
            if (cb_kind == "binary") {
                st = rm_codebook_generate_binary(cb_k, cb_m, cb_min_fraction, cb_seed,
                                                 cb_attempts, &cb.cb);
            } else if (cb_kind == "dmc") {
                if (cb_channel.empty()) {
                    std::cerr << "error: --channel is required for --kind dmc\n";
                    return 1;
                }
                ChannelGuard ch;
                st = rm_channel_from_json(cb_channel.c_str(), &ch.ch);
                if (st != RM_OK) return fail(st, "codebook generate");
                st = rm_codebook_generate_dmc(ch.ch, cb_k, cb_m, cb_slack, cb_seed,
                                              cb_attempts, &cb.cb);
            } else {
                std::cerr << "error: unknown codebook kind '" << cb_kind << "'\n";
                return 1;
            }
            if (st != RM_OK) return fail(st, "codebook generate");
            st = rm_codebook_save(cb.cb, cb_out.c_str());
            if (st != RM_OK) return fail(st, "codebook save");
            std::cout << "wrote " << cb_out << " (k=" << rm_codebook_length(cb.cb)
                      << ", m=" << rm_codebook_size(cb.cb) << ")\n";
            return 0;
        }

        if (*cb_verify) {
            CodebookGuard cb;
            auto st = rm_codebook_load(cbv_file.c_str(), &cb.cb);
            if (st != RM_OK) return fail(st, "codebook load");
            ChannelGuard ch;
            if (!cbv_channel.empty()) {
                st = rm_channel_from_json(cbv_channel.c_str(), &ch.ch);
                if (st != RM_OK) return fail(st, "codebook verify");
            }
            double min_pairwise = 0;
            int lo = -1, hi = -1;
            st = rm_codebook_verify(cb.cb, ch.ch, &min_pairwise, &lo, &hi);
            if (st != RM_OK) return fail(st, "codebook verify");
            std::cout << "k=" << rm_codebook_length(cb.cb)
                      << " m=" << rm_codebook_size(cb.cb)
                      << " min_pairwise=" << min_pairwise;
            if (lo >= 0) std::cout << " attained_by=(" << lo << "," << hi << ")";
            std::cout << "\n";
            return 0;
        }

        if (*verify) {
            if (!verify_transcript.empty()) {
                if (verify_k < 1) {
                    std::cerr << "error: --k is required with --transcript\n";
                    return 1;
                }
                const auto text = read_file(verify_transcript);
                StringGuard summary;
                const auto st = rm_transcript_validate_jsonl(
                    text.c_str(), verify_k, verify_codebook_size, &summary.s);
                if (summary.s) std::cout << summary.s << "\n";
                if (st != RM_OK) return fail(st, "transcript validation");
                return 0;
            }
            StringGuard out;
            const auto st = rm_verify_suite_json(verify_max_k, verify_seed, &out.s);
            if (out.s) {
                if (int rc = write_output(out.s, verify_out)) return rc;
            }
            if (st != RM_OK) return fail(st, "verify");
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
