#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>

#include "relaymean.h"

namespace {
struct Str {
    char* s = nullptr;
    ~Str() { rm_string_free(s); }
};
} // namespace

TEST_CASE("channel lifecycle and error reporting") {
    rm_channel* ch = nullptr;
    REQUIRE(rm_channel_create_bsc(0.1, &ch) == RM_OK);
    CHECK(rm_channel_input_size(ch) == 2);
    CHECK(rm_channel_output_size(ch) == 2);
    double e0 = 0.0;
    double dist[2] = {0, 0};
    REQUIRE(rm_channel_zero_rate_exponent(ch, &e0, dist) == RM_OK);
    CHECK(std::abs(e0 - 0.25541281188299536) < 1e-9);
    CHECK(std::abs(dist[0] - 0.5) < 1e-9);
    Str js;
    REQUIRE(rm_channel_to_json(ch, &js.s) == RM_OK);
    CHECK(std::string(js.s).find("bsc") != std::string::npos);
    rm_channel_free(ch);

    rm_channel* bad = nullptr;
    CHECK(rm_channel_create_bsc(0.7, &bad) == RM_ERR_INVALID);
    CHECK(std::strlen(rm_last_error()) > 0);
    CHECK(rm_channel_from_json("{\"type\":\"nope\"}", &bad) == RM_ERR_INVALID);
}

TEST_CASE("exponent report via the C API") {
    Str out;
    REQUIRE(rm_exponent_report_json(R"({"kind":"bernoulli","theta_star":0.5})",
                                    R"({"type":"bsc","p":0.1})", 0.1,
                                    &out.s) == RM_OK);
    const std::string s(out.s);
    CHECK(s.find("\"e_src\"") != std::string::npos);
    CHECK(s.find("\"e_achievable\"") != std::string::npos);
    CHECK(s.find("\"message_count_m\": 5") != std::string::npos);

    Str bad;
    CHECK(rm_exponent_report_json("not json", R"({"type":"bsc","p":0.1})", 0.1,
                                  &bad.s) == RM_ERR_RUNTIME);
}

TEST_CASE("sweep csv and svg through the C API") {
    Str csv;
    REQUIRE(rm_sweep_csv("p=0.1", 12, &csv.s) == RM_OK);
    CHECK(std::string(csv.s).rfind("eps,e_src,", 0) == 0);
    Str svg;
    REQUIRE(rm_sweep_svg("eps=0.1", 12, &svg.s) == RM_OK);
    CHECK(std::string(svg.s).rfind("<svg", 0) == 0);
    Str bad;
    CHECK(rm_sweep_csv("q=0.1", 12, &bad.s) == RM_ERR_INVALID);
}

TEST_CASE("codebook round trip through the C API") {
    rm_codebook* cb = nullptr;
    REQUIRE(rm_codebook_generate_binary(32, 8, 0.4, 7, 200, &cb) == RM_OK);
    CHECK(rm_codebook_size(cb) == 8);
    CHECK(rm_codebook_length(cb) == 32);
    double minp = 0;
    int lo = -1, hi = -1;
    REQUIRE(rm_codebook_verify(cb, nullptr, &minp, &lo, &hi) == RM_OK);
    CHECK(minp >= 0.4 * 32);
    CHECK(lo >= 0);

    const char* path = "/tmp/relaymean_capi_cb.txt";
    REQUIRE(rm_codebook_save(cb, path) == RM_OK);
    rm_codebook* back = nullptr;
    REQUIRE(rm_codebook_load(path, &back) == RM_OK);
    CHECK(rm_codebook_size(back) == 8);
    double minp2 = 0;
    REQUIRE(rm_codebook_verify(back, nullptr, &minp2, nullptr, nullptr) == RM_OK);
    CHECK(minp2 == minp);
    rm_codebook_free(back);
    rm_codebook_free(cb);
    std::remove(path);

    rm_codebook* fail = nullptr;
    CHECK(rm_codebook_generate_binary(4, 16, 0.4, 1, 20, &fail) == RM_ERR_RUNTIME);
}

TEST_CASE("experiment run is deterministic through the C API") {
    const char* config = R"({
        "strategy": "direct",
        "source": {"kind": "bernoulli", "theta_star": 0.5},
        "channel": {"type": "bsc", "p": 0.1},
        "eps": 0.45,
        "n_values": [30, 60],
        "trials": 40,
        "master_seed": 3
    })";
    Str a, b;
    REQUIRE(rm_experiment_run_json(config, 1, &a.s) == RM_OK);
    REQUIRE(rm_experiment_run_json(config, 2, &b.s) == RM_OK);
    CHECK(std::string(a.s) == std::string(b.s));
    Str csv;
    REQUIRE(rm_experiment_run_csv(config, 0, &csv.s) == RM_OK);
    CHECK(std::string(csv.s).find("n,misses,trials") != std::string::npos);

    Str bad;
    CHECK(rm_experiment_run_json("{\"strategy\":\"warp\"}", 1, &bad.s) != RM_OK);
}

TEST_CASE("transcript export and validation") {
    const char* config = R"({
        "strategy": "main",
        "source": {"kind": "bernoulli", "theta_star": 0.4},
        "channel": {"type": "bsc", "p": 0.1},
        "eps": 0.2,
        "n_values": [64],
        "trials": 1,
        "master_seed": 11,
        "k_rule": "fixed:8"
    })";
    Str tr;
    REQUIRE(rm_protocol_transcript_jsonl(config, 64, 0, &tr.s) == RM_OK);
    const std::string text(tr.s);
    CHECK(text.find("\"alpha\"") != std::string::npos);

    Str summary;
    CHECK(rm_transcript_validate_jsonl(text.c_str(), 8, 9, &summary.s) == RM_OK);
    CHECK(std::string(summary.s).find("\"valid\":true") != std::string::npos);

    Str bad_summary;
    const char* bad = "{\"index\":1,\"alpha\":99,\"codeword_index\":99}\n";
    CHECK(rm_transcript_validate_jsonl(bad, 8, 9, &bad_summary.s) == RM_ERR_VERIFY);
}

TEST_CASE("verification suite through the C API") {
    Str out;
    REQUIRE(rm_verify_suite_json(4, 99, &out.s) == RM_OK);
    CHECK(std::string(out.s).find("\"all_satisfied\": true") != std::string::npos);
}
