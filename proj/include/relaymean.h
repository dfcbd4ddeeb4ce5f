/* C interface to the relaymean library: mean estimation over noisy relay
 * channels, error-exponent calculators, codebook construction, Monte Carlo
 * experiments, and exact verification oracles.
 *
 * All functions that can fail return an rm_status; on failure a thread-local
 * message is available from rm_last_error().  Strings returned through
 * char** out parameters are heap-allocated and must be released with
 * rm_string_free().
 */
#ifndef RELAYMEAN_H
#define RELAYMEAN_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rm_status {
    RM_OK = 0,
    RM_ERR_INVALID = 1, /* invalid arguments or configuration */
    RM_ERR_RUNTIME = 2, /* execution failure */
    RM_ERR_VERIFY = 3   /* a verification check failed */
} rm_status;

typedef struct rm_channel rm_channel;
typedef struct rm_codebook rm_codebook;

const char* rm_version(void);
const char* rm_last_error(void);
void rm_string_free(char* s);

/* ---- channels ---------------------------------------------------------- */

rm_status rm_channel_create_bsc(double p, rm_channel** out);
/* Accepts {"type":"bsc","p":0.1} or {"type":"dmc","matrix":[[...],...]}. */
rm_status rm_channel_from_json(const char* json, rm_channel** out);
rm_status rm_channel_to_json(const rm_channel* ch, char** out_json);
int rm_channel_input_size(const rm_channel* ch);
int rm_channel_output_size(const rm_channel* ch);
/* Zero-rate exponent; value may be +infinity.  input_dist, when non-null,
 * must have room for rm_channel_input_size(ch) doubles. */
rm_status rm_channel_zero_rate_exponent(const rm_channel* ch, double* value,
                                        double* input_dist);
void rm_channel_free(rm_channel* ch);

/* ---- analytic exponents ------------------------------------------------- */

/* JSON report of all named exponents for one (source, channel, eps). */
rm_status rm_exponent_report_json(const char* source_json, const char* channel_json,
                                  double eps, char** out_json);
/* fix is "p=<value>" (eps sweep) or "eps=<value>" (p sweep). */
rm_status rm_sweep_csv(const char* fix, int grid_points, char** out_csv);
rm_status rm_sweep_svg(const char* fix, int grid_points, char** out_svg);

/* ---- codebooks ----------------------------------------------------------- */

rm_status rm_codebook_generate_binary(int k, int m, double min_fraction,
                                      uint64_t seed, int max_attempts,
                                      rm_codebook** out);
rm_status rm_codebook_generate_dmc(const rm_channel* ch, int k, int m, double slack,
                                   uint64_t seed, int max_attempts, rm_codebook** out);
rm_status rm_codebook_save(const rm_codebook* cb, const char* path);
rm_status rm_codebook_load(const char* path, rm_codebook** out);
/* Exact recomputation of the minimum pairwise distance.  The channel is
 * required for Bhattacharyya-metric codebooks and must be null for Hamming.
 * pair_lo/pair_hi receive the offending pair, or -1 when fewer than two
 * codewords exist. */
rm_status rm_codebook_verify(const rm_codebook* cb, const rm_channel* ch,
                             double* min_pairwise, int* pair_lo, int* pair_hi);
int rm_codebook_size(const rm_codebook* cb);
int rm_codebook_length(const rm_codebook* cb);
void rm_codebook_free(rm_codebook* cb);

/* ---- Monte Carlo experiments -------------------------------------------- */

/* experiment_json follows the documented ExperimentSpec schema.  threads = 0
 * uses all cores; the thread count never changes the results. */
rm_status rm_experiment_run_json(const char* experiment_json, int threads,
                                 char** out_json);
rm_status rm_experiment_run_csv(const char* experiment_json, int threads,
                                char** out_csv);
/* Audit transcript (JSON lines: index, alpha, codeword_index) of a single
 * protocol trial of the "main" strategy at budget n. */
rm_status rm_protocol_transcript_jsonl(const char* experiment_json, int64_t n,
                                       uint64_t trial, char** out_jsonl);
/* Structural validation of a transcript: indices increase from 1, alpha and
 * codeword_index agree and stay within the codebook. */
rm_status rm_transcript_validate_jsonl(const char* jsonl, int k, int codebook_size,
                                       char** out_summary_json);

/* ---- verification oracle suite ------------------------------------------ */

/* Runs the exact small-instance checks; returns RM_ERR_VERIFY when any bound
 * is violated.  out_json receives per-check reports either way. */
rm_status rm_verify_suite_json(int max_k, uint64_t seed, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* RELAYMEAN_H */
