#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relaymean/channel.hpp"
#include "relaymean/rng.hpp"

namespace relaymean {

enum class CodebookMetric { hamming, bhattacharyya };

struct Codebook {
    std::size_t k = 0;                 // codeword length
    std::vector<Word> codewords;       // M words over the input alphabet
    CodebookMetric metric = CodebookMetric::hamming;
    // Minimum over all distinct pairs: symbols for Hamming, nats for d_B.
    // +infinity by convention when there are no pairs.
    double min_pairwise = 0.0;

    std::size_t size() const { return codewords.size(); }
};

// Raised when rejection sampling runs out of attempts.
class CodebookGenerationError : public std::runtime_error {
public:
    CodebookGenerationError(const std::string& what, double best_min_pairwise,
                            int attempts_used)
        : std::runtime_error(what),
          best_min_pairwise(best_min_pairwise),
          attempts_used(attempts_used) {}
    double best_min_pairwise;
    int attempts_used;
};

// Binary codebook with pairwise Hamming distance >= min_fraction * k,
// found by uniform resampling of codewords participating in violating pairs.
Codebook generate_binary(std::size_t k, std::size_t m, double min_fraction, Rng& rng,
                         int max_attempts = 200);

// Codebook with i.i.d. symbols from the input distribution attaining the
// zero-rate exponent; every distinct pair must satisfy word-level
// d_B >= (1 - slack) * k * E_chan(0).  For channels with infinite zero-rate
// exponent every pair must realize an infinite-d_B symbol pair.
Codebook generate_dmc(std::size_t k, std::size_t m, const ChannelModel& channel,
                      Rng& rng, double slack = 0.2, int max_attempts = 200);

struct VerifyResult {
    double min_pairwise = 0.0;
    std::optional<std::pair<std::size_t, std::size_t>> offending_pair;
};

// Exact O(M^2 k) recomputation of the minimum pairwise distance.  The
// channel argument is required for the Bhattacharyya metric and must be
// absent for Hamming.
VerifyResult verify(const Codebook& codebook, const ChannelModel* channel = nullptr);

// Text format: header "k m metric", then one codeword per line as a digit
// string.  Only alphabets up to 10 symbols are serializable.
std::string codebook_to_text(const Codebook& codebook);
Codebook codebook_from_text(const std::string& text);
void save_codebook(const Codebook& codebook, const std::string& path);
Codebook load_codebook(const std::string& path);

} // namespace relaymean
