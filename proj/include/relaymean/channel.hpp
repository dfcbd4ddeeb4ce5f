#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relaymean/rng.hpp"

namespace relaymean {

using Symbol = std::uint32_t;

// A string of channel-input (or output) alphabet indices.
struct Word {
    std::vector<Symbol> symbols;

    Word() = default;
    explicit Word(std::vector<Symbol> s) : symbols(std::move(s)) {}

    std::size_t length() const { return symbols.size(); }
    bool operator==(const Word&) const = default;
};

// Discrete memoryless channel as a row-stochastic transition matrix.
// Immutable after construction; safe to share across threads.
class ChannelModel {
public:
    // matrix is row-major, entry (w, z) = P(z | w).  Rows must sum to 1
    // within 1e-12 and all entries must lie in [0, 1].
    ChannelModel(std::size_t input_size, std::size_t output_size,
                 std::vector<double> matrix);

    std::size_t input_size() const { return input_size_; }
    std::size_t output_size() const { return output_size_; }

    double prob(Symbol w, Symbol z) const { return transition_[w * output_size_ + z]; }
    // log P(z|w); -infinity when the entry is zero.
    double log_prob(Symbol w, Symbol z) const { return log_transition_[w * output_size_ + z]; }

    bool is_bsc(double* p_out = nullptr) const;

    // Parses {"type":"bsc","p":0.1} or {"type":"dmc","matrix":[[...],...]}.
    static ChannelModel from_json(const std::string& text);
    std::string to_json() const;

private:
    std::size_t input_size_ = 0;
    std::size_t output_size_ = 0;
    std::vector<double> transition_;
    std::vector<double> log_transition_;
    std::vector<double> row_cdf_; // per-row cumulative sums for sampling
    friend Word transmit(const ChannelModel&, const Word&, Rng&);
};

// Binary symmetric channel with crossover probability p in (0, 1/2).
ChannelModel make_bsc(double p);

// Noiseless identity channel over an alphabet of the given size.
ChannelModel make_identity_channel(std::size_t alphabet_size);

// Sends each symbol independently through the channel.
Word transmit(const ChannelModel& channel, const Word& input, Rng& rng);

// Matrix of per-symbol Bhattacharyya distances, entry (w, w') =
// -log sum_z sqrt(P(z|w) P(z|w')).  Symmetric, zero diagonal, +infinity
// for disjoint supports.
std::vector<double> symbol_db_matrix(const ChannelModel& channel);

// log P(output | input) over the memoryless law; -infinity allowed.
double word_log_likelihood(const ChannelModel& channel, const Word& input,
                           const Word& output);

} // namespace relaymean
