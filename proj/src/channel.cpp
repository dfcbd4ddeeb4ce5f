#include "relaymean/channel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace relaymean {

namespace {
constexpr double kRowSumTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

ChannelModel::ChannelModel(std::size_t input_size, std::size_t output_size,
                           std::vector<double> matrix)
    : input_size_(input_size), output_size_(output_size), transition_(std::move(matrix)) {
    if (input_size_ == 0 || output_size_ == 0)
        throw std::invalid_argument("channel: alphabet sizes must be positive");
    if (transition_.size() != input_size_ * output_size_)
        throw std::invalid_argument("channel: matrix shape mismatch");
    for (std::size_t w = 0; w < input_size_; ++w) {
        double row_sum = 0.0;
        for (std::size_t z = 0; z < output_size_; ++z) {
            const double v = transition_[w * output_size_ + z];
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument("channel: entries must lie in [0,1]");
            row_sum += v;
        }
        if (std::abs(row_sum - 1.0) > kRowSumTol)
            throw std::invalid_argument("channel: row " + std::to_string(w) +
                                        " does not sum to 1");
    }
    log_transition_.resize(transition_.size());
    for (std::size_t i = 0; i < transition_.size(); ++i)
        log_transition_[i] = transition_[i] > 0.0 ? std::log(transition_[i]) : -kInf;
    row_cdf_.resize(transition_.size());
    for (std::size_t w = 0; w < input_size_; ++w) {
        double acc = 0.0;
        for (std::size_t z = 0; z < output_size_; ++z) {
            acc += transition_[w * output_size_ + z];
            row_cdf_[w * output_size_ + z] = acc;
        }
        row_cdf_[w * output_size_ + output_size_ - 1] = 1.0;
    }
}

bool ChannelModel::is_bsc(double* p_out) const {
    if (input_size_ != 2 || output_size_ != 2) return false;
    const double p = transition_[1];
    if (std::abs(transition_[2] - p) > kRowSumTol) return false;
    if (std::abs(transition_[0] - (1.0 - p)) > kRowSumTol) return false;
    if (std::abs(transition_[3] - (1.0 - p)) > kRowSumTol) return false;
    if (!(p > 0.0 && p < 0.5)) return false;
    if (p_out) *p_out = p;
    return true;
}

ChannelModel make_bsc(double p) {
    if (!(p > 0.0 && p < 0.5))
        throw std::invalid_argument("make_bsc: p must lie in (0, 1/2)");
    return ChannelModel(2, 2, {1.0 - p, p, p, 1.0 - p});
}

ChannelModel make_identity_channel(std::size_t alphabet_size) {
    std::vector<double> m(alphabet_size * alphabet_size, 0.0);
    for (std::size_t i = 0; i < alphabet_size; ++i) m[i * alphabet_size + i] = 1.0;
    return ChannelModel(alphabet_size, alphabet_size, std::move(m));
}

ChannelModel ChannelModel::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    const std::string type = j.at("type").get<std::string>();
    if (type == "bsc") return make_bsc(j.at("p").get<double>());
    if (type == "dmc") {
        const auto& rows = j.at("matrix");
        if (!rows.is_array() || rows.empty())
            throw std::invalid_argument("channel json: matrix must be a non-empty array");
        const std::size_t in = rows.size();
        const std::size_t out = rows[0].size();
        std::vector<double> m;
        m.reserve(in * out);
        for (const auto& row : rows) {
            if (row.size() != out)
                throw std::invalid_argument("channel json: ragged matrix");
            for (const auto& v : row) m.push_back(v.get<double>());
        }
        return ChannelModel(in, out, std::move(m));
    }
    throw std::invalid_argument("channel json: unknown type '" + type + "'");
}

std::string ChannelModel::to_json() const {
    nlohmann::json j;
    double p = 0.0;
    if (is_bsc(&p)) {
        j["type"] = "bsc";
        j["p"] = p;
    } else {
        j["type"] = "dmc";
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t w = 0; w < input_size_; ++w) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t z = 0; z < output_size_; ++z) row.push_back(prob(w, z));
            rows.push_back(row);
        }
        j["matrix"] = rows;
    }
    return j.dump();
}

Word transmit(const ChannelModel& channel, const Word& input, Rng& rng) {
    const std::size_t out_size = channel.output_size();
    Word output;
    output.symbols.resize(input.length());
    for (std::size_t i = 0; i < input.length(); ++i) {
        const Symbol w = input.symbols[i];
        if (w >= channel.input_size())
            throw std::invalid_argument("transmit: input symbol out of range");
        const double u = rng.uniform01();
        const double* cdf = channel.row_cdf_.data() + w * out_size;
        std::size_t z = 0;
        while (z + 1 < out_size && u >= cdf[z]) ++z;
        output.symbols[i] = static_cast<Symbol>(z);
    }
    return output;
}

std::vector<double> symbol_db_matrix(const ChannelModel& channel) {
    const std::size_t n = channel.input_size();
    std::vector<double> d(n * n, 0.0);
    for (std::size_t w = 0; w < n; ++w) {
        for (std::size_t w2 = w + 1; w2 < n; ++w2) {
            double rho = 0.0;
            for (std::size_t z = 0; z < channel.output_size(); ++z)
                rho += std::sqrt(channel.prob(static_cast<Symbol>(w), static_cast<Symbol>(z)) *
                                 channel.prob(static_cast<Symbol>(w2), static_cast<Symbol>(z)));
            const double db = rho > 0.0 ? -std::log(rho) : kInf;
            d[w * n + w2] = db;
            d[w2 * n + w] = db;
        }
    }
    return d;
}

double word_log_likelihood(const ChannelModel& channel, const Word& input,
                           const Word& output) {
    if (input.length() != output.length())
        throw std::invalid_argument("word_log_likelihood: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < input.length(); ++i) {
        if (input.symbols[i] >= channel.input_size() ||
            output.symbols[i] >= channel.output_size())
            throw std::invalid_argument("word_log_likelihood: symbol out of range");
        acc += channel.log_prob(input.symbols[i], output.symbols[i]);
    }
    return acc;
}

} // namespace relaymean
