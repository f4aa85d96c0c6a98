#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "transtack/errors.hpp"
#include "transtack/io.hpp"
#include "transtack/random.hpp"
#include "transtack/timeseries.hpp"

namespace transtack {

// Single-hidden-layer feedforward network with sigmoid hidden and output
// units:
//
//   prediction = g(output_bias + sum_h v_h * g(hidden_bias_h + sum_d w_dh * x_d))
//
// input_to_hidden is stored row-major by input, i.e. w_dh lives at
// input_to_hidden[d * H + h].
struct NetworkParams {
    int input_dim = 0;     // D
    int hidden_count = 0;  // H
    std::vector<double> input_to_hidden;   // D*H
    std::vector<double> hidden_bias;       // H
    std::vector<double> hidden_to_output;  // H
    double output_bias = 0.0;

    std::size_t parameter_count() const {
        return input_to_hidden.size() + hidden_bias.size() + hidden_to_output.size() + 1;
    }
};

struct TrainingConfig {
    int epochs = 2000;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
    bool shuffle_each_epoch = true;
};

// Training-set RMSE captured after every epoch.
struct TrainingTrace {
    std::vector<double> epoch_rmse;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Weights drawn i.i.d. uniform on [-0.5, 0.5), in serialization order, so a
// seed fixes the network bit-for-bit.
inline NetworkParams init_network(int input_dim, int hidden_count, std::uint64_t seed) {
    if (input_dim < 1) throw Error("input dimension must be positive");
    if (hidden_count < 1) throw Error("hidden count must be positive");

    std::mt19937_64 engine(seed);
    NetworkParams params;
    params.input_dim = input_dim;
    params.hidden_count = hidden_count;
    params.input_to_hidden.resize(static_cast<std::size_t>(input_dim) *
                                  static_cast<std::size_t>(hidden_count));
    params.hidden_bias.resize(static_cast<std::size_t>(hidden_count));
    params.hidden_to_output.resize(static_cast<std::size_t>(hidden_count));
    for (double& w : params.input_to_hidden) w = uniform_in(engine, -0.5, 0.5);
    for (double& w : params.hidden_bias) w = uniform_in(engine, -0.5, 0.5);
    for (double& w : params.hidden_to_output) w = uniform_in(engine, -0.5, 0.5);
    params.output_bias = uniform_in(engine, -0.5, 0.5);
    return params;
}

namespace detail {

// Forward pass that also exposes the hidden activations; `hidden` is caller
// scratch of size H.
inline double forward_into(const NetworkParams& params, std::span<const double> input,
                           std::vector<double>& hidden) {
    const int input_dim = params.input_dim;
    const int hidden_count = params.hidden_count;
    hidden.resize(static_cast<std::size_t>(hidden_count));
    for (int h = 0; h < hidden_count; ++h) {
        double z = params.hidden_bias[static_cast<std::size_t>(h)];
        for (int d = 0; d < input_dim; ++d) {
            z += params.input_to_hidden[static_cast<std::size_t>(d) *
                                            static_cast<std::size_t>(hidden_count) +
                                        static_cast<std::size_t>(h)] *
                 input[static_cast<std::size_t>(d)];
        }
        hidden[static_cast<std::size_t>(h)] = sigmoid(z);
    }
    double output_pre = params.output_bias;
    for (int h = 0; h < hidden_count; ++h) {
        output_pre += params.hidden_to_output[static_cast<std::size_t>(h)] *
                      hidden[static_cast<std::size_t>(h)];
    }
    return sigmoid(output_pre);
}

inline void check_input_dim(const NetworkParams& params, std::size_t input_size) {
    if (input_size != static_cast<std::size_t>(params.input_dim)) {
        throw DimensionMismatch("input length " + std::to_string(input_size) +
                                " does not match network input dimension " +
                                std::to_string(params.input_dim));
    }
}

}  // namespace detail

inline double forward(const NetworkParams& params, std::span<const double> input) {
    detail::check_input_dim(params, input.size());
    std::vector<double> hidden;
    return detail::forward_into(params, input, hidden);
}

// Partial derivatives of the per-pattern loss 0.5 * (prediction - target)^2
// with respect to every parameter, same layout as NetworkParams.
struct NetworkGradients {
    std::vector<double> input_to_hidden;
    std::vector<double> hidden_bias;
    std::vector<double> hidden_to_output;
    double output_bias = 0.0;
};

namespace detail {

inline void gradient_into(const NetworkParams& params, const Pattern& pattern,
                          NetworkGradients& out, std::vector<double>& hidden) {
    check_input_dim(params, pattern.input.size());
    const int input_dim = params.input_dim;
    const int hidden_count = params.hidden_count;
    const double prediction = forward_into(params, pattern.input, hidden);

    out.input_to_hidden.resize(params.input_to_hidden.size());
    out.hidden_bias.resize(params.hidden_bias.size());
    out.hidden_to_output.resize(params.hidden_to_output.size());

    const double residual = prediction - pattern.target;
    const double delta_output = residual * prediction * (1.0 - prediction);
    out.output_bias = delta_output;
    for (int h = 0; h < hidden_count; ++h) {
        const std::size_t hi = static_cast<std::size_t>(h);
        const double activation = hidden[hi];
        out.hidden_to_output[hi] = delta_output * activation;
        const double delta_hidden =
            delta_output * params.hidden_to_output[hi] * activation * (1.0 - activation);
        out.hidden_bias[hi] = delta_hidden;
        for (int d = 0; d < input_dim; ++d) {
            out.input_to_hidden[static_cast<std::size_t>(d) *
                                    static_cast<std::size_t>(hidden_count) +
                                hi] = delta_hidden * pattern.input[static_cast<std::size_t>(d)];
        }
    }
}

inline void apply_step(NetworkParams& params, const NetworkGradients& gradients,
                       double learning_rate) {
    for (std::size_t i = 0; i < params.input_to_hidden.size(); ++i) {
        params.input_to_hidden[i] -= learning_rate * gradients.input_to_hidden[i];
    }
    for (std::size_t i = 0; i < params.hidden_bias.size(); ++i) {
        params.hidden_bias[i] -= learning_rate * gradients.hidden_bias[i];
    }
    for (std::size_t i = 0; i < params.hidden_to_output.size(); ++i) {
        params.hidden_to_output[i] -= learning_rate * gradients.hidden_to_output[i];
    }
    params.output_bias -= learning_rate * gradients.output_bias;
}

}  // namespace detail

inline NetworkGradients gradient(const NetworkParams& params, const Pattern& pattern) {
    NetworkGradients gradients;
    std::vector<double> hidden;
    detail::gradient_into(params, pattern, gradients, hidden);
    return gradients;
}

inline double rmse(const std::vector<double>& observed, const std::vector<double>& predicted) {
    if (observed.size() != predicted.size()) {
        throw LengthMismatch("observed has " + std::to_string(observed.size()) +
                             " values, predicted has " + std::to_string(predicted.size()));
    }
    if (observed.empty()) throw EmptyInput("rmse of empty vectors is undefined");
    double sum_squares = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double diff = observed[i] - predicted[i];
        sum_squares += diff * diff;
    }
    return std::sqrt(sum_squares / static_cast<double>(observed.size()));
}

inline std::vector<double> predict_batch(const NetworkParams& params,
                                         const EmbeddedDataset& dataset) {
    std::vector<double> predictions;
    predictions.reserve(dataset.patterns.size());
    std::vector<double> hidden;
    for (const auto& pattern : dataset.patterns) {
        detail::check_input_dim(params, pattern.input.size());
        predictions.push_back(detail::forward_into(params, pattern.input, hidden));
    }
    return predictions;
}

// Per-pattern stochastic gradient descent. Each epoch visits every pattern
// once, in a freshly shuffled order drawn from the seeded engine (file order
// when shuffling is disabled), applying theta <- theta - lr * grad after
// each pattern. Deterministic given (params, dataset, config).
inline std::pair<NetworkParams, TrainingTrace> train_sgd(NetworkParams params,
                                                         const EmbeddedDataset& dataset,
                                                         const TrainingConfig& config) {
    if (dataset.patterns.empty()) throw EmptyDataset("cannot train on an empty dataset");
    if (dataset.embedding_dimension != params.input_dim) {
        throw DimensionMismatch("dataset input dimension " +
                                std::to_string(dataset.embedding_dimension) +
                                " does not match network input dimension " +
                                std::to_string(params.input_dim));
    }
    if (config.epochs < 1) throw Error("epochs must be >= 1");
    if (!(config.learning_rate > 0.0)) throw Error("learning rate must be positive");

    std::mt19937_64 engine(config.seed);
    std::vector<std::size_t> order(dataset.patterns.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainingTrace trace;
    trace.epoch_rmse.reserve(static_cast<std::size_t>(config.epochs));

    const std::vector<double> targets = targets_of(dataset);
    NetworkGradients gradients;
    std::vector<double> hidden;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle_each_epoch) shuffle(order, engine);
        for (const std::size_t index : order) {
            detail::gradient_into(params, dataset.patterns[index], gradients, hidden);
            detail::apply_step(params, gradients, config.learning_rate);
        }
        trace.epoch_rmse.push_back(rmse(targets, predict_batch(params, dataset)));
    }
    return {std::move(params), std::move(trace)};
}

// --- serialization --------------------------------------------------------

// Flat text format: header line "D H", then the weights in fixed order
// (input_to_hidden row-major by input then hidden, hidden_bias,
// hidden_to_output, output_bias) at 17 significant digits, which round-trips
// doubles bit-exactly.
inline void save_network(const NetworkParams& params, std::ostream& out) {
    out << params.input_dim << ' ' << params.hidden_count << '\n';
    for (int d = 0; d < params.input_dim; ++d) {
        for (int h = 0; h < params.hidden_count; ++h) {
            if (h > 0) out << ' ';
            out << format_double(
                params.input_to_hidden[static_cast<std::size_t>(d) *
                                           static_cast<std::size_t>(params.hidden_count) +
                                       static_cast<std::size_t>(h)]);
        }
        out << '\n';
    }
    for (int h = 0; h < params.hidden_count; ++h) {
        if (h > 0) out << ' ';
        out << format_double(params.hidden_bias[static_cast<std::size_t>(h)]);
    }
    out << '\n';
    for (int h = 0; h < params.hidden_count; ++h) {
        if (h > 0) out << ' ';
        out << format_double(params.hidden_to_output[static_cast<std::size_t>(h)]);
    }
    out << '\n';
    out << format_double(params.output_bias) << '\n';
    if (!out) throw IoError("failed writing network parameters");
}

inline NetworkParams load_network(std::istream& in) {
    int input_dim = 0;
    int hidden_count = 0;
    if (!(in >> input_dim >> hidden_count) || input_dim < 1 || hidden_count < 1) {
        throw ParseError(1, "malformed network header (expected \"D H\")");
    }
    NetworkParams params;
    params.input_dim = input_dim;
    params.hidden_count = hidden_count;
    params.input_to_hidden.resize(static_cast<std::size_t>(input_dim) *
                                  static_cast<std::size_t>(hidden_count));
    params.hidden_bias.resize(static_cast<std::size_t>(hidden_count));
    params.hidden_to_output.resize(static_cast<std::size_t>(hidden_count));

    const auto read_value = [&](double& slot) {
        if (!(in >> slot)) throw ParseError(0, "network file truncated");
    };
    for (double& w : params.input_to_hidden) read_value(w);
    for (double& w : params.hidden_bias) read_value(w);
    for (double& w : params.hidden_to_output) read_value(w);
    read_value(params.output_bias);
    return params;
}

inline void save_network_file(const NetworkParams& params, const std::filesystem::path& path) {
    std::ostringstream out;
    save_network(params, out);
    atomic_write_file(path, out.str());
}

inline NetworkParams load_network_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    return load_network(in);
}

}  // namespace transtack
