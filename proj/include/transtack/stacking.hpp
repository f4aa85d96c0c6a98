#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "transtack/errors.hpp"
#include "transtack/io.hpp"
#include "transtack/neuralnet.hpp"
#include "transtack/timeseries.hpp"

namespace transtack {

// Two-phase transfer stacking. Phase one trains one network per dataset
// (the target problem plus a related source problem); phase two maps data
// through every trained member and trains a combiner network on the stacked
// outputs. Testing mirrors training: stack the test set, then run the
// combiner.

enum class MemberRole { target, source };

inline const char* to_string(MemberRole role) {
    return role == MemberRole::target ? "target" : "source";
}

struct EnsembleMember {
    MemberRole role = MemberRole::target;
    NetworkParams network;
    std::string training_provenance;  // identifier of the dataset it was trained on
    double final_train_rmse = 0.0;    // last entry of its training trace
};

// Ensemble outputs as input features, original targets unchanged.
struct StackedDataset {
    std::size_t member_count = 0;             // K
    std::vector<std::vector<double>> inputs;  // N rows of K values
    std::vector<double> targets;              // N

    std::size_t size() const { return inputs.size(); }
    bool empty() const { return inputs.empty(); }

    // View as a trainable dataset of width K.
    EmbeddedDataset as_training_data() const {
        EmbeddedDataset dataset;
        dataset.embedding_dimension = static_cast<int>(member_count);
        dataset.time_lag = 1;
        dataset.patterns.reserve(inputs.size());
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            dataset.patterns.push_back(Pattern{inputs[i], targets[i]});
        }
        return dataset;
    }
};

// Phase one. Returns [target member, source member], trained with seeds
// config.seed and config.seed + 1 so one integer pins the whole ensemble.
// hidden_counts holds H per member in that same order.
inline std::vector<EnsembleMember> train_ensembles(const EmbeddedDataset& source_data,
                                                   const EmbeddedDataset& target_data,
                                                   std::span<const int> hidden_counts,
                                                   const TrainingConfig& config) {
    if (source_data.embedding_dimension != target_data.embedding_dimension ||
        source_data.time_lag != target_data.time_lag) {
        throw DimensionMismatch("source and target datasets disagree on (D, T)");
    }
    if (source_data.empty() || target_data.empty()) {
        throw EmptyDataset("ensemble members need non-empty training data");
    }
    if (hidden_counts.size() != 2) {
        throw DimensionMismatch("expected one hidden count per ensemble member");
    }

    const std::array<std::pair<MemberRole, const EmbeddedDataset*>, 2> plan = {{
        {MemberRole::target, &target_data},
        {MemberRole::source, &source_data},
    }};

    std::vector<EnsembleMember> members;
    members.reserve(plan.size());
    for (std::size_t k = 0; k < plan.size(); ++k) {
        const auto& [role, data] = plan[k];
        TrainingConfig member_config = config;
        member_config.seed = config.seed + k;
        NetworkParams initial =
            init_network(data->embedding_dimension, hidden_counts[k], member_config.seed);
        auto [trained, trace] = train_sgd(std::move(initial), *data, member_config);
        members.push_back(EnsembleMember{role, std::move(trained), to_string(role),
                                         trace.epoch_rmse.back()});
    }
    return members;
}

inline std::vector<EnsembleMember> train_ensembles(const EmbeddedDataset& source_data,
                                                   const EmbeddedDataset& target_data,
                                                   int hidden_count,
                                                   const TrainingConfig& config) {
    const std::array<int, 2> hidden_counts = {hidden_count, hidden_count};
    return train_ensembles(source_data, target_data, hidden_counts, config);
}

// Cell (i, k) is member k's prediction for pattern i; targets are copied
// through untouched and row order is preserved.
inline StackedDataset build_stacked_dataset(const std::vector<EnsembleMember>& members,
                                            const EmbeddedDataset& data) {
    if (members.empty()) throw EmptyInput("no ensemble members to stack");
    for (const auto& member : members) {
        if (member.network.input_dim != data.embedding_dimension) {
            throw DimensionMismatch("member input dimension " +
                                    std::to_string(member.network.input_dim) +
                                    " does not match dataset dimension " +
                                    std::to_string(data.embedding_dimension));
        }
    }

    StackedDataset stacked;
    stacked.member_count = members.size();
    stacked.inputs.reserve(data.patterns.size());
    stacked.targets.reserve(data.patterns.size());
    std::vector<double> hidden;
    for (const auto& pattern : data.patterns) {
        std::vector<double> row;
        row.reserve(members.size());
        for (const auto& member : members) {
            row.push_back(detail::forward_into(member.network, pattern.input, hidden));
        }
        stacked.inputs.push_back(std::move(row));
        stacked.targets.push_back(pattern.target);
    }
    return stacked;
}

// Phase two: the combiner's input width equals the member count.
inline NetworkParams train_combiner(const StackedDataset& stacked_train, int hidden_count,
                                    const TrainingConfig& config) {
    if (stacked_train.empty()) throw EmptyDataset("stacked training data is empty");
    NetworkParams initial = init_network(static_cast<int>(stacked_train.member_count),
                                         hidden_count, config.seed);
    auto [trained, trace] = train_sgd(std::move(initial), stacked_train.as_training_data(),
                                      config);
    return trained;
}

// As train_combiner, but also reports the final stacked-training RMSE.
inline std::pair<NetworkParams, double> train_combiner_traced(const StackedDataset& stacked_train,
                                                              int hidden_count,
                                                              const TrainingConfig& config) {
    if (stacked_train.empty()) throw EmptyDataset("stacked training data is empty");
    NetworkParams initial = init_network(static_cast<int>(stacked_train.member_count),
                                         hidden_count, config.seed);
    auto [trained, trace] = train_sgd(std::move(initial), stacked_train.as_training_data(),
                                      config);
    return {std::move(trained), trace.epoch_rmse.back()};
}

// Two-phase testing: stack the test data, run the combiner, score by RMSE.
inline double evaluate_transfer_stack(const std::vector<EnsembleMember>& members,
                                      const NetworkParams& combiner,
                                      const EmbeddedDataset& test_data) {
    if (test_data.empty()) throw EmptyDataset("test data is empty");
    if (combiner.input_dim != static_cast<int>(members.size())) {
        throw DimensionMismatch("combiner input dimension " + std::to_string(combiner.input_dim) +
                                " does not match member count " +
                                std::to_string(members.size()));
    }
    const StackedDataset stacked = build_stacked_dataset(members, test_data);
    const std::vector<double> predictions =
        predict_batch(combiner, stacked.as_training_data());
    return rmse(stacked.targets, predictions);
}

// --- stacked data file ------------------------------------------------------

// CSV mirror of the stacked dataset: `col_1,...,col_K,target`. Reading a file
// written here reproduces the dataset exactly to the written precision.
inline std::string stacked_to_csv(const StackedDataset& dataset) {
    std::string out;
    for (std::size_t k = 1; k <= dataset.member_count; ++k) {
        out += "col_" + std::to_string(k) + ",";
    }
    out += "target\n";
    for (std::size_t i = 0; i < dataset.inputs.size(); ++i) {
        for (const double value : dataset.inputs[i]) {
            out += format_double(value);
            out += ',';
        }
        out += format_double(dataset.targets[i]);
        out += '\n';
    }
    return out;
}

inline StackedDataset stacked_from_csv(std::string_view text) {
    StackedDataset dataset;
    std::size_t line_number = 0;
    bool header_seen = false;
    std::size_t offset = 0;
    while (offset <= text.size()) {
        const std::size_t newline = text.find('\n', offset);
        std::string_view line = (newline == std::string_view::npos)
                                    ? text.substr(offset)
                                    : text.substr(offset, newline - offset);
        offset = (newline == std::string_view::npos) ? text.size() + 1 : newline + 1;
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        const auto fields = split_fields(line, ',');
        if (!header_seen) {
            if (fields.size() < 2 || fields.back() != "target") {
                throw ParseError(line_number, "expected header col_1,...,col_K,target");
            }
            for (std::size_t k = 0; k + 1 < fields.size(); ++k) {
                if (fields[k] != "col_" + std::to_string(k + 1)) {
                    throw ParseError(line_number, "unexpected stacked column header");
                }
            }
            dataset.member_count = fields.size() - 1;
            header_seen = true;
            continue;
        }
        if (fields.size() != dataset.member_count + 1) {
            throw ParseError(line_number, "expected " + std::to_string(dataset.member_count + 1) +
                                              " fields, got " + std::to_string(fields.size()));
        }
        std::vector<double> row(dataset.member_count);
        for (std::size_t k = 0; k < dataset.member_count; ++k) {
            if (!parse_csv_double(fields[k], row[k])) {
                throw ParseError(line_number, "malformed value \"" + std::string(fields[k]) + "\"");
            }
        }
        double target = 0.0;
        if (!parse_csv_double(fields.back(), target)) {
            throw ParseError(line_number, "malformed target \"" + std::string(fields.back()) + "\"");
        }
        dataset.inputs.push_back(std::move(row));
        dataset.targets.push_back(target);
    }
    if (!header_seen) throw ParseError(1, "missing stacked data header");
    return dataset;
}

}  // namespace transtack
