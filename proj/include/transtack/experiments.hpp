#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "transtack/errors.hpp"
#include "transtack/io.hpp"
#include "transtack/neuralnet.hpp"
#include "transtack/stacking.hpp"
#include "transtack/timeseries.hpp"

namespace transtack {

// What feeds the combiner's stacked training data: the target training set
// alone, or the union of target and source training sets.
enum class StackingMode { target_only, union_both };

inline const char* to_string(StackingMode mode) {
    return mode == StackingMode::target_only ? "target-only" : "union";
}

struct ExperimentConfig {
    int embedding_dimension = 5;
    int time_lag = 1;
    int hidden_count = 7;
    double learning_rate = 0.1;
    int epochs = 2000;
    int runs = 30;
    std::uint64_t base_seed = 1;
    int first_test_year = 2006;
    StackingMode stacking_mode = StackingMode::target_only;
};

struct YearRange {
    int start_year = 0;
    int end_year = 0;  // exclusive

    bool operator==(const YearRange&) const = default;
};

// The two decade slices of the training window.
inline constexpr std::array<YearRange, 2> kTrainingDecades = {{
    {1985, 1995},
    {1995, 2005},
}};

inline std::string to_string(const YearRange& range) {
    return std::to_string(range.start_year) + "-" + std::to_string(range.end_year);
}

// One concrete experiment:
//   1  network trained on the target-basin training data
//   2  network trained on the source-basin training data
//   3  network trained on one duration category of the target training data,
//      tested on both the matching test category and the full test set
//   4  transfer stacking, source basin feeding the target problem
//   5  network trained on one decade of the target training data
// All are tested on the target-basin test split.
struct ExperimentSpec {
    int id = 1;
    std::optional<std::size_t> duration_category;  // index into kDurationCategories (exp 3)
    std::optional<YearRange> decade;               // exp 5
    ExperimentConfig config;

    std::string variant_label() const {
        if (id == 3 && duration_category) return kDurationCategories[*duration_category].label;
        if (id == 5 && decade) return to_string(*decade);
        return "";
    }

    void validate() const {
        if (id < 1 || id > 5) throw Error("experiment id must be in 1..5");
        if (id == 3) {
            if (!duration_category || *duration_category >= kDurationCategories.size()) {
                throw Error("experiment 3 needs a duration category");
            }
        } else if (duration_category) {
            throw Error("duration category only applies to experiment 3");
        }
        if (id == 5) {
            if (!decade || (*decade != kTrainingDecades[0] && *decade != kTrainingDecades[1])) {
                throw Error("experiment 5 needs one of the two training decades");
            }
        } else if (decade) {
            throw Error("decade only applies to experiment 5");
        }
        if (config.runs < 1) throw Error("runs must be >= 1");
        if (config.embedding_dimension < 1 || config.time_lag < 1 || config.hidden_count < 1) {
            throw Error("D, T and H must be positive");
        }
    }
};

// Experiments 3 and 5 fan out into their variants; the others are themselves.
inline std::vector<ExperimentSpec> expand_specs(int id, const ExperimentConfig& config) {
    std::vector<ExperimentSpec> specs;
    if (id == 3) {
        for (std::size_t c = 0; c < kDurationCategories.size(); ++c) {
            specs.push_back(ExperimentSpec{id, c, std::nullopt, config});
        }
    } else if (id == 5) {
        for (const YearRange& decade : kTrainingDecades) {
            specs.push_back(ExperimentSpec{id, std::nullopt, decade, config});
        }
    } else {
        specs.push_back(ExperimentSpec{id, std::nullopt, std::nullopt, config});
    }
    return specs;
}

struct RunResult {
    int run_index = 0;
    std::uint64_t seed = 0;
    double train_rmse = 0.0;
    double test_rmse = 0.0;
    std::optional<double> categorical_rmse;  // exp 3 only
};

struct MetricSummary {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, n-1 denominator
};

struct ExperimentSummary {
    int runs = 0;
    std::vector<std::pair<std::string, MetricSummary>> metrics;  // fixed order
};

inline MetricSummary mean_and_sample_std(const std::vector<double>& values) {
    if (values.empty()) throw EmptyInput("cannot summarize zero values");
    double sum = 0.0;
    for (const double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    if (values.size() == 1) return MetricSummary{mean, 0.0};
    double sum_squares = 0.0;
    for (const double v : values) {
        const double diff = v - mean;
        sum_squares += diff * diff;
    }
    return MetricSummary{mean, std::sqrt(sum_squares / static_cast<double>(values.size() - 1))};
}

inline ExperimentSummary summarize(const std::vector<RunResult>& results) {
    if (results.empty()) throw EmptyInput("cannot summarize zero runs");
    ExperimentSummary summary;
    summary.runs = static_cast<int>(results.size());

    std::vector<double> train;
    std::vector<double> test;
    std::vector<double> categorical;
    for (const auto& result : results) {
        train.push_back(result.train_rmse);
        test.push_back(result.test_rmse);
        if (result.categorical_rmse) categorical.push_back(*result.categorical_rmse);
    }
    summary.metrics.emplace_back("train_rmse", mean_and_sample_std(train));
    summary.metrics.emplace_back("test_rmse", mean_and_sample_std(test));
    if (!categorical.empty()) {
        if (categorical.size() != results.size()) {
            throw Error("categorical RMSE recorded for only some runs");
        }
        summary.metrics.emplace_back("categorical_rmse", mean_and_sample_std(categorical));
    }
    return summary;
}

struct ExperimentResult {
    ExperimentSpec spec;
    std::vector<RunResult> runs;
    ExperimentSummary summary;
};

struct RunOptions {
    int jobs = 1;
    std::filesystem::path artifacts_dir;  // empty disables per-run persistence
};

namespace detail {

struct PreparedExperiment {
    EmbeddedDataset train;    // target-problem training patterns, normalized
    EmbeddedDataset test;     // full test patterns
    std::optional<EmbeddedDataset> categorical_test;  // exp 3
    std::optional<EmbeddedDataset> source_train;      // exp 4
    NormalizationParams train_norm;
    std::optional<NormalizationParams> source_norm;
};

inline std::vector<double> normalized_series(const Corpus& corpus,
                                             const NormalizationParams& params) {
    return apply_normalizer(concatenate(corpus), params);
}

inline void require_tracks(const Corpus& corpus, const std::string& what) {
    if (corpus.empty()) throw EmptyCorpus(what + " is empty");
}

// Builds every dataset a spec needs. Normalizers are fitted on the run's
// training series only; with the corpora fixed this is identical for every
// run, so it happens once.
inline PreparedExperiment prepare_experiment(const ExperimentSpec& spec, const Corpus& sp,
                                             const Corpus& si) {
    const ExperimentConfig& cfg = spec.config;
    require_tracks(sp, "target corpus");
    auto [sp_train, sp_test] = split_by_year(sp, cfg.first_test_year);
    require_tracks(sp_train, "target training split");
    require_tracks(sp_test, "target test split");

    Corpus train_corpus;
    switch (spec.id) {
        case 1:
        case 4:
            train_corpus = sp_train;
            break;
        case 2: {
            require_tracks(si, "source corpus");
            train_corpus = split_by_year(si, cfg.first_test_year).first;
            require_tracks(train_corpus, "source training split");
            break;
        }
        case 3: {
            const DurationCategory& category = kDurationCategories[*spec.duration_category];
            train_corpus = filter_by_duration(sp_train, category);
            require_tracks(train_corpus, std::string("duration category ") + category.label +
                                             " of the training split");
            break;
        }
        case 5: {
            train_corpus =
                filter_by_year_range(sp_train, spec.decade->start_year, spec.decade->end_year);
            require_tracks(train_corpus, "decade " + to_string(*spec.decade) +
                                             " of the training split");
            break;
        }
        default:
            throw Error("experiment id must be in 1..5");
    }

    PreparedExperiment prepared;
    prepared.train_norm = fit_normalizer(concatenate(train_corpus));
    prepared.train = embed(normalized_series(train_corpus, prepared.train_norm),
                           cfg.embedding_dimension, cfg.time_lag);
    prepared.test = embed(normalized_series(sp_test, prepared.train_norm),
                          cfg.embedding_dimension, cfg.time_lag);

    if (spec.id == 3) {
        const DurationCategory& category = kDurationCategories[*spec.duration_category];
        const Corpus categorical_corpus = filter_by_duration(sp_test, category);
        require_tracks(categorical_corpus, std::string("duration category ") + category.label +
                                               " of the test split");
        prepared.categorical_test =
            embed(normalized_series(categorical_corpus, prepared.train_norm),
                  cfg.embedding_dimension, cfg.time_lag);
    }
    if (spec.id == 4) {
        require_tracks(si, "source corpus");
        const Corpus si_train = split_by_year(si, cfg.first_test_year).first;
        require_tracks(si_train, "source training split");
        prepared.source_norm = fit_normalizer(concatenate(si_train));
        prepared.source_train = embed(normalized_series(si_train, *prepared.source_norm),
                                      cfg.embedding_dimension, cfg.time_lag);
    }
    return prepared;
}

inline std::string normalization_text(const NormalizationParams& params) {
    return format_double(params.min_value) + " " + format_double(params.max_value) + "\n";
}

inline std::filesystem::path run_artifact_dir(const ExperimentSpec& spec,
                                              const std::filesystem::path& root, int run) {
    std::string leaf = "exp" + std::to_string(spec.id);
    const std::string variant = spec.variant_label();
    if (!variant.empty()) leaf += "-" + variant;
    return root / leaf / ("run_" + std::to_string(run));
}

// One seeded run. Run r derives every seed it needs from base_seed + r:
// the vanilla network (or target member) uses it directly, the source member
// uses +1 and the combiner +2.
inline RunResult execute_run(const ExperimentSpec& spec, const PreparedExperiment& prepared,
                             int run, const RunOptions& options) {
    const ExperimentConfig& cfg = spec.config;
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(run);
    const TrainingConfig train_config{cfg.epochs, cfg.learning_rate, seed, true};

    RunResult result;
    result.run_index = run;
    result.seed = seed;

    const bool persist = !options.artifacts_dir.empty();
    const std::filesystem::path run_dir =
        persist ? run_artifact_dir(spec, options.artifacts_dir, run) : std::filesystem::path();

    if (spec.id == 4) {
        std::vector<EnsembleMember> members =
            train_ensembles(*prepared.source_train, prepared.train, cfg.hidden_count,
                            train_config);
        members[0].training_provenance = "target-train";
        members[1].training_provenance = "source-train";

        StackedDataset stacked_train = build_stacked_dataset(members, prepared.train);
        if (cfg.stacking_mode == StackingMode::union_both) {
            const StackedDataset stacked_source =
                build_stacked_dataset(members, *prepared.source_train);
            stacked_train.inputs.insert(stacked_train.inputs.end(), stacked_source.inputs.begin(),
                                        stacked_source.inputs.end());
            stacked_train.targets.insert(stacked_train.targets.end(),
                                         stacked_source.targets.begin(),
                                         stacked_source.targets.end());
        }

        TrainingConfig combiner_config = train_config;
        combiner_config.seed = seed + 2;
        auto [combiner, stacked_train_rmse] =
            train_combiner_traced(stacked_train, cfg.hidden_count, combiner_config);
        result.train_rmse = stacked_train_rmse;
        result.test_rmse = evaluate_transfer_stack(members, combiner, prepared.test);

        if (persist) {
            save_network_file(members[0].network, run_dir / "target_member.txt");
            save_network_file(members[1].network, run_dir / "source_member.txt");
            save_network_file(combiner, run_dir / "combiner.txt");
            atomic_write_file(run_dir / "normalization.txt",
                              normalization_text(prepared.train_norm));
            atomic_write_file(run_dir / "source_normalization.txt",
                              normalization_text(*prepared.source_norm));
        }
        return result;
    }

    NetworkParams initial = init_network(cfg.embedding_dimension, cfg.hidden_count, seed);
    auto [network, trace] = train_sgd(std::move(initial), prepared.train, train_config);
    result.train_rmse = trace.epoch_rmse.back();
    result.test_rmse = rmse(targets_of(prepared.test), predict_batch(network, prepared.test));
    if (prepared.categorical_test) {
        result.categorical_rmse = rmse(targets_of(*prepared.categorical_test),
                                       predict_batch(network, *prepared.categorical_test));
    }

    if (persist) {
        save_network_file(network, run_dir / "network.txt");
        atomic_write_file(run_dir / "normalization.txt", normalization_text(prepared.train_norm));
    }
    return result;
}

}  // namespace detail

// Executes every seeded run of one experiment and aggregates the summary.
// Runs are independent; with jobs > 1 they execute concurrently, and the
// output is identical regardless of scheduling.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const Corpus& sp,
                                       const Corpus& si, const RunOptions& options = {}) {
    spec.validate();
    const detail::PreparedExperiment prepared = detail::prepare_experiment(spec, sp, si);

    const int runs = spec.config.runs;
    std::vector<RunResult> results(static_cast<std::size_t>(runs));

    const int jobs = std::max(1, std::min(options.jobs, runs));
    if (jobs == 1) {
        for (int run = 0; run < runs; ++run) {
            results[static_cast<std::size_t>(run)] =
                detail::execute_run(spec, prepared, run, options);
        }
    } else {
        std::atomic<int> next_run{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        const auto worker = [&] {
            for (;;) {
                const int run = next_run.fetch_add(1);
                if (run >= runs) return;
                try {
                    results[static_cast<std::size_t>(run)] =
                        detail::execute_run(spec, prepared, run, options);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& thread : pool) thread.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    ExperimentResult result;
    result.spec = spec;
    result.runs = std::move(results);
    result.summary = summarize(result.runs);
    return result;
}

// --- reports ---------------------------------------------------------------

inline constexpr std::string_view kRunResultsCsvHeader =
    "experiment,variant,run,seed,train_rmse,test_rmse,categorical_rmse";

inline std::string run_results_csv(std::span<const ExperimentResult> experiments) {
    std::string out{kRunResultsCsvHeader};
    out += '\n';
    for (const auto& experiment : experiments) {
        const std::string variant = experiment.spec.variant_label();
        for (const auto& run : experiment.runs) {
            out += std::to_string(experiment.spec.id);
            out += ',';
            out += variant;
            out += ',';
            out += std::to_string(run.run_index);
            out += ',';
            out += std::to_string(run.seed);
            out += ',';
            out += format_double(run.train_rmse);
            out += ',';
            out += format_double(run.test_rmse);
            out += ',';
            if (run.categorical_rmse) out += format_double(*run.categorical_rmse);
            out += '\n';
        }
    }
    return out;
}

inline constexpr std::string_view kSummaryCsvHeader = "experiment,variant,metric,mean,std,n";

inline std::string summary_csv(std::span<const ExperimentResult> experiments) {
    std::string out{kSummaryCsvHeader};
    out += '\n';
    for (const auto& experiment : experiments) {
        const std::string variant = experiment.spec.variant_label();
        for (const auto& [metric, stats] : experiment.summary.metrics) {
            out += std::to_string(experiment.spec.id);
            out += ',';
            out += variant;
            out += ',';
            out += metric;
            out += ',';
            out += format_double(stats.mean);
            out += ',';
            out += format_double(stats.stddev);
            out += ',';
            out += std::to_string(experiment.summary.runs);
            out += '\n';
        }
    }
    return out;
}

// JSON mirror of the summary CSV, with the same numeric values.
inline std::string summary_json(std::span<const ExperimentResult> experiments) {
    nlohmann::ordered_json root;
    root["experiments"] = nlohmann::ordered_json::array();
    for (const auto& experiment : experiments) {
        nlohmann::ordered_json entry;
        entry["experiment"] = experiment.spec.id;
        entry["variant"] = experiment.spec.variant_label();
        entry["runs"] = experiment.summary.runs;
        nlohmann::ordered_json metrics;
        for (const auto& [metric, stats] : experiment.summary.metrics) {
            metrics[metric] = {{"mean", stats.mean},
                               {"std", stats.stddev},
                               {"n", experiment.summary.runs}};
        }
        entry["metrics"] = std::move(metrics);
        root["experiments"].push_back(std::move(entry));
    }
    return root.dump(2) + "\n";
}

inline void write_report_files(std::span<const ExperimentResult> experiments,
                               const std::filesystem::path& out_dir) {
    atomic_write_file(out_dir / "results.csv", run_results_csv(experiments));
    atomic_write_file(out_dir / "summary.csv", summary_csv(experiments));
    atomic_write_file(out_dir / "summary.json", summary_json(experiments));
}

}  // namespace transtack
