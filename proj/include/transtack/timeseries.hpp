#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "transtack/errors.hpp"
#include "transtack/io.hpp"

namespace transtack {

// Best-track records arrive at a fixed 6-hourly cadence; track duration is
// derived from the record count, not from the raw timestamps.
inline constexpr double kSamplingIntervalHours = 6.0;

struct Timestamp {
    int year = 0;
    int month = 0;
    int day = 0;
    int hour = 0;

    auto operator<=>(const Timestamp&) const = default;
};

inline bool is_leap_year(int year) {
    return year % 4 == 0 && (year % 100 != 0 || year % 400 == 0);
}

inline int days_in_month(int year, int month) {
    static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30,
                                                  31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap_year(year)) return 29;
    return kDays[static_cast<std::size_t>(month - 1)];
}

// Accepts exactly `YYYY-MM-DDTHH:00Z` and validates the calendar instant.
inline bool parse_timestamp(std::string_view text, Timestamp& out) {
    if (text.size() != 17) return false;
    if (text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
        text[14] != '0' || text[15] != '0' || text[16] != 'Z') {
        return false;
    }
    static constexpr std::array<std::size_t, 10> kDigitPositions = {0, 1, 2,  3,  5,
                                                                    6, 8, 9, 11, 12};
    for (const std::size_t pos : kDigitPositions) {
        if (text[pos] < '0' || text[pos] > '9') return false;
    }
    const auto number = [&](std::size_t pos, std::size_t len) {
        int value = 0;
        for (std::size_t i = 0; i < len; ++i) value = value * 10 + (text[pos + i] - '0');
        return value;
    };
    const Timestamp ts{number(0, 4), number(5, 2), number(8, 2), number(11, 2)};
    if (ts.month < 1 || ts.month > 12) return false;
    if (ts.day < 1 || ts.day > days_in_month(ts.year, ts.month)) return false;
    if (ts.hour < 0 || ts.hour > 23) return false;
    out = ts;
    return true;
}

struct CycloneRecord {
    std::string cyclone_id;
    Timestamp timestamp;
    double wind_intensity = 0.0;  // knots, >= 0
};

struct CycloneTrack {
    std::string cyclone_id;
    std::string basin;
    std::vector<CycloneRecord> records;  // strictly increasing timestamps

    const Timestamp& start_time() const {
        if (records.empty()) throw Error("cyclone track has no records");
        return records.front().timestamp;
    }

    int start_year() const { return start_time().year; }

    double duration_days() const {
        if (records.empty()) throw Error("cyclone track has no records");
        return static_cast<double>(records.size() - 1) * kSamplingIntervalHours / 24.0;
    }
};

struct Corpus {
    std::string basin;
    std::vector<CycloneTrack> tracks;

    bool empty() const { return tracks.empty(); }

    std::size_t record_count() const {
        std::size_t total = 0;
        for (const auto& track : tracks) total += track.records.size();
        return total;
    }
};

struct NormalizationParams {
    double min_value = 0.0;
    double max_value = 1.0;  // must stay > min_value
};

struct Pattern {
    std::vector<double> input;
    double target = 0.0;
};

struct EmbeddedDataset {
    int embedding_dimension = 0;  // D, input window length
    int time_lag = 1;             // T, spacing between window samples
    std::vector<Pattern> patterns;

    bool empty() const { return patterns.empty(); }
    std::size_t size() const { return patterns.size(); }
};

// --- corpus ingestion ---------------------------------------------------

inline constexpr std::string_view kCorpusCsvHeader = "cyclone_id,basin,timestamp,wind_knots";

// Parses the corpus CSV format:
//
//   cyclone_id,basin,timestamp,wind_knots
//   1985001,SP,1985-01-03T00:00Z,35
//
// One track per distinct cyclone_id; records are ordered by timestamp no
// matter the row order in the file. Blank lines are ignored, every other
// deviation raises ParseError with the offending line number.
inline Corpus parse_corpus(std::string_view text) {
    struct PendingRecord {
        Timestamp timestamp;
        double wind = 0.0;
        std::size_t line = 0;
    };
    struct PendingTrack {
        std::string cyclone_id;
        std::string basin;
        std::vector<PendingRecord> records;
    };

    std::vector<PendingTrack> pending;
    std::unordered_map<std::string, std::size_t> track_index;

    const auto is_blank = [](std::string_view line) {
        return line.find_first_not_of(" \t") == std::string_view::npos;
    };

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
        if (is_blank(line)) continue;

        if (!header_seen) {
            if (line != kCorpusCsvHeader) {
                throw ParseError(line_number, "expected header \"" +
                                                  std::string(kCorpusCsvHeader) + "\"");
            }
            header_seen = true;
            continue;
        }

        const auto fields = split_fields(line, ',');
        if (fields.size() != 4) {
            throw ParseError(line_number, "expected 4 comma-separated fields, got " +
                                              std::to_string(fields.size()));
        }
        const std::string_view id = fields[0];
        const std::string_view basin = fields[1];
        if (id.empty()) throw ParseError(line_number, "cyclone_id is empty");
        if (basin.empty()) throw ParseError(line_number, "basin is empty");

        Timestamp timestamp;
        if (!parse_timestamp(fields[2], timestamp)) {
            throw ParseError(line_number, "malformed timestamp \"" + std::string(fields[2]) +
                                              "\" (expected YYYY-MM-DDTHH:00Z)");
        }
        double wind = 0.0;
        if (!parse_csv_double(fields[3], wind)) {
            throw ParseError(line_number,
                             "malformed wind_knots \"" + std::string(fields[3]) + "\"");
        }
        if (wind < 0.0) {
            throw ParseError(line_number, "wind_knots is negative");
        }

        const auto [it, inserted] = track_index.try_emplace(std::string(id), pending.size());
        if (inserted) {
            pending.push_back(PendingTrack{std::string(id), std::string(basin), {}});
        } else if (pending[it->second].basin != basin) {
            throw ParseError(line_number,
                             "basin differs from earlier rows of cyclone " + std::string(id));
        }
        pending[it->second].records.push_back(PendingRecord{timestamp, wind, line_number});
    }

    if (!header_seen) throw ParseError(1, "missing header");
    if (pending.empty()) throw EmptyCorpus("corpus file has no data rows");

    Corpus corpus;
    corpus.basin = pending.front().basin;
    corpus.tracks.reserve(pending.size());
    for (auto& builder : pending) {
        std::stable_sort(builder.records.begin(), builder.records.end(),
                         [](const PendingRecord& a, const PendingRecord& b) {
                             return a.timestamp < b.timestamp;
                         });
        for (std::size_t i = 1; i < builder.records.size(); ++i) {
            if (builder.records[i].timestamp == builder.records[i - 1].timestamp) {
                throw ParseError(std::max(builder.records[i].line, builder.records[i - 1].line),
                                 "duplicate timestamp for cyclone " + builder.cyclone_id);
            }
        }
        CycloneTrack track;
        track.cyclone_id = builder.cyclone_id;
        track.basin = builder.basin;
        track.records.reserve(builder.records.size());
        for (const auto& record : builder.records) {
            track.records.push_back(
                CycloneRecord{builder.cyclone_id, record.timestamp, record.wind});
        }
        corpus.tracks.push_back(std::move(track));
    }
    return corpus;
}

inline Corpus load_corpus_file(const std::filesystem::path& path) {
    return parse_corpus(read_file(path));
}

// --- corpus selection ---------------------------------------------------

// A track belongs to the training side iff its first record starts before
// first_test_year. Always a partition of the input.
inline std::pair<Corpus, Corpus> split_by_year(const Corpus& corpus, int first_test_year) {
    Corpus train{corpus.basin, {}};
    Corpus test{corpus.basin, {}};
    for (const auto& track : corpus.tracks) {
        (track.start_year() < first_test_year ? train : test).tracks.push_back(track);
    }
    return {std::move(train), std::move(test)};
}

// Keeps tracks with min_days <= duration_days < max_days. Pass
// an infinite max_days for an open-ended category.
inline Corpus filter_by_duration(const Corpus& corpus, double min_days,
                                 double max_days = std::numeric_limits<double>::infinity()) {
    if (min_days < 0.0 || !(max_days > min_days)) {
        throw Error("invalid duration bounds");
    }
    Corpus kept{corpus.basin, {}};
    for (const auto& track : corpus.tracks) {
        const double days = track.duration_days();
        if (days >= min_days && days < max_days) kept.tracks.push_back(track);
    }
    return kept;
}

struct DurationCategory {
    double min_days;
    double max_days;
    const char* label;
};

// The six lifetime classes used when training on duration subsets. They
// partition [0, inf), left-closed right-open.
inline constexpr std::array<DurationCategory, 6> kDurationCategories = {{
    {0.0, 3.0, "0-3"},
    {3.0, 5.0, "3-5"},
    {5.0, 7.0, "5-7"},
    {7.0, 9.0, "7-9"},
    {9.0, 12.0, "9-12"},
    {12.0, std::numeric_limits<double>::infinity(), "12+"},
}};

inline Corpus filter_by_duration(const Corpus& corpus, const DurationCategory& category) {
    return filter_by_duration(corpus, category.min_days, category.max_days);
}

// Keeps tracks whose start year lies in [start_year, end_year).
inline Corpus filter_by_year_range(const Corpus& corpus, int start_year, int end_year) {
    if (start_year > end_year) throw Error("start_year exceeds end_year");
    Corpus kept{corpus.basin, {}};
    for (const auto& track : corpus.tracks) {
        const int year = track.start_year();
        if (year >= start_year && year < end_year) kept.tracks.push_back(track);
    }
    return kept;
}

// Flattens the corpus into one intensity series: tracks ordered by start
// time (id as tie-break), records in time order within each track.
inline std::vector<double> concatenate(const Corpus& corpus) {
    if (corpus.empty()) throw EmptyCorpus("cannot concatenate an empty corpus");
    std::vector<const CycloneTrack*> ordered;
    ordered.reserve(corpus.tracks.size());
    for (const auto& track : corpus.tracks) ordered.push_back(&track);
    std::sort(ordered.begin(), ordered.end(), [](const CycloneTrack* a, const CycloneTrack* b) {
        if (a->start_time() != b->start_time()) return a->start_time() < b->start_time();
        return a->cyclone_id < b->cyclone_id;
    });

    std::vector<double> series;
    series.reserve(corpus.record_count());
    for (const CycloneTrack* track : ordered) {
        for (const auto& record : track->records) series.push_back(record.wind_intensity);
    }
    return series;
}

// --- normalization ------------------------------------------------------

inline NormalizationParams fit_normalizer(const std::vector<double>& series) {
    if (series.empty()) throw EmptyInput("cannot fit a normalizer on an empty series");
    const auto [min_it, max_it] = std::minmax_element(series.begin(), series.end());
    if (*max_it == *min_it) throw DegenerateRange();
    return NormalizationParams{*min_it, *max_it};
}

inline double normalize_value(double value, const NormalizationParams& params) {
    return (value - params.min_value) / (params.max_value - params.min_value);
}

inline double denormalize_value(double value, const NormalizationParams& params) {
    return value * (params.max_value - params.min_value) + params.min_value;
}

// Maps each value to (y - min) / (max - min). Values outside the fitted
// range are passed through unclamped.
inline std::vector<double> apply_normalizer(const std::vector<double>& series,
                                            const NormalizationParams& params) {
    if (!(params.max_value > params.min_value)) throw DegenerateRange();
    std::vector<double> out;
    out.reserve(series.size());
    for (const double value : series) out.push_back(normalize_value(value, params));
    return out;
}

inline std::vector<double> denormalize(const std::vector<double>& series,
                                       const NormalizationParams& params) {
    if (!(params.max_value > params.min_value)) throw DegenerateRange();
    std::vector<double> out;
    out.reserve(series.size());
    for (const double value : series) out.push_back(denormalize_value(value, params));
    return out;
}

// --- state-space reconstruction ------------------------------------------

// Sliding-window reconstruction with dimension D and lag T: pattern t has
// input [y_{t-T}, y_{t-2T}, ..., y_{t-DT}] and target y_t, giving exactly
// L - D*T patterns for a series of length L.
inline EmbeddedDataset embed(const std::vector<double>& series, int embedding_dimension,
                             int time_lag) {
    if (embedding_dimension < 1) throw Error("embedding dimension must be positive");
    if (time_lag < 1) throw Error("time lag must be positive");
    const std::size_t window =
        static_cast<std::size_t>(embedding_dimension) * static_cast<std::size_t>(time_lag);
    if (series.size() <= window) {
        throw SeriesTooShort("series length " + std::to_string(series.size()) +
                             " does not exceed D*T = " + std::to_string(window));
    }

    EmbeddedDataset dataset;
    dataset.embedding_dimension = embedding_dimension;
    dataset.time_lag = time_lag;
    dataset.patterns.reserve(series.size() - window);
    for (std::size_t t = window; t < series.size(); ++t) {
        Pattern pattern;
        pattern.input.resize(static_cast<std::size_t>(embedding_dimension));
        for (int d = 1; d <= embedding_dimension; ++d) {
            pattern.input[static_cast<std::size_t>(d - 1)] =
                series[t - static_cast<std::size_t>(d) * static_cast<std::size_t>(time_lag)];
        }
        pattern.target = series[t];
        dataset.patterns.push_back(std::move(pattern));
    }
    return dataset;
}

inline std::vector<double> targets_of(const EmbeddedDataset& dataset) {
    std::vector<double> targets;
    targets.reserve(dataset.patterns.size());
    for (const auto& pattern : dataset.patterns) targets.push_back(pattern.target);
    return targets;
}

// Embedded patterns as CSV (`x_1,...,x_D,target`), used by the preprocess
// stage so intermediate datasets can be inspected.
inline std::string embedded_to_csv(const EmbeddedDataset& dataset) {
    std::string out;
    for (int d = 1; d <= dataset.embedding_dimension; ++d) {
        out += "x_" + std::to_string(d) + ",";
    }
    out += "target\n";
    for (const auto& pattern : dataset.patterns) {
        for (const double value : pattern.input) {
            out += format_double(value);
            out += ',';
        }
        out += format_double(pattern.target);
        out += '\n';
    }
    return out;
}

}  // namespace transtack
