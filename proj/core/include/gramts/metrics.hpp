#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace gramts {

struct IterationRecord {
    std::uint64_t iteration = 0;
    double algorithm_time_s = 0.0;  // excludes evaluator wall time
    std::uint64_t actions = 0;
    std::string simulated_key;
    bool repeated = false;  // key seen earlier in this run
    double reward = 0.0;
};

/// Per-run aggregate in the shape of the ablation tables.
struct AblationSummary {
    double time_iter_mean = 0.0;
    double time_iter_std = 0.0;
    double time_first = 0.0;
    double total_time = 0.0;
    double actions_iter_mean = 0.0;
    double actions_iter_std = 0.0;
    double first_actions = 0.0;
    double total_actions = 0.0;
    double repetition_ratio = 0.0;
};

/// Anytime best-so-far series: (elapsed seconds, value) with
/// non-decreasing values.
struct RunTrace {
    std::vector<std::pair<double, double>> points;
};

/// Folds iteration records into an ablation summary. Dispersions use the
/// sample standard deviation (n-1).
AblationSummary summarize(std::span<const IterationRecord> records);

/// Transforms a raw best-so-far trace into scores 1 - (true_max - best)
/// when the true maximum is known; passes values through otherwise.
RunTrace anytime_trace(const RunTrace& raw, std::optional<double> true_max);

/// Average rank (1 = best, ties averaged) of each method's best-so-far
/// value at every grid time point. A method with no point at or before t
/// counts as value 0.
std::vector<std::vector<double>> aggregate_ranks(std::span<const RunTrace> traces,
                                                 std::span<const double> grid);

/// Deterministic float serialization (shortest round-trip decimal).
std::string format_value(double v);

void write_iteration_csv(std::ostream& os, std::span<const IterationRecord> records);
std::vector<IterationRecord> parse_iteration_csv(std::istream& is);

void write_summary_csv(std::ostream& os, const AblationSummary& summary);
AblationSummary parse_summary_csv(std::istream& is);

}  // namespace gramts
