#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "gramts/evaluators.hpp"
#include "gramts/metrics.hpp"
#include "gramts/policies.hpp"
#include "gramts/search_tree.hpp"

namespace gramts {

struct Budget {
    enum class Mode { Iterations, WallClockSeconds };

    Mode mode = Mode::Iterations;
    double limit = 0.0;
    double consumed = 0.0;

    static Budget iterations(std::uint64_t n);
    static Budget wall_clock(double seconds);

    bool exhausted() const { return consumed >= limit; }
};

struct SearchOutcome {
    std::optional<PipelineConfig> config;
    double reward = 0.0;
    std::uint64_t iterations_used = 0;
    bool exhausted = false;       // search space exhausted
    double elapsed_s = 0.0;       // since run start; not serialized
};

struct RunResult {
    std::vector<SearchOutcome> outcomes;
    std::vector<IterationRecord> records;
    RunTrace best_trace;  // (elapsed seconds, best reward so far)
    bool exhausted = false;
    std::uint64_t evaluator_failures = 0;
};

/// Monotonic seconds source; injectable so serialized timings can be made
/// reproducible in tests.
using Clock = std::function<double()>;

Clock steady_clock_seconds();

/// The pruning MCTS loop: selection, single-child expansion, random
/// simulation to a leaf, policy backpropagation; each completed search
/// extracts the greedy best leaf and prunes it, so successive searches
/// return distinct configurations.
class SearchEngine {
public:
    SearchEngine(const Grammar& grammar, const SelectionPolicy& policy, RewardEvaluator& evaluator,
                 RngStream& rng, Clock clock = steady_clock_seconds());

    /// One call of the inner Search function: iterates until a terminal
    /// node is selected or the budget runs out, then extracts and prunes
    /// the best leaf. Outcome has no config when nothing was reached.
    SearchOutcome search_once(Budget& budget);

    /// Calls search_once until the budget or the search space is
    /// exhausted.
    RunResult run(Budget budget);

    SearchTree& tree() { return tree_; }
    const std::vector<IterationRecord>& records() const { return records_; }
    std::uint64_t evaluator_failures() const { return evaluator_failures_; }

    struct Selected {
        SearchNode* node = nullptr;
        std::uint64_t actions = 0;
    };

    /// Policy-guided descent from the root; stops at a terminal, at a
    /// node with an unexpanded slot, or at a dead branch. Throws
    /// SearchExhausted when the root is pruned.
    Selected selection();

    /// Uniformly random completion of the node's derivation, avoiding
    /// pruned materialized subtrees; nothing is materialized. Returns the
    /// complete state and the number of derivation steps taken.
    std::pair<DerivationState, std::uint64_t> simulate(SearchNode& from);

private:
    double evaluate(const PipelineConfig& config);

    const Grammar* grammar_;
    const SelectionPolicy* policy_;
    RewardEvaluator* evaluator_;
    RngStream* rng_;
    Clock clock_;
    SearchTree tree_;

    std::vector<IterationRecord> records_;
    std::unordered_set<std::string> seen_keys_;
    std::uint64_t iteration_counter_ = 0;
    std::uint64_t evaluator_failures_ = 0;
    double evaluator_time_ = 0.0;  // within the current iteration
};

}  // namespace gramts
