#include "gramts/engine.hpp"

#include <algorithm>
#include <chrono>

namespace gramts {

Budget Budget::iterations(std::uint64_t n) {
    return Budget{Mode::Iterations, static_cast<double>(n), 0.0};
}

Budget Budget::wall_clock(double seconds) {
    return Budget{Mode::WallClockSeconds, seconds, 0.0};
}

Clock steady_clock_seconds() {
    return [] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
            .count();
    };
}

SearchEngine::SearchEngine(const Grammar& grammar, const SelectionPolicy& policy,
                           RewardEvaluator& evaluator, RngStream& rng, Clock clock)
    : grammar_(&grammar),
      policy_(&policy),
      evaluator_(&evaluator),
      rng_(&rng),
      clock_(std::move(clock)),
      tree_(grammar, policy) {}

SearchEngine::Selected SearchEngine::selection() {
    if (tree_.root().pruned) throw SearchExhausted();
    SearchNode* n = &tree_.root();
    std::uint64_t actions = 0;
    for (;;) {
        if (n->terminal() || n->has_unexpanded_slot()) return {n, actions};
        auto live = n->live_children();
        if (live.empty()) return {n, actions};  // dead branch, caller prunes
        std::size_t idx = policy_->select_child(*n, live, *rng_);
        n = n->children[idx].get();
        ++actions;
    }
}

std::pair<DerivationState, std::uint64_t> SearchEngine::simulate(SearchNode& from) {
    DerivationState state = from.state;
    SearchNode* node = &from;
    std::uint64_t steps = 0;
    while (!state.complete()) {
        int n_alts = applicable_alternatives(state, *grammar_);
        // Skip alternatives whose materialized subtree is already pruned.
        std::vector<std::size_t> allowed;
        for (int i = 0; i < n_alts; ++i) {
            if (node && node->children[i] && node->children[i]->pruned) continue;
            allowed.push_back(static_cast<std::size_t>(i));
        }
        if (allowed.empty()) throw SearchExhausted();
        std::size_t choice = allowed[rng_->uniform_index(allowed.size())];
        state = apply_rule(state, static_cast<int>(choice), *grammar_);
        node = node ? node->children[choice].get() : nullptr;
        ++steps;
    }
    return {std::move(state), steps};
}

double SearchEngine::evaluate(const PipelineConfig& config) {
    double start = clock_();
    double reward = 0.0;
    try {
        reward = evaluator_->evaluate(config);
        if (!(reward >= 0.0 && reward <= 1.0)) {
            ++evaluator_failures_;
            reward = 0.0;
        }
    } catch (const EvaluatorFatalError&) {
        evaluator_time_ += clock_() - start;
        throw;
    } catch (const std::exception&) {
        // Failed fits score zero and the search continues.
        ++evaluator_failures_;
        reward = 0.0;
    }
    evaluator_time_ += clock_() - start;
    return reward;
}

SearchOutcome SearchEngine::search_once(Budget& budget) {
    SearchOutcome out;
    if (tree_.root().pruned) {
        out.exhausted = true;
        return out;
    }

    bool terminal_reached = false;
    while (!terminal_reached && !budget.exhausted()) {
        double iter_start = clock_();
        evaluator_time_ = 0.0;

        Selected sel = selection();
        SearchNode* n = sel.node;
        std::uint64_t actions = sel.actions;

        if (!n->terminal() && !n->has_unexpanded_slot() && n->live_children().empty()) {
            // Fully expanded, all children pruned; retire it and restart
            // the iteration from the root (no backpropagation happened).
            tree_.prune_exhausted(*n);
            if (budget.mode == Budget::Mode::WallClockSeconds) {
                budget.consumed += clock_() - iter_start;
            }
            if (tree_.root().pruned) break;
            continue;
        }

        double delta;
        std::string key;
        if (n->terminal()) {
            PipelineConfig cfg = to_config(n->state, *grammar_);
            key = cfg.canonical_key;
            delta = evaluate(cfg);
            policy_->backpropagate(*n, delta, *rng_);
            terminal_reached = true;
        } else {
            SearchNode& child = tree_.expand_child(*n);
            ++actions;
            auto [leaf_state, steps] = simulate(child);
            actions += steps;
            PipelineConfig cfg = to_config(leaf_state, *grammar_);
            key = cfg.canonical_key;
            delta = evaluate(cfg);
            policy_->backpropagate(child, delta, *rng_);
        }

        IterationRecord rec;
        rec.iteration = ++iteration_counter_;
        rec.actions = actions;
        rec.reward = delta;
        rec.repeated = !seen_keys_.insert(key).second;
        rec.simulated_key = std::move(key);
        double elapsed = clock_() - iter_start;
        rec.algorithm_time_s = std::max(0.0, elapsed - evaluator_time_);
        records_.push_back(std::move(rec));
        ++out.iterations_used;

        budget.consumed += budget.mode == Budget::Mode::Iterations ? 1.0 : elapsed;
    }

    try {
        SearchNode& best = tree_.best_leaf(*policy_);
        PipelineConfig cfg = to_config(best.state, *grammar_);
        out.reward = evaluate(cfg);
        tree_.prune_leaf(best);
        out.config = std::move(cfg);
    } catch (const SearchExhausted&) {
        // No materialized terminal: either a zero budget or exhaustion.
        out.exhausted = tree_.root().pruned;
    }
    return out;
}

RunResult SearchEngine::run(Budget budget) {
    RunResult result;
    double start = clock_();
    double best = 0.0;

    while (!budget.exhausted() && !tree_.root().pruned) {
        SearchOutcome out = search_once(budget);
        out.elapsed_s = clock_() - start;
        if (!out.config) {
            result.exhausted = result.exhausted || out.exhausted;
            break;
        }
        best = std::max(best, out.reward);
        result.best_trace.points.emplace_back(out.elapsed_s, best);
        result.outcomes.push_back(std::move(out));
    }

    result.exhausted = result.exhausted || tree_.root().pruned;
    result.records = records_;
    result.evaluator_failures = evaluator_failures_;
    return result;
}

}  // namespace gramts
