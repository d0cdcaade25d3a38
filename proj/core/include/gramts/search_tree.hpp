#pragma once

#include <cstdint>
#include <memory>
#include <ostream>
#include <variant>
#include <vector>

#include "gramts/derivation.hpp"
#include "gramts/grammar.hpp"

namespace gramts {

class SelectionPolicy;

struct UctStats {
    double reward_sum = 0.0;
    std::uint64_t visits = 0;
};

struct BtsStats {
    std::vector<double> alpha;
    std::vector<double> beta;
};

struct TpeStats {
    std::vector<double> rewards;
};

using PolicyStats = std::variant<UctStats, BtsStats, TpeStats>;

/// Node of the lazily materialized production tree. Child slot i
/// corresponds to alternative i of the state's leftmost non-terminal;
/// a null slot is unexpanded.
struct SearchNode {
    DerivationState state;
    SearchNode* parent = nullptr;
    int index_in_parent = -1;
    std::vector<std::unique_ptr<SearchNode>> children;
    PolicyStats stats;
    bool pruned = false;

    bool terminal() const { return children.empty(); }

    bool fully_expanded() const;
    bool has_unexpanded_slot() const;

    /// Indices of expanded, unpruned children.
    std::vector<std::size_t> live_children() const;
};

class SearchExhausted : public std::runtime_error {
public:
    SearchExhausted() : std::runtime_error("search space exhausted") {}
};

/// Owns the production tree for one search run. Single writer; the
/// grammar and policy outlive the tree.
class SearchTree {
public:
    SearchTree(const Grammar& grammar, const SelectionPolicy& policy);

    SearchNode& root() { return *root_; }
    const SearchNode& root() const { return *root_; }
    const Grammar& grammar() const { return *grammar_; }

    /// Materializes the lowest-index unexpanded slot of `n`. Throws
    /// GrammarError if `n` is terminal or fully expanded.
    SearchNode& expand_child(SearchNode& n);

    /// Marks a terminal node pruned and cascades upward: an ancestor is
    /// pruned once all its slots are expanded and all children pruned.
    /// Pruning an already-pruned leaf is a no-op.
    void prune_leaf(SearchNode& leaf);

    /// Retires an interior node whose children are all expanded and all
    /// pruned, cascading upward like prune_leaf.
    void prune_exhausted(SearchNode& n);

    /// Greedy descent (exploitation values only, ties to the lowest
    /// alternative index) to a live terminal, backtracking past branches
    /// with no expanded path to one. Throws SearchExhausted if none.
    SearchNode& best_leaf(const SelectionPolicy& policy);

    /// Complete derivations still reachable without passing through a
    /// pruned node. Testing utility; counts unexpanded subtrees via the
    /// grammar.
    std::uint64_t live_leaf_count() const;

    std::uint64_t node_count() const { return node_count_; }

    /// Indented one-node-per-line dump for debugging.
    void dump(std::ostream& os) const;

private:
    const Grammar* grammar_;
    const SelectionPolicy* policy_;
    std::unique_ptr<SearchNode> root_;
    std::uint64_t node_count_ = 1;

    std::unique_ptr<SearchNode> make_node(DerivationState state, SearchNode* parent, int index);
};

}  // namespace gramts
