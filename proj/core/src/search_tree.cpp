#include "gramts/search_tree.hpp"

#include <algorithm>
#include <functional>

#include "gramts/policies.hpp"

namespace gramts {

bool SearchNode::fully_expanded() const {
    return std::all_of(children.begin(), children.end(),
                       [](const std::unique_ptr<SearchNode>& c) { return c != nullptr; });
}

bool SearchNode::has_unexpanded_slot() const {
    return std::any_of(children.begin(), children.end(),
                       [](const std::unique_ptr<SearchNode>& c) { return c == nullptr; });
}

std::vector<std::size_t> SearchNode::live_children() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < children.size(); ++i) {
        if (children[i] && !children[i]->pruned) out.push_back(i);
    }
    return out;
}

SearchTree::SearchTree(const Grammar& grammar, const SelectionPolicy& policy)
    : grammar_(&grammar), policy_(&policy) {
    root_ = make_node(DerivationState::initial(grammar), nullptr, -1);
    node_count_ = 1;
}

std::unique_ptr<SearchNode> SearchTree::make_node(DerivationState state, SearchNode* parent,
                                                  int index) {
    auto node = std::make_unique<SearchNode>();
    node->children.resize(applicable_alternatives(state, *grammar_));
    node->state = std::move(state);
    node->parent = parent;
    node->index_in_parent = index;
    node->stats = policy_->initial_stats();
    return node;
}

SearchNode& SearchTree::expand_child(SearchNode& n) {
    if (n.terminal()) throw GrammarError("cannot expand a terminal node");
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (!n.children[i]) {
            n.children[i] = make_node(apply_rule(n.state, static_cast<int>(i), *grammar_), &n,
                                      static_cast<int>(i));
            ++node_count_;
            return *n.children[i];
        }
    }
    throw GrammarError("node is fully expanded");
}

namespace {

void cascade_prune(SearchNode* from) {
    for (SearchNode* a = from; a != nullptr; a = a->parent) {
        bool dead = a->fully_expanded() &&
                    std::all_of(a->children.begin(), a->children.end(),
                                [](const std::unique_ptr<SearchNode>& c) { return c->pruned; });
        if (!dead) break;
        a->pruned = true;
    }
}

}  // namespace

void SearchTree::prune_leaf(SearchNode& leaf) {
    if (!leaf.terminal()) throw GrammarError("prune_leaf expects a terminal node");
    if (leaf.pruned) return;  // idempotent
    leaf.pruned = true;
    cascade_prune(leaf.parent);
}

void SearchTree::prune_exhausted(SearchNode& n) {
    if (n.pruned) return;
    if (!n.fully_expanded() || !n.live_children().empty()) {
        throw GrammarError("prune_exhausted expects a fully expanded node with no live children");
    }
    n.pruned = true;
    cascade_prune(n.parent);
}

namespace {

SearchNode* greedy_descend(SearchNode& n, const SelectionPolicy& policy) {
    if (n.terminal()) return n.pruned ? nullptr : &n;
    // Live children in descending greedy value, ties by alternative index.
    auto live = n.live_children();
    std::stable_sort(live.begin(), live.end(), [&](std::size_t a, std::size_t b) {
        return policy.greedy_value(*n.children[a]) > policy.greedy_value(*n.children[b]);
    });
    for (std::size_t idx : live) {
        if (SearchNode* found = greedy_descend(*n.children[idx], policy)) return found;
    }
    return nullptr;
}

}  // namespace

SearchNode& SearchTree::best_leaf(const SelectionPolicy& policy) {
    if (root_->pruned) throw SearchExhausted();
    SearchNode* found = greedy_descend(*root_, policy);
    if (!found) throw SearchExhausted();
    return *found;
}

namespace {

std::uint64_t live_count(const SearchNode& n, const Grammar& g) {
    if (n.pruned) return 0;
    if (n.terminal()) return 1;
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (n.children[i]) {
            total += live_count(*n.children[i], g);
        } else {
            DerivationState child = apply_rule(n.state, static_cast<int>(i), g);
            total += count_completions(child, g).convert_to<std::uint64_t>();
        }
    }
    return total;
}

}  // namespace

std::uint64_t SearchTree::live_leaf_count() const {
    return live_count(*root_, *grammar_);
}

void SearchTree::dump(std::ostream& os) const {
    std::function<void(const SearchNode&, int)> rec = [&](const SearchNode& n, int depth) {
        for (int i = 0; i < depth * 2; ++i) os << ' ';
        if (n.parent == nullptr) {
            os << grammar_->start().name;
        } else {
            const auto& form = n.state.sentential_form();
            auto pos = n.state.leftmost_nonterminal();
            if (n.terminal()) {
                os << to_config(n.state, *grammar_).canonical_key;
            } else {
                os << form[*pos].name;
            }
        }
        std::uint64_t visits = 0;
        double value = policy_->greedy_value(n);
        if (const auto* u = std::get_if<UctStats>(&n.stats)) visits = u->visits;
        if (const auto* t = std::get_if<TpeStats>(&n.stats)) visits = t->rewards.size();
        os << " visits=" << visits << " value=" << value;
        if (n.pruned) os << " [pruned]";
        os << '\n';
        for (const auto& c : n.children) {
            if (c) rec(*c, depth + 1);
        }
    };
    rec(*root_, 0);
}

}  // namespace gramts
