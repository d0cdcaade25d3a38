#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "gramts/policies.hpp"
#include "gramts/search_tree.hpp"

using namespace gramts;

namespace {

// root -> A -> B -> terminal, one alternative per level
const char* kChain =
    "S := A\n"
    "A := B\n"
    "B := \"x\"\n";

struct Chain {
    Grammar grammar;
    SearchTree tree;
    std::vector<SearchNode*> nodes;  // root..leaf

    explicit Chain(const SelectionPolicy& policy)
        : grammar(parse_grammar(kChain)), tree(grammar, policy) {
        nodes.push_back(&tree.root());
        while (!nodes.back()->terminal()) {
            nodes.push_back(&tree.expand_child(*nodes.back()));
        }
    }
};

// Two expanded terminal children under the root.
struct TwoArm {
    Grammar grammar;
    SearchTree tree;
    SearchNode* left;
    SearchNode* right;

    explicit TwoArm(const SelectionPolicy& policy)
        : grammar(parse_grammar("S := \"x\" | \"y\"\n")), tree(grammar, policy) {
        left = &tree.expand_child(tree.root());
        right = &tree.expand_child(tree.root());
    }
};

std::uint64_t find_seed_with_first_flip(bool wanted) {
    for (std::uint64_t seed = 0;; ++seed) {
        RngStream probe(seed);
        if (probe.coin_flip() == wanted) return seed;
    }
}

}  // namespace

// ----------------------------------------------------------------- UCT

TEST_CASE("uct value: exploitation term only at C=0") {
    UctPolicy policy(0.0);
    TwoArm t(policy);
    t.left->stats = UctStats{1.0, 2};
    std::get<UctStats>(t.tree.root().stats).visits = 4;
    CHECK(policy.value(*t.left) == doctest::Approx(0.5));
}

TEST_CASE("uct value matches the hand-derived example at C=0.7") {
    UctPolicy policy(0.7);
    TwoArm t(policy);
    t.left->stats = UctStats{1.0, 2};
    std::get<UctStats>(t.tree.root().stats).visits = 4;
    double expected = 0.5 + 0.7 * std::sqrt(std::log(2.0) / 4.0);
    CHECK(policy.value(*t.left) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(policy.value(*t.left) == doctest::Approx(0.7913941).epsilon(1e-6));
}

TEST_CASE("uct value is +infinity for unvisited nodes") {
    UctPolicy policy(0.7);
    TwoArm t(policy);
    CHECK(policy.value(*t.left) == std::numeric_limits<double>::infinity());
}

TEST_CASE("textbook form swaps the log argument") {
    UctPolicy policy(0.7, UctPolicy::Eq1Form::Textbook);
    TwoArm t(policy);
    t.left->stats = UctStats{1.0, 2};
    std::get<UctStats>(t.tree.root().stats).visits = 4;
    double expected = 0.5 + 0.7 * std::sqrt(std::log(4.0) / 2.0);
    CHECK(policy.value(*t.left) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("uct backprop updates the node and every ancestor once") {
    UctPolicy policy(0.7);
    Chain c(policy);
    RngStream rng(1);
    policy.backpropagate(*c.nodes.back(), 0.6, rng);
    REQUIRE(c.nodes.size() == 4);
    for (SearchNode* n : c.nodes) {
        CHECK(std::get<UctStats>(n->stats).visits == 1);
        CHECK(std::get<UctStats>(n->stats).reward_sum == doctest::Approx(0.6));
    }
}

TEST_CASE("uct mean is stable under repeated equal rewards") {
    UctPolicy policy(0.0);
    Chain c(policy);
    RngStream rng(1);
    policy.backpropagate(*c.nodes.back(), 0.5, rng);
    policy.backpropagate(*c.nodes.back(), 0.5, rng);
    CHECK(policy.greedy_value(*c.nodes[1]) == doctest::Approx(0.5));
}

TEST_CASE("root visits equal the number of backprops") {
    UctPolicy policy(0.7);
    Chain c(policy);
    RngStream rng(3);
    const int n = 37;
    for (int i = 0; i < n; ++i) {
        SearchNode* from = c.nodes[rng.uniform_index(c.nodes.size())];
        policy.backpropagate(*from, rng.uniform01(), rng);
    }
    CHECK(std::get<UctStats>(c.tree.root().stats).visits == n);
}

TEST_CASE("uct select at C=0 is argmax of the mean, unvisited first") {
    UctPolicy policy(0.0);
    RngStream rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        TwoArm t(policy);
        std::get<UctStats>(t.tree.root().stats).visits = 10;
        bool left_unvisited = trial % 5 == 0;
        t.left->stats = UctStats{rng.uniform01() * 5, left_unvisited ? 0u : 1 + rng.uniform_index(5)};
        t.right->stats = UctStats{rng.uniform01() * 5, 1 + rng.uniform_index(5)};
        if (left_unvisited) std::get<UctStats>(t.left->stats).reward_sum = 0;

        std::vector<std::size_t> candidates{0, 1};
        std::size_t chosen = policy.select_child(t.tree.root(), candidates, rng);
        // brute-force comparator
        double v0 = policy.value(*t.left);
        double v1 = policy.value(*t.right);
        std::size_t expected = v1 > v0 ? 1 : 0;  // ties to lowest index
        CHECK(chosen == expected);
    }
}

// ----------------------------------------------------------------- BTS

TEST_CASE("bts backprop on forced heads adds reward to alpha and 1 to beta") {
    BtsPolicy policy(1);
    Grammar g = parse_grammar("S := \"x\"\n");
    SearchTree tree(g, policy);
    SearchNode& leaf = tree.expand_child(tree.root());

    RngStream heads(find_seed_with_first_flip(true));
    policy.backpropagate(leaf, 0.8, heads);
    const BtsStats& s = std::get<BtsStats>(leaf.stats);
    CHECK(s.alpha[0] == doctest::Approx(1.8));
    CHECK(s.beta[0] == doctest::Approx(2.0));
}

TEST_CASE("bts backprop on forced tails leaves parameters unchanged") {
    BtsPolicy policy(1);
    Grammar g = parse_grammar("S := \"x\"\n");
    SearchTree tree(g, policy);
    SearchNode& leaf = tree.expand_child(tree.root());

    RngStream tails(find_seed_with_first_flip(false));
    policy.backpropagate(leaf, 0.8, tails);
    const BtsStats& s = std::get<BtsStats>(leaf.stats);
    CHECK(s.alpha[0] == doctest::Approx(1.0));
    CHECK(s.beta[0] == doctest::Approx(1.0));
}

TEST_CASE("bts updates about half of 1000 replicates per backprop") {
    BtsPolicy policy(1000);
    Grammar g = parse_grammar("S := \"x\"\n");
    SearchTree tree(g, policy);
    SearchNode& leaf = tree.expand_child(tree.root());
    RngStream rng(42);
    policy.backpropagate(leaf, 0.5, rng);
    const BtsStats& s = std::get<BtsStats>(leaf.stats);
    double heads = 0;
    for (double b : s.beta) heads += b - 1.0;
    // binomial(1000, 1/2): 5 sigma = 5*sqrt(250) ~ 79
    CHECK(std::abs(heads - 500.0) < 79.0);
}

TEST_CASE("bts parameters match a coin-flip replay oracle exactly") {
    const int kReplicates = 7;
    BtsPolicy policy(kReplicates);
    Chain c(policy);
    const std::uint64_t seed = 2024;

    RngStream rng(seed);
    std::vector<std::pair<std::size_t, double>> updates;  // (node index, delta)
    for (int i = 0; i < 50; ++i) {
        std::size_t from = rng.uniform_index(c.nodes.size());
        double delta = rng.uniform01();
        updates.emplace_back(from, delta);
        policy.backpropagate(*c.nodes[from], delta, rng);
    }

    // Replay: same seed, same draw order, plain arrays.
    RngStream replay(seed);
    std::vector<std::vector<double>> alpha(c.nodes.size(), std::vector<double>(kReplicates, 1.0));
    std::vector<std::vector<double>> beta(c.nodes.size(), std::vector<double>(kReplicates, 1.0));
    for (int i = 0; i < 50; ++i) {
        std::size_t from = replay.uniform_index(c.nodes.size());
        double delta = replay.uniform01();
        // walk from the node up to the root (index 0)
        for (std::size_t level = from + 1; level-- > 0;) {
            for (int j = 0; j < kReplicates; ++j) {
                if (replay.coin_flip()) {
                    alpha[level][j] += delta;
                    beta[level][j] += 1.0;
                }
            }
        }
    }
    for (std::size_t level = 0; level < c.nodes.size(); ++level) {
        const BtsStats& s = std::get<BtsStats>(c.nodes[level]->stats);
        for (int j = 0; j < kReplicates; ++j) {
            CHECK(s.alpha[j] == alpha[level][j]);
            CHECK(s.beta[j] == beta[level][j]);
        }
    }
}

TEST_CASE("bts select is proportional to alpha/beta") {
    BtsPolicy policy(1);
    TwoArm t(policy);
    t.left->stats = BtsStats{{0.9}, {1.0}};
    t.right->stats = BtsStats{{0.1}, {1.0}};
    RngStream rng(99);
    std::vector<std::size_t> candidates{0, 1};
    int n = 10000;
    int left = 0;
    for (int i = 0; i < n; ++i) {
        if (policy.select_child(t.tree.root(), candidates, rng) == 0) ++left;
    }
    // chi-squared against p = 0.9, df = 1, 1% critical value 6.635
    double expected_left = 0.9 * n;
    double expected_right = 0.1 * n;
    double chi2 = (left - expected_left) * (left - expected_left) / expected_left +
                  (n - left - expected_right) * (n - left - expected_right) / expected_right;
    CHECK(chi2 < 6.635);
}

TEST_CASE("bts select with one live child always returns it") {
    BtsPolicy policy(1);
    TwoArm t(policy);
    RngStream rng(1);
    std::vector<std::size_t> only{1};
    for (int i = 0; i < 20; ++i) CHECK(policy.select_child(t.tree.root(), only, rng) == 1);
}

TEST_CASE("bts select with equal priors is uniform") {
    BtsPolicy policy(4);
    TwoArm t(policy);
    RngStream rng(7);
    std::vector<std::size_t> candidates{0, 1};
    int n = 10000;
    int left = 0;
    for (int i = 0; i < n; ++i) {
        if (policy.select_child(t.tree.root(), candidates, rng) == 0) ++left;
    }
    double chi2 = 2.0 * (left - 5000.0) * (left - 5000.0) / 5000.0;
    CHECK(chi2 < 6.635);
}

TEST_CASE("bts select falls back to uniform when all values are zero") {
    BtsPolicy policy(1);
    TwoArm t(policy);
    t.left->stats = BtsStats{{0.0}, {1.0}};
    t.right->stats = BtsStats{{0.0}, {1.0}};
    RngStream rng(11);
    std::vector<std::size_t> candidates{0, 1};
    int left = 0;
    for (int i = 0; i < 10000; ++i) {
        if (policy.select_child(t.tree.root(), candidates, rng) == 0) ++left;
    }
    CHECK(std::abs(left - 5000) < 5 * 50);  // 5 sigma of binomial(10000, 1/2)
}

// ----------------------------------------------------------------- TPE

TEST_CASE("tpe threshold: nearest rank on a decile ladder") {
    std::vector<double> rewards{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    CHECK(tpe_threshold(rewards, 0.75) == doctest::Approx(0.8));
}

TEST_CASE("tpe threshold boundary cases") {
    std::vector<double> one{0.42};
    CHECK(tpe_threshold(one, 0.01) == doctest::Approx(0.42));
    CHECK(tpe_threshold(one, 0.99) == doctest::Approx(0.42));
    std::vector<double> equal{0.5, 0.5, 0.5};
    CHECK(tpe_threshold(equal, 0.6) == doctest::Approx(0.5));
    // threshold is always a member of the multiset
    std::vector<double> mixed{0.9, 0.1, 0.4};
    double t = tpe_threshold(mixed, 0.5);
    CHECK((t == 0.1 || t == 0.4 || t == 0.9));
}

TEST_CASE("tpe backprop appends the reward along the whole path") {
    TpePolicy policy(0.85);
    Chain c(policy);
    RngStream rng(1);
    policy.backpropagate(*c.nodes.back(), 0.7, rng);
    for (SearchNode* n : c.nodes) {
        const TpeStats& s = std::get<TpeStats>(n->stats);
        REQUIRE(s.rewards.size() == 1);
        CHECK(s.rewards[0] == doctest::Approx(0.7));
    }
    policy.backpropagate(*c.nodes[1], 0.2, rng);
    CHECK(std::get<TpeStats>(c.tree.root().stats).rewards.size() == 2);
}

TEST_CASE("tpe select follows the smoothed density ratio") {
    // Threshold 0.5; child 0: 3 at-or-above + 1 below; child 1: 2 + 9.
    // weight0 = ((3+1)/(5+2)) / ((1+1)/(10+2)) = 24/7
    // weight1 = ((2+1)/(5+2)) / ((9+1)/(10+2)) = 18/35
    TpePolicy policy(0.5, 1.0);
    TwoArm t(policy);
    t.tree.root().stats = TpeStats{{0.5, 0.5}};
    t.left->stats = TpeStats{{0.6, 0.7, 0.8, 0.1}};
    t.right->stats = TpeStats{{0.6, 0.9, 0.1, 0.1, 0.1, 0.2, 0.2, 0.3, 0.3, 0.4, 0.4}};

    double w0 = 24.0 / 7.0;
    double w1 = (3.0 / 7.0) / (10.0 / 12.0);
    double p0 = w0 / (w0 + w1);

    RngStream rng(123);
    std::vector<std::size_t> candidates{0, 1};
    int n = 10000;
    int first = 0;
    for (int i = 0; i < n; ++i) {
        if (policy.select_child(t.tree.root(), candidates, rng) == 0) ++first;
    }
    double sigma = std::sqrt(p0 * (1 - p0) / n);
    CHECK(std::abs(static_cast<double>(first) / n - p0) < 5 * sigma);
}

TEST_CASE("tpe select is uniform for symmetric children") {
    TpePolicy policy(0.85);
    TwoArm t(policy);
    t.tree.root().stats = TpeStats{{0.2, 0.8}};
    t.left->stats = TpeStats{{0.2, 0.8}};
    t.right->stats = TpeStats{{0.2, 0.8}};
    RngStream rng(55);
    std::vector<std::size_t> candidates{0, 1};
    int first = 0;
    for (int i = 0; i < 10000; ++i) {
        if (policy.select_child(t.tree.root(), candidates, rng) == 0) ++first;
    }
    CHECK(std::abs(first - 5000) < 5 * 50);
}

TEST_CASE("tpe select with an empty parent list is uniform") {
    TpePolicy policy(0.85);
    TwoArm t(policy);
    RngStream rng(66);
    std::vector<std::size_t> candidates{0, 1};
    int first = 0;
    for (int i = 0; i < 10000; ++i) {
        if (policy.select_child(t.tree.root(), candidates, rng) == 0) ++first;
    }
    CHECK(std::abs(first - 5000) < 5 * 50);
}

// -------------------------------------------------------------- greedy

TEST_CASE("greedy values per policy") {
    Grammar g = parse_grammar("S := \"x\"\n");

    UctPolicy uct(0.7);
    SearchTree ut(g, uct);
    ut.root().stats = UctStats{1.0, 2};
    CHECK(uct.greedy_value(ut.root()) == doctest::Approx(0.5));
    ut.root().stats = UctStats{0.0, 0};
    CHECK(uct.greedy_value(ut.root()) == 0.0);

    BtsPolicy bts(2);
    SearchTree bt(g, bts);
    bt.root().stats = BtsStats{{1.8, 1.0}, {2.0, 1.0}};
    CHECK(bts.greedy_value(bt.root()) == doctest::Approx(0.95));

    TpePolicy tpe(0.85);
    SearchTree tt(g, tpe);
    tt.root().stats = TpeStats{{0.2, 0.4}};
    CHECK(tpe.greedy_value(tt.root()) == doctest::Approx(0.3));
    tt.root().stats = TpeStats{};
    CHECK(tpe.greedy_value(tt.root()) == 0.0);
}

TEST_CASE("selection and backprop are bit-reproducible for a fixed seed") {
    BtsPolicy policy(3);
    auto run_sequence = [&](std::uint64_t seed) {
        TwoArm t(policy);
        RngStream rng(seed);
        std::vector<std::size_t> picks;
        std::vector<std::size_t> candidates{0, 1};
        for (int i = 0; i < 200; ++i) {
            std::size_t c = policy.select_child(t.tree.root(), candidates, rng);
            picks.push_back(c);
            policy.backpropagate(*(c == 0 ? t.left : t.right), rng.uniform01(), rng);
        }
        return picks;
    };
    CHECK(run_sequence(31337) == run_sequence(31337));
    CHECK(run_sequence(31337) != run_sequence(31338));
}
