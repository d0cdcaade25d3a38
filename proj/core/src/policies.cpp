#include "gramts/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gramts {

namespace {

const UctStats& uct_stats(const SearchNode& n) { return std::get<UctStats>(n.stats); }
UctStats& uct_stats(SearchNode& n) { return std::get<UctStats>(n.stats); }
const BtsStats& bts_stats(const SearchNode& n) { return std::get<BtsStats>(n.stats); }
BtsStats& bts_stats(SearchNode& n) { return std::get<BtsStats>(n.stats); }
const TpeStats& tpe_stats(const SearchNode& n) { return std::get<TpeStats>(n.stats); }
TpeStats& tpe_stats(SearchNode& n) { return std::get<TpeStats>(n.stats); }

}  // namespace

// ---------------------------------------------------------------- UCT

UctPolicy::UctPolicy(double exploration_c, Eq1Form form) : c_(exploration_c), form_(form) {
    if (c_ < 0) throw std::invalid_argument("UCT exploration constant must be >= 0");
}

PolicyStats UctPolicy::initial_stats() const { return UctStats{}; }

double UctPolicy::value(const SearchNode& n) const {
    const UctStats& s = uct_stats(n);
    if (s.visits == 0) return std::numeric_limits<double>::infinity();
    double mean = s.reward_sum / static_cast<double>(s.visits);
    if (c_ == 0 || n.parent == nullptr) return mean;
    double parent_visits = static_cast<double>(uct_stats(*n.parent).visits);
    double node_visits = static_cast<double>(s.visits);
    double bonus = form_ == Eq1Form::Paper
                       ? std::sqrt(std::log(node_visits) / parent_visits)
                       : std::sqrt(std::log(parent_visits) / node_visits);
    return mean + c_ * bonus;
}

std::size_t UctPolicy::select_child(const SearchNode& n, std::span<const std::size_t> candidates,
                                    RngStream&) const {
    std::size_t best = candidates.front();
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t idx : candidates) {
        double v = value(*n.children[idx]);
        if (v > best_value) {
            best_value = v;
            best = idx;
        }
    }
    return best;
}

double UctPolicy::greedy_value(const SearchNode& n) const {
    const UctStats& s = uct_stats(n);
    return s.visits == 0 ? 0.0 : s.reward_sum / static_cast<double>(s.visits);
}

void UctPolicy::backpropagate(SearchNode& from, double delta, RngStream&) const {
    for (SearchNode* a = &from; a != nullptr; a = a->parent) {
        UctStats& s = uct_stats(*a);
        s.reward_sum += delta;
        s.visits += 1;
    }
}

// ---------------------------------------------------------------- BTS

BtsPolicy::BtsPolicy(int replicates, double alpha0, double beta0)
    : j_(replicates), alpha0_(alpha0), beta0_(beta0) {
    if (j_ < 1) throw std::invalid_argument("BTS needs at least one replicate");
    if (beta0_ <= 0) throw std::invalid_argument("BTS beta prior must be > 0");
}

PolicyStats BtsPolicy::initial_stats() const {
    BtsStats s;
    s.alpha.assign(static_cast<std::size_t>(j_), alpha0_);
    s.beta.assign(static_cast<std::size_t>(j_), beta0_);
    return s;
}

std::size_t BtsPolicy::select_child(const SearchNode& n, std::span<const std::size_t> candidates,
                                    RngStream& rng) const {
    // One bootstrap replicate per decision; children selected with
    // probability proportional to alpha_j/beta_j.
    std::size_t j = rng.uniform_index(static_cast<std::size_t>(j_));
    std::vector<double> weights;
    weights.reserve(candidates.size());
    for (std::size_t idx : candidates) {
        const BtsStats& s = bts_stats(*n.children[idx]);
        weights.push_back(s.alpha[j] / s.beta[j]);
    }
    return candidates[rng.categorical(weights)];
}

double BtsPolicy::greedy_value(const SearchNode& n) const {
    const BtsStats& s = bts_stats(n);
    double sum = 0;
    for (std::size_t j = 0; j < s.alpha.size(); ++j) sum += s.alpha[j] / s.beta[j];
    return sum / static_cast<double>(s.alpha.size());
}

void BtsPolicy::backpropagate(SearchNode& from, double delta, RngStream& rng) const {
    for (SearchNode* a = &from; a != nullptr; a = a->parent) {
        BtsStats& s = bts_stats(*a);
        for (std::size_t j = 0; j < s.alpha.size(); ++j) {
            if (rng.coin_flip()) {
                s.alpha[j] += delta;
                s.beta[j] += 1.0;
            }
        }
    }
}

// ---------------------------------------------------------------- TPE

double tpe_threshold(std::span<const double> rewards, double gamma) {
    if (rewards.empty()) throw std::invalid_argument("tpe_threshold: empty reward list");
    std::vector<double> sorted(rewards.begin(), rewards.end());
    std::sort(sorted.begin(), sorted.end());
    double rank = std::ceil(gamma * static_cast<double>(sorted.size()));
    auto idx = static_cast<std::ptrdiff_t>(rank) - 1;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(sorted.size()) - 1);
    return sorted[static_cast<std::size_t>(idx)];
}

TpePolicy::TpePolicy(double gamma, double smoothing) : gamma_(gamma), smoothing_(smoothing) {
    if (!(gamma_ > 0 && gamma_ < 1)) throw std::invalid_argument("TPE gamma must be in (0,1)");
    if (smoothing_ <= 0) throw std::invalid_argument("TPE smoothing must be > 0");
}

PolicyStats TpePolicy::initial_stats() const { return TpeStats{}; }

std::size_t TpePolicy::select_child(const SearchNode& n, std::span<const std::size_t> candidates,
                                    RngStream& rng) const {
    const TpeStats& parent = tpe_stats(n);
    if (parent.rewards.empty()) return candidates[rng.uniform_index(candidates.size())];

    double threshold = tpe_threshold(parent.rewards, gamma_);

    // Per-child counts of observations strictly below the threshold.
    std::vector<double> below(candidates.size(), 0.0);
    std::vector<double> above(candidates.size(), 0.0);
    double total_below = 0;
    double total_above = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const TpeStats& s = tpe_stats(*n.children[candidates[i]]);
        for (double r : s.rewards) {
            if (r < threshold) {
                below[i] += 1;
            } else {
                above[i] += 1;
            }
        }
        total_below += below[i];
        total_above += above[i];
    }

    const double s = smoothing_;
    const double k = static_cast<double>(candidates.size());
    std::vector<double> weights(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double l = (below[i] + s) / (total_below + s * k);
        double g = (above[i] + s) / (total_above + s * k);
        weights[i] = g / l;
    }
    return candidates[rng.categorical(weights)];
}

double TpePolicy::greedy_value(const SearchNode& n) const {
    const TpeStats& s = tpe_stats(n);
    if (s.rewards.empty()) return 0.0;
    double sum = std::accumulate(s.rewards.begin(), s.rewards.end(), 0.0);
    return sum / static_cast<double>(s.rewards.size());
}

void TpePolicy::backpropagate(SearchNode& from, double delta, RngStream&) const {
    for (SearchNode* a = &from; a != nullptr; a = a->parent) {
        tpe_stats(*a).rewards.push_back(delta);
    }
}

}  // namespace gramts
