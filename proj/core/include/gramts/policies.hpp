#pragma once

#include <memory>
#include <span>
#include <string>

#include "gramts/rng.hpp"
#include "gramts/search_tree.hpp"

namespace gramts {

/// Selection/backpropagation pair. Stateless over the node statistics it
/// defines; all mutation happens through backpropagate().
class SelectionPolicy {
public:
    virtual ~SelectionPolicy() = default;

    virtual std::string name() const = 0;

    /// Fresh statistics for a newly materialized node.
    virtual PolicyStats initial_stats() const = 0;

    /// Picks one of `candidates` (indices of live expanded children of
    /// `n`). `candidates` is non-empty.
    virtual std::size_t select_child(const SearchNode& n, std::span<const std::size_t> candidates,
                                     RngStream& rng) const = 0;

    /// Exploitation-only value, used by best-leaf extraction.
    virtual double greedy_value(const SearchNode& n) const = 0;

    /// Updates every node from `from` up to and including the root.
    virtual void backpropagate(SearchNode& from, double delta, RngStream& rng) const = 0;
};

class UctPolicy final : public SelectionPolicy {
public:
    /// Eq1Form::Paper scores mean + C*sqrt(ln(visits(n))/visits(parent));
    /// Eq1Form::Textbook uses the classic ln(visits(parent))/visits(n).
    enum class Eq1Form { Paper, Textbook };

    explicit UctPolicy(double exploration_c, Eq1Form form = Eq1Form::Paper);

    double exploration_c() const { return c_; }
    Eq1Form form() const { return form_; }

    /// Score of a visited node; +infinity when unvisited.
    double value(const SearchNode& n) const;

    std::string name() const override { return "uct"; }
    PolicyStats initial_stats() const override;
    std::size_t select_child(const SearchNode& n, std::span<const std::size_t> candidates,
                             RngStream& rng) const override;
    double greedy_value(const SearchNode& n) const override;
    void backpropagate(SearchNode& from, double delta, RngStream& rng) const override;

private:
    double c_;
    Eq1Form form_;
};

class BtsPolicy final : public SelectionPolicy {
public:
    explicit BtsPolicy(int replicates, double alpha0 = 1.0, double beta0 = 1.0);

    int replicates() const { return j_; }
    double alpha0() const { return alpha0_; }
    double beta0() const { return beta0_; }

    std::string name() const override { return "bts"; }
    PolicyStats initial_stats() const override;
    std::size_t select_child(const SearchNode& n, std::span<const std::size_t> candidates,
                             RngStream& rng) const override;
    double greedy_value(const SearchNode& n) const override;
    void backpropagate(SearchNode& from, double delta, RngStream& rng) const override;

private:
    int j_;
    double alpha0_;
    double beta0_;
};

class TpePolicy final : public SelectionPolicy {
public:
    explicit TpePolicy(double gamma, double smoothing = 1.0);

    double gamma() const { return gamma_; }
    double smoothing() const { return smoothing_; }

    std::string name() const override { return "tpe"; }
    PolicyStats initial_stats() const override;
    std::size_t select_child(const SearchNode& n, std::span<const std::size_t> candidates,
                             RngStream& rng) const override;
    double greedy_value(const SearchNode& n) const override;
    void backpropagate(SearchNode& from, double delta, RngStream& rng) const override;

private:
    double gamma_;
    double smoothing_;
};

/// Nearest-rank gamma-quantile: sort ascending, take index
/// ceil(gamma*len)-1 (clamped). `rewards` must be non-empty.
double tpe_threshold(std::span<const double> rewards, double gamma);

}  // namespace gramts
