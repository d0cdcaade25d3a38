#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "gramts/derivation.hpp"

namespace gramts {

class EvaluatorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unrecoverable evaluator failure; aborts the run instead of being
/// mapped to a zero reward.
class EvaluatorFatalError : public EvaluatorError {
public:
    using EvaluatorError::EvaluatorError;
};

/// Source of rewards in [0,1] for complete configurations.
class RewardEvaluator {
public:
    virtual ~RewardEvaluator() = default;

    virtual double evaluate(const PipelineConfig& config) = 0;
    virtual bool deterministic() const = 0;
};

/// Fixed key -> reward table, loadable from `key,reward` CSV.
class TabularOracle final : public RewardEvaluator {
public:
    explicit TabularOracle(std::map<std::string, double> table,
                           std::optional<double> default_reward = std::nullopt);

    static TabularOracle from_csv_file(const std::string& path);

    double evaluate(const PipelineConfig& config) override;
    bool deterministic() const override { return true; }

    void set(const std::string& key, double reward);

private:
    std::map<std::string, double> table_;
    std::optional<double> default_;
};

/// Deterministic pseudo-random landscape: reward is a stable hash of
/// (seed, canonical key) mapped to [0,1). An optional planted key scores
/// exactly 1.0.
class SyntheticEvaluator final : public RewardEvaluator {
public:
    explicit SyntheticEvaluator(std::uint64_t seed,
                                std::optional<std::string> planted_key = std::nullopt);

    double evaluate(const PipelineConfig& config) override;
    bool deterministic() const override { return true; }

    /// The raw hash reward for a key, before planted-optimum override.
    static double hash_reward(std::uint64_t seed, const std::string& key);

private:
    std::uint64_t seed_;
    std::optional<std::string> planted_;
};

/// Child-process evaluator speaking line-delimited JSON over the worker's
/// stdin/stdout. Requests carry strictly increasing ids; a timed-out or
/// error-reporting evaluation yields reward 0. The worker is restarted on
/// crash or protocol error up to `max_consecutive_failures`, after which
/// the run aborts.
class ExternalEvaluator final : public RewardEvaluator {
public:
    explicit ExternalEvaluator(std::string command, double timeout_s = 300.0,
                               int max_consecutive_failures = 3);
    ~ExternalEvaluator() override;

    ExternalEvaluator(const ExternalEvaluator&) = delete;
    ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

    double evaluate(const PipelineConfig& config) override;
    bool deterministic() const override { return false; }

    std::uint64_t timeouts() const { return timeouts_; }
    std::uint64_t protocol_errors() const { return protocol_errors_; }

private:
    struct Worker;

    void ensure_worker();
    void kill_worker();

    std::string command_;
    double timeout_s_;
    int max_failures_;
    int consecutive_failures_ = 0;
    std::uint64_t next_id_ = 0;
    std::uint64_t timeouts_ = 0;
    std::uint64_t protocol_errors_ = 0;
    std::unique_ptr<Worker> worker_;
};

/// Memoizes a deterministic evaluator by canonical key. Wrapping a
/// nondeterministic evaluator is a configuration error.
class CachedEvaluator final : public RewardEvaluator {
public:
    explicit CachedEvaluator(RewardEvaluator& inner);

    double evaluate(const PipelineConfig& config) override;
    bool deterministic() const override { return true; }

    std::uint64_t inner_calls() const { return inner_calls_; }

private:
    RewardEvaluator* inner_;
    std::unordered_map<std::string, double> cache_;
    std::uint64_t inner_calls_ = 0;
};

/// Builds an evaluator from a spec string: `tabular:<csv path>`,
/// `synthetic:<seed>[,planted]` or `cmd:<command line>`. Planted
/// synthetic mode enumerates the grammar (up to `enumeration_cap`) to
/// place the optimum on the highest-hash key.
std::unique_ptr<RewardEvaluator> make_evaluator(const std::string& spec, const Grammar& grammar,
                                                double timeout_s = 300.0,
                                                std::size_t enumeration_cap = 1000000);

}  // namespace gramts
