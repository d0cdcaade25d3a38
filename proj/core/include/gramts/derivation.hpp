#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gramts/grammar.hpp"

namespace gramts {

struct DerivationStep {
    std::string nonterminal;
    int alternative = 0;

    bool operator==(const DerivationStep&) const = default;
};

/// A partial leftmost derivation: the current sentential form plus the
/// trace of rule applications that produced it.
class DerivationState {
public:
    static DerivationState initial(const Grammar& g);

    const std::vector<Symbol>& sentential_form() const { return form_; }
    const std::vector<DerivationStep>& trace() const { return trace_; }

    bool complete() const;

    /// Index of the leftmost non-terminal in the sentential form.
    std::optional<std::size_t> leftmost_nonterminal() const;

    friend DerivationState apply_rule(const DerivationState& s, int alt_index, const Grammar& g);

private:
    std::vector<Symbol> form_;
    std::vector<DerivationStep> trace_;
};

/// A complete configuration: the terminal string plus a structured view
/// keyed by derivation step.
struct PipelineConfig {
    std::vector<std::string> terminals;
    std::string canonical_key;  // terminals joined by single spaces
    std::vector<std::pair<std::string, std::string>> structured;
};

/// Substitutes the leftmost non-terminal by the chosen alternative.
/// Throws GrammarError if the state is complete or the index is out of
/// range. The input state is unmodified.
DerivationState apply_rule(const DerivationState& s, int alt_index, const Grammar& g);

/// Number of alternatives for the leftmost non-terminal; 0 iff complete.
int applicable_alternatives(const DerivationState& s, const Grammar& g);

/// Builds the configuration for a complete state. Throws if incomplete.
PipelineConfig to_config(const DerivationState& s, const Grammar& g);

/// Number of complete derivations reachable from `s` (product of the
/// per-non-terminal production counts over the sentential form).
BigCount count_completions(const DerivationState& s, const Grammar& g);

/// Depth-first enumeration of all complete derivations in alternative
/// order. Stops early (returns false) if the visitor returns false.
bool enumerate_productions(const Grammar& g,
                           const std::function<bool(const DerivationState&)>& visit);

/// Canonical keys of all productions, in enumeration order. Throws if the
/// grammar has more than `cap` productions.
std::vector<std::string> enumerate_keys(const Grammar& g, std::size_t cap = 1000000);

}  // namespace gramts
