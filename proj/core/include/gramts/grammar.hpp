#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace gramts {

using BigCount = boost::multiprecision::cpp_int;

enum class SymbolKind { NonTerminal, Terminal };

struct Symbol {
    std::string name;
    SymbolKind kind = SymbolKind::Terminal;

    bool is_terminal() const { return kind == SymbolKind::Terminal; }
    bool operator==(const Symbol&) const = default;
};

/// Continuous hyperparameter range, discretized at expansion time.
struct RangeSpec {
    enum class Scale { Uniform, Log };

    double low = 0.0;
    double high = 0.0;
    Scale scale = Scale::Uniform;
    std::optional<int> count;  // absent: use the expansion default
    bool integral = false;

    // Source spellings, reused verbatim for the endpoint terminals.
    std::string low_text;
    std::string high_text;
};

/// One right-hand side option: either a symbol sequence or a range.
struct Alternative {
    std::vector<Symbol> symbols;
    std::optional<RangeSpec> range;

    bool is_range() const { return range.has_value(); }
};

struct Rule {
    Symbol lhs;
    std::vector<Alternative> alternatives;  // source order
};

class GrammarError : public std::runtime_error {
public:
    GrammarError(std::string message, int line = 0, int column = 0);

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

/// Context-free grammar. Immutable after construction; shareable across
/// threads.
class Grammar {
public:
    Grammar(Symbol start, std::vector<Rule> rules);

    const Symbol& start() const { return start_; }
    const std::vector<Rule>& rules() const { return rules_; }

    bool has_rule(const std::string& nonterminal) const;
    const Rule& rule(const std::string& nonterminal) const;

    /// True once every range alternative has been discretized.
    bool expanded() const;

private:
    Symbol start_;
    std::vector<Rule> rules_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Parses the grammar text format:
///   LHS := alt ( "|" alt )*
/// with double-quoted terminals, `range(low, high, uniform|log[, count[, int]])`
/// alternatives, `#` comments, blank lines, and an optional `%start NAME`
/// directive. Undefined or unreachable non-terminals, duplicate left-hand
/// sides and recursive rules are load-time errors.
Grammar parse_grammar(std::string_view text);

Grammar parse_grammar_file(const std::string& path);

/// Replaces every range alternative by a deterministic grid of terminals:
/// endpoints plus evenly (uniform) or geometrically (log) spaced interior
/// points. Integer ranges round half-down and deduplicate. `seed` is
/// reserved for a future stochastic mode; the grid ignores it.
Grammar expand_ranges(const Grammar& g, int default_count = 3, std::uint64_t seed = 0);

/// Exact number of distinct complete derivations (memoized product-sum
/// over the rule DAG).
BigCount count_productions(const Grammar& g);

}  // namespace gramts
