#include "gramts/derivation.hpp"

#include <algorithm>

namespace gramts {

DerivationState DerivationState::initial(const Grammar& g) {
    DerivationState s;
    s.form_.push_back(g.start());
    return s;
}

bool DerivationState::complete() const {
    return std::all_of(form_.begin(), form_.end(),
                       [](const Symbol& s) { return s.is_terminal(); });
}

std::optional<std::size_t> DerivationState::leftmost_nonterminal() const {
    for (std::size_t i = 0; i < form_.size(); ++i) {
        if (!form_[i].is_terminal()) return i;
    }
    return std::nullopt;
}

DerivationState apply_rule(const DerivationState& s, int alt_index, const Grammar& g) {
    auto pos = s.leftmost_nonterminal();
    if (!pos) throw GrammarError("cannot apply a rule to a complete derivation");
    const Rule& rule = g.rule(s.form_[*pos].name);
    if (alt_index < 0 || alt_index >= static_cast<int>(rule.alternatives.size())) {
        throw GrammarError("alternative index " + std::to_string(alt_index) + " out of range for " +
                           rule.lhs.name);
    }
    const Alternative& alt = rule.alternatives[alt_index];
    if (alt.is_range()) throw GrammarError("grammar not expanded: range alternative in " +
                                           rule.lhs.name);

    DerivationState out;
    out.form_.reserve(s.form_.size() + alt.symbols.size() - 1);
    out.form_.insert(out.form_.end(), s.form_.begin(), s.form_.begin() + *pos);
    out.form_.insert(out.form_.end(), alt.symbols.begin(), alt.symbols.end());
    out.form_.insert(out.form_.end(), s.form_.begin() + *pos + 1, s.form_.end());
    out.trace_ = s.trace_;
    out.trace_.push_back(DerivationStep{rule.lhs.name, alt_index});
    return out;
}

int applicable_alternatives(const DerivationState& s, const Grammar& g) {
    auto pos = s.leftmost_nonterminal();
    if (!pos) return 0;
    return static_cast<int>(g.rule(s.sentential_form()[*pos].name).alternatives.size());
}

PipelineConfig to_config(const DerivationState& s, const Grammar& g) {
    if (!s.complete()) throw GrammarError("cannot build a configuration from a partial derivation");

    PipelineConfig cfg;
    for (const Symbol& sym : s.sentential_form()) cfg.terminals.push_back(sym.name);
    for (std::size_t i = 0; i < cfg.terminals.size(); ++i) {
        if (i) cfg.canonical_key += ' ';
        cfg.canonical_key += cfg.terminals[i];
    }

    // One structured entry per terminal introduced by each derivation step,
    // keyed "<step>:<non-terminal>" (".<k>" suffix when a step introduces
    // several terminals).
    for (std::size_t step = 0; step < s.trace().size(); ++step) {
        const DerivationStep& d = s.trace()[step];
        const Alternative& alt = g.rule(d.nonterminal).alternatives[d.alternative];
        std::size_t nth = 0;
        for (const Symbol& sym : alt.symbols) {
            if (!sym.is_terminal()) continue;
            std::string key = std::to_string(step) + ":" + d.nonterminal;
            if (nth > 0) key += "." + std::to_string(nth);
            ++nth;
            cfg.structured.emplace_back(std::move(key), sym.name);
        }
    }
    return cfg;
}

BigCount count_completions(const DerivationState& s, const Grammar& g) {
    std::unordered_map<std::string, BigCount> memo;
    std::function<BigCount(const std::string&)> count = [&](const std::string& name) -> BigCount {
        auto it = memo.find(name);
        if (it != memo.end()) return it->second;
        BigCount total = 0;
        for (const Alternative& alt : g.rule(name).alternatives) {
            BigCount prod = 1;
            for (const Symbol& sym : alt.symbols) {
                if (!sym.is_terminal()) prod *= count(sym.name);
            }
            total += prod;
        }
        memo[name] = total;
        return total;
    };
    BigCount total = 1;
    for (const Symbol& sym : s.sentential_form()) {
        if (!sym.is_terminal()) total *= count(sym.name);
    }
    return total;
}

bool enumerate_productions(const Grammar& g,
                           const std::function<bool(const DerivationState&)>& visit) {
    std::function<bool(const DerivationState&)> walk = [&](const DerivationState& s) -> bool {
        if (s.complete()) return visit(s);
        int n = applicable_alternatives(s, g);
        for (int i = 0; i < n; ++i) {
            if (!walk(apply_rule(s, i, g))) return false;
        }
        return true;
    };
    return walk(DerivationState::initial(g));
}

std::vector<std::string> enumerate_keys(const Grammar& g, std::size_t cap) {
    std::vector<std::string> keys;
    bool finished = enumerate_productions(g, [&](const DerivationState& s) {
        if (keys.size() >= cap) return false;
        keys.push_back(to_config(s, g).canonical_key);
        return true;
    });
    if (!finished) {
        throw GrammarError("grammar has more than " + std::to_string(cap) + " productions");
    }
    return keys;
}

}  // namespace gramts
