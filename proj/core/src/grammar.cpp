#include "gramts/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace gramts {

namespace {

std::string location_suffix(int line, int column) {
    if (line <= 0) return "";
    std::string s = " at line " + std::to_string(line);
    if (column > 0) s += ", column " + std::to_string(column);
    return s;
}

bool is_nonterminal_name(std::string_view s) {
    if (s.empty() || !(s[0] >= 'A' && s[0] <= 'Z')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
    });
}

// Shortest decimal spelling that round-trips, always carrying a decimal
// point (or exponent) so grid values read as reals: 32 -> "32.0".
std::string format_real(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    std::string s = buf;
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
        s += ".0";
    }
    return s;
}

// Round to nearest, exact halves toward negative infinity: 2.5 -> 2.
long long round_half_down(double v) {
    return static_cast<long long>(std::ceil(v - 0.5));
}

struct LineParser {
    std::string_view text;
    int line_no;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw GrammarError(msg, line_no, static_cast<int>(pos) + 1);
    }

    void skip_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= text.size() || text[pos] == '#';
    }

    char peek() const { return pos < text.size() ? text[pos] : '\0'; }

    bool consume(std::string_view token) {
        skip_ws();
        if (text.substr(pos, token.size()) == token) {
            pos += token.size();
            return true;
        }
        return false;
    }

    std::string parse_quoted() {
        // opening quote already checked by caller
        ++pos;
        std::string out;
        while (pos < text.size()) {
            char c = text[pos];
            if (c == '"') {
                ++pos;
                return out;
            }
            if (c == '\\' && pos + 1 < text.size()) {
                ++pos;
                c = text[pos];
            }
            out += c;
            ++pos;
        }
        fail("unterminated string literal");
    }

    std::string parse_word() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
               text[pos] != '|' && text[pos] != '#' && text[pos] != '(' && text[pos] != ')' &&
               text[pos] != ',') {
            ++pos;
        }
        return std::string(text.substr(start, pos - start));
    }

    std::pair<double, std::string> parse_number() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                     text[pos] == '+' || text[pos] == '-' || text[pos] == '.')) {
            ++pos;
        }
        std::string tok(text.substr(start, pos - start));
        char* end = nullptr;
        double v = std::strtod(tok.c_str(), &end);
        if (tok.empty() || end != tok.c_str() + tok.size()) fail("expected a number");
        return {v, tok};
    }

    RangeSpec parse_range() {
        RangeSpec r;
        if (!consume("(")) fail("expected '(' after range");
        std::tie(r.low, r.low_text) = parse_number();
        if (!consume(",")) fail("expected ',' in range");
        std::tie(r.high, r.high_text) = parse_number();
        if (!consume(",")) fail("expected ',' in range");
        std::string scale = parse_word();
        if (scale == "uniform") {
            r.scale = RangeSpec::Scale::Uniform;
        } else if (scale == "log") {
            r.scale = RangeSpec::Scale::Log;
        } else {
            fail("range scale must be 'uniform' or 'log', got '" + scale + "'");
        }
        if (consume(",")) {
            skip_ws();
            std::string next = parse_word();
            if (next == "int") {
                r.integral = true;
            } else {
                int n = 0;
                auto [p, ec] = std::from_chars(next.data(), next.data() + next.size(), n);
                if (ec != std::errc{} || p != next.data() + next.size() || n < 2) {
                    fail("range count must be an integer >= 2");
                }
                r.count = n;
                if (consume(",")) {
                    if (parse_word() != "int") fail("expected 'int'");
                    r.integral = true;
                }
            }
        }
        if (!consume(")")) fail("expected ')' to close range");
        return r;
    }
};

void check_references(const std::vector<Rule>& rules,
                      const std::unordered_map<std::string, std::size_t>& index) {
    for (const Rule& rule : rules) {
        for (const Alternative& alt : rule.alternatives) {
            for (const Symbol& sym : alt.symbols) {
                if (!sym.is_terminal() && !index.count(sym.name)) {
                    throw GrammarError("undefined non-terminal " + sym.name);
                }
            }
        }
    }
}

void check_reachability(const Symbol& start, const std::vector<Rule>& rules,
                        const std::unordered_map<std::string, std::size_t>& index) {
    std::set<std::string> seen;
    std::vector<std::string> stack{start.name};
    while (!stack.empty()) {
        std::string name = std::move(stack.back());
        stack.pop_back();
        if (!seen.insert(name).second) continue;
        const Rule& rule = rules[index.at(name)];
        for (const Alternative& alt : rule.alternatives) {
            for (const Symbol& sym : alt.symbols) {
                if (!sym.is_terminal()) stack.push_back(sym.name);
            }
        }
    }
    for (const Rule& rule : rules) {
        if (!seen.count(rule.lhs.name)) {
            throw GrammarError("unreachable rule " + rule.lhs.name);
        }
    }
}

void check_acyclic(const std::vector<Rule>& rules,
                   const std::unordered_map<std::string, std::size_t>& index) {
    enum class Mark { None, OnStack, Done };
    std::unordered_map<std::string, Mark> marks;
    std::function<void(const std::string&)> visit = [&](const std::string& name) {
        Mark& m = marks[name];
        if (m == Mark::OnStack) throw GrammarError("recursive grammar: cycle through " + name);
        if (m == Mark::Done) return;
        m = Mark::OnStack;
        for (const Alternative& alt : rules[index.at(name)].alternatives) {
            for (const Symbol& sym : alt.symbols) {
                if (!sym.is_terminal()) visit(sym.name);
            }
        }
        marks[name] = Mark::Done;
    };
    for (const Rule& rule : rules) visit(rule.lhs.name);
}

}  // namespace

GrammarError::GrammarError(std::string message, int line, int column)
    : std::runtime_error(message + location_suffix(line, column)), line_(line), column_(column) {}

Grammar::Grammar(Symbol start, std::vector<Rule> rules)
    : start_(std::move(start)), rules_(std::move(rules)) {
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        if (!index_.emplace(rules_[i].lhs.name, i).second) {
            throw GrammarError("duplicate rule for " + rules_[i].lhs.name);
        }
    }
    if (!index_.count(start_.name)) {
        throw GrammarError("start symbol " + start_.name + " has no rule");
    }
    check_references(rules_, index_);
    check_reachability(start_, rules_, index_);
    check_acyclic(rules_, index_);
}

bool Grammar::has_rule(const std::string& nonterminal) const {
    return index_.count(nonterminal) != 0;
}

const Rule& Grammar::rule(const std::string& nonterminal) const {
    auto it = index_.find(nonterminal);
    if (it == index_.end()) throw GrammarError("undefined non-terminal " + nonterminal);
    return rules_[it->second];
}

bool Grammar::expanded() const {
    for (const Rule& rule : rules_) {
        for (const Alternative& alt : rule.alternatives) {
            if (alt.is_range()) return false;
        }
    }
    return true;
}

Grammar parse_grammar(std::string_view text) {
    if (text.empty()) throw GrammarError("empty grammar source");

    std::vector<Rule> rules;
    std::optional<std::string> start_override;

    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        LineParser lp{raw, line_no};
        if (lp.at_end()) continue;

        if (lp.consume("%start")) {
            std::string name = lp.parse_word();
            if (!is_nonterminal_name(name)) lp.fail("%start expects a non-terminal name");
            if (start_override) lp.fail("duplicate %start directive");
            start_override = name;
            if (!lp.at_end()) lp.fail("trailing input after %start directive");
            continue;
        }

        std::string lhs = lp.parse_word();
        if (!is_nonterminal_name(lhs)) {
            lp.fail("rule left-hand side must be a non-terminal ([A-Z][A-Z0-9_]*), got '" + lhs +
                    "'");
        }
        if (!lp.consume(":=")) lp.fail("expected ':=' after " + lhs);

        Rule rule{Symbol{lhs, SymbolKind::NonTerminal}, {}};
        Alternative alt;
        auto flush_alt = [&] {
            if (!alt.is_range() && alt.symbols.empty()) lp.fail("empty alternative in " + lhs);
            rule.alternatives.push_back(std::move(alt));
            alt = Alternative{};
        };

        while (!lp.at_end()) {
            if (lp.consume("|")) {
                flush_alt();
                continue;
            }
            if (lp.peek() == '"') {
                alt.symbols.push_back(Symbol{lp.parse_quoted(), SymbolKind::Terminal});
                continue;
            }
            std::string word = lp.parse_word();
            if (word == "range") {
                if (!alt.symbols.empty() || alt.is_range()) {
                    lp.fail("a range must be the whole alternative");
                }
                alt.range = lp.parse_range();
                continue;
            }
            if (alt.is_range()) lp.fail("a range must be the whole alternative");
            if (!is_nonterminal_name(word)) {
                lp.fail("expected a symbol, got '" + word + "'");
            }
            alt.symbols.push_back(Symbol{word, SymbolKind::NonTerminal});
        }
        flush_alt();
        rules.push_back(std::move(rule));
    }

    if (rules.empty()) throw GrammarError("grammar defines no rules");
    Symbol start{start_override.value_or(rules.front().lhs.name), SymbolKind::NonTerminal};
    return Grammar(std::move(start), std::move(rules));
}

Grammar parse_grammar_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GrammarError("cannot open grammar file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_grammar(buf.str());
}

Grammar expand_ranges(const Grammar& g, int default_count, std::uint64_t /*seed*/) {
    if (default_count < 2) throw GrammarError("expansion count must be >= 2");

    std::vector<Rule> rules;
    rules.reserve(g.rules().size());
    for (const Rule& rule : g.rules()) {
        Rule out{rule.lhs, {}};
        for (const Alternative& alt : rule.alternatives) {
            if (!alt.is_range()) {
                out.alternatives.push_back(alt);
                continue;
            }
            const RangeSpec& r = *alt.range;
            if (!(r.low < r.high)) {
                throw GrammarError("invalid range in " + rule.lhs.name + ": low >= high");
            }
            if (r.scale == RangeSpec::Scale::Log && r.low <= 0) {
                throw GrammarError("invalid range in " + rule.lhs.name +
                                   ": log scale requires low > 0");
            }
            int count = r.count.value_or(default_count);
            std::vector<std::string> values;
            for (int i = 0; i < count; ++i) {
                double t = static_cast<double>(i) / (count - 1);
                double v = r.scale == RangeSpec::Scale::Uniform
                               ? r.low + t * (r.high - r.low)
                               : std::exp(std::log(r.low) + t * (std::log(r.high) - std::log(r.low)));
                std::string text;
                if (r.integral) {
                    text = std::to_string(round_half_down(v));
                } else if (i == 0) {
                    text = r.low_text;
                } else if (i == count - 1) {
                    text = r.high_text;
                } else {
                    text = format_real(v);
                }
                if (std::find(values.begin(), values.end(), text) == values.end()) {
                    values.push_back(std::move(text));
                }
            }
            for (std::string& v : values) {
                Alternative terminal_alt;
                terminal_alt.symbols.push_back(Symbol{std::move(v), SymbolKind::Terminal});
                out.alternatives.push_back(std::move(terminal_alt));
            }
        }
        rules.push_back(std::move(out));
    }
    return Grammar(g.start(), std::move(rules));
}

BigCount count_productions(const Grammar& g) {
    if (!g.expanded()) throw GrammarError("count_productions requires an expanded grammar");
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
    return count(g.start().name);
}

}  // namespace gramts
