// gramts: grammar-guided Monte Carlo tree search over configuration
// spaces. Subcommands: run (one search), ablate (parameter sweep),
// enumerate (production counting / listing).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gramts/engine.hpp"
#include "gramts/evaluators.hpp"
#include "gramts/grammar.hpp"
#include "gramts/metrics.hpp"
#include "gramts/policies.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace gramts;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitUsage = 2;

struct PolicyOptions {
    std::string name = "uct";
    double c = 0.7;
    int j = 1;
    double gamma_pct = 85.0;  // percentage on the command line
    double smoothing = 1.0;
    std::string eq1_form = "paper";
};

std::unique_ptr<SelectionPolicy> make_policy(const PolicyOptions& o) {
    if (o.name == "uct") {
        auto form = o.eq1_form == "textbook" ? UctPolicy::Eq1Form::Textbook
                                             : UctPolicy::Eq1Form::Paper;
        return std::make_unique<UctPolicy>(o.c, form);
    }
    if (o.name == "bts") return std::make_unique<BtsPolicy>(o.j);
    if (o.name == "tpe") return std::make_unique<TpePolicy>(o.gamma_pct / 100.0, o.smoothing);
    throw CLI::ValidationError("--policy", "unknown policy '" + o.name + "'");
}

void add_policy_flags(CLI::App* cmd, PolicyOptions& o) {
    cmd->add_option("--policy", o.name, "Selection policy: uct|bts|tpe")
        ->check(CLI::IsMember({"uct", "bts", "tpe"}));
    cmd->add_option("--c", o.c, "UCT exploration constant");
    cmd->add_option("--j", o.j, "BTS bootstrap replicates");
    cmd->add_option("--gamma", o.gamma_pct, "TPE quantile as a percentage (e.g. 85)");
    cmd->add_option("--smoothing", o.smoothing, "TPE count smoothing");
    cmd->add_option("--eq1-form", o.eq1_form, "UCT bonus form: paper|textbook")
        ->check(CLI::IsMember({"paper", "textbook"}));
}

json outcome_to_json(const SearchOutcome& out) {
    json j;
    j["reward"] = out.reward;
    j["iterations"] = out.iterations_used;
    j["exhausted"] = out.exhausted;
    if (out.config) {
        j["key"] = out.config->canonical_key;
        json cfg = json::object();
        for (const auto& [path, value] : out.config->structured) cfg[path] = value;
        j["config"] = cfg;
    }
    return j;
}

void write_run_outputs(const fs::path& out_dir, const RunResult& result) {
    fs::create_directories(out_dir);
    {
        std::ofstream os(out_dir / "outcomes.jsonl", std::ios::binary);
        for (const SearchOutcome& out : result.outcomes) os << outcome_to_json(out).dump() << '\n';
    }
    {
        std::ofstream os(out_dir / "iterations.csv", std::ios::binary);
        write_iteration_csv(os, result.records);
    }
    {
        std::ofstream os(out_dir / "summary.csv", std::ios::binary);
        write_summary_csv(os, summarize(result.records));
    }
}

struct RunOptions {
    std::string grammar_path;
    PolicyOptions policy;
    std::string eval_spec = "synthetic:0";
    std::uint64_t budget_iters = 0;
    double budget_secs = 0;
    double timeout_s = 300.0;
    std::uint64_t seed = 0;
    int range_count = 3;
    std::string out_dir = "gramts-out";
    bool verbose = false;
};

Budget make_budget(const RunOptions& o) {
    if ((o.budget_iters > 0) == (o.budget_secs > 0)) {
        throw CLI::ValidationError("--budget", "exactly one of --budget-iters/--budget-secs");
    }
    return o.budget_iters > 0 ? Budget::iterations(o.budget_iters)
                              : Budget::wall_clock(o.budget_secs);
}

int cmd_run(const RunOptions& o) {
    Grammar grammar = expand_ranges(parse_grammar_file(o.grammar_path), o.range_count, o.seed);
    auto policy = make_policy(o.policy);
    auto evaluator = make_evaluator(o.eval_spec, grammar, o.timeout_s);

    // Deterministic evaluators are memoized so best-leaf extraction never
    // re-runs a fit.
    std::unique_ptr<CachedEvaluator> cache;
    RewardEvaluator* eval = evaluator.get();
    if (evaluator->deterministic()) {
        cache = std::make_unique<CachedEvaluator>(*evaluator);
        eval = cache.get();
    }

    RngStream rng(o.seed);
    SearchEngine engine(grammar, *policy, *eval, rng);
    RunResult result = engine.run(make_budget(o));

    write_run_outputs(o.out_dir, result);

    double best = 0;
    std::string best_key;
    for (const SearchOutcome& out : result.outcomes) {
        if (out.config && out.reward >= best) {
            best = out.reward;
            best_key = out.config->canonical_key;
        }
    }
    std::cout << "outcomes=" << result.outcomes.size() << " best_reward=" << format_value(best)
              << " exhausted=" << (result.exhausted ? "true" : "false") << '\n';
    if (!best_key.empty()) std::cout << "best_key=" << best_key << '\n';
    if (o.verbose) {
        AblationSummary s = summarize(result.records);
        std::ostringstream buf;
        write_summary_csv(buf, s);
        std::cout << buf.str();
    }
    return kExitOk;
}

struct AblateOptions {
    RunOptions base;
    std::vector<double> c_values;
    std::vector<int> j_values;
    std::vector<double> gamma_values;
    int runs = 4;
};

int cmd_ablate(const AblateOptions& o) {
    Grammar grammar =
        expand_ranges(parse_grammar_file(o.base.grammar_path), o.base.range_count, o.base.seed);

    struct Setting {
        std::string label;
        PolicyOptions policy;
    };
    std::vector<Setting> settings;
    for (double c : o.c_values) {
        PolicyOptions p = o.base.policy;
        p.name = "uct";
        p.c = c;
        settings.push_back({"c=" + format_value(c), p});
    }
    for (int j : o.j_values) {
        PolicyOptions p = o.base.policy;
        p.name = "bts";
        p.j = j;
        settings.push_back({"j=" + std::to_string(j), p});
    }
    for (double gamma : o.gamma_values) {
        PolicyOptions p = o.base.policy;
        p.name = "tpe";
        p.gamma_pct = gamma;
        settings.push_back({"gamma=" + format_value(gamma), p});
    }
    if (settings.empty()) {
        throw CLI::ValidationError("ablate", "give at least one of --c/--j/--gamma value lists");
    }

    std::ostringstream table;
    table << "setting,time_iter_mean,time_iter_std,time_first,tot_time,"
             "act_iter_mean,act_iter_std,first_act,tot_act,rep_ratio\n";
    for (const Setting& setting : settings) {
        auto policy = make_policy(setting.policy);
        AblationSummary acc;
        for (int run = 0; run < o.runs; ++run) {
            auto evaluator = make_evaluator(o.base.eval_spec, grammar, o.base.timeout_s);
            CachedEvaluator cache(*evaluator);
            RngStream rng(o.base.seed + static_cast<std::uint64_t>(run));
            SearchEngine engine(grammar, *policy, cache, rng);
            RunResult result = engine.run(make_budget(o.base));
            AblationSummary s = summarize(result.records);
            acc.time_iter_mean += s.time_iter_mean;
            acc.time_iter_std += s.time_iter_std;
            acc.time_first += s.time_first;
            acc.total_time += s.total_time;
            acc.actions_iter_mean += s.actions_iter_mean;
            acc.actions_iter_std += s.actions_iter_std;
            acc.first_actions += s.first_actions;
            acc.total_actions += s.total_actions;
            acc.repetition_ratio += s.repetition_ratio;
        }
        double n = static_cast<double>(o.runs);
        table << setting.label << ',' << format_value(acc.time_iter_mean / n) << ','
              << format_value(acc.time_iter_std / n) << ',' << format_value(acc.time_first / n)
              << ',' << format_value(acc.total_time / n) << ','
              << format_value(acc.actions_iter_mean / n) << ','
              << format_value(acc.actions_iter_std / n) << ','
              << format_value(acc.first_actions / n) << ',' << format_value(acc.total_actions / n)
              << ',' << format_value(acc.repetition_ratio / n) << '\n';
    }

    fs::create_directories(o.base.out_dir);
    std::ofstream os(fs::path(o.base.out_dir) / "ablation.csv", std::ios::binary);
    os << table.str();
    std::cout << table.str();
    return kExitOk;
}

struct EnumerateOptions {
    std::string grammar_path;
    bool list = false;
    std::uint64_t cap = 100000;
    int range_count = 3;
};

int cmd_enumerate(const EnumerateOptions& o) {
    Grammar grammar = expand_ranges(parse_grammar_file(o.grammar_path), o.range_count, 0);
    BigCount count = count_productions(grammar);
    std::cout << "productions=" << count.str() << '\n';
    if (o.list) {
        if (count > o.cap) {
            std::cout << "listing refused: production count exceeds cap " << o.cap << '\n';
        } else {
            for (const std::string& key : enumerate_keys(grammar, o.cap)) {
                std::cout << key << '\n';
            }
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grammar-guided MCTS configuration search"};
    app.require_subcommand(1);

    RunOptions run_opts;
    CLI::App* run = app.add_subcommand("run", "Run one search to a budget");
    run->add_option("--grammar", run_opts.grammar_path, "Grammar file")
        ->required()
        ->check(CLI::ExistingFile);
    add_policy_flags(run, run_opts.policy);
    run->add_option("--eval", run_opts.eval_spec, "tabular:<csv>|synthetic:<seed>[,planted]|cmd:<command>");
    run->add_option("--budget-iters", run_opts.budget_iters, "Iteration budget");
    run->add_option("--budget-secs", run_opts.budget_secs, "Wall-clock budget in seconds");
    run->add_option("--timeout-s", run_opts.timeout_s, "Per-evaluation timeout (seconds)");
    run->add_option("--seed", run_opts.seed, "Random seed");
    run->add_option("--range-count", run_opts.range_count, "Values per hyperparameter range");
    run->add_option("--out-dir", run_opts.out_dir, "Output directory");
    run->add_flag("-v,--verbose", run_opts.verbose, "Print the run summary");

    AblateOptions ablate_opts;
    CLI::App* ablate = app.add_subcommand("ablate", "Sweep a policy parameter");
    ablate->add_option("--grammar", ablate_opts.base.grammar_path, "Grammar file")
        ->required()
        ->check(CLI::ExistingFile);
    ablate->add_option("--c", ablate_opts.c_values, "UCT C values")->delimiter(',');
    ablate->add_option("--j", ablate_opts.j_values, "BTS J values")->delimiter(',');
    ablate->add_option("--gamma", ablate_opts.gamma_values, "TPE gamma percentages")
        ->delimiter(',');
    ablate->add_option("--eval", ablate_opts.base.eval_spec, "Evaluator spec");
    ablate->add_option("--budget-iters", ablate_opts.base.budget_iters, "Iterations per run");
    ablate->add_option("--budget-secs", ablate_opts.base.budget_secs, "Seconds per run");
    ablate->add_option("--timeout-s", ablate_opts.base.timeout_s, "Per-evaluation timeout");
    ablate->add_option("--runs", ablate_opts.runs, "Runs (seeds) per setting");
    ablate->add_option("--seed", ablate_opts.base.seed, "Base seed");
    ablate->add_option("--range-count", ablate_opts.base.range_count, "Values per range");
    ablate->add_option("--out-dir", ablate_opts.base.out_dir, "Output directory");

    EnumerateOptions enum_opts;
    CLI::App* enumerate = app.add_subcommand("enumerate", "Count (and list) all productions");
    enumerate->add_option("--grammar", enum_opts.grammar_path, "Grammar file")
        ->required()
        ->check(CLI::ExistingFile);
    enumerate->add_flag("--list", enum_opts.list, "List canonical keys (below the cap)");
    enumerate->add_option("--cap", enum_opts.cap, "Largest listable production count");
    enumerate->add_option("--range-count", enum_opts.range_count, "Values per range");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(run_opts);
        if (ablate->parsed()) return cmd_ablate(ablate_opts);
        if (enumerate->parsed()) return cmd_enumerate(enum_opts);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const GrammarError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const EvaluatorFatalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRunFailure;
    } catch (const EvaluatorError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRunFailure;
    }
    return kExitUsage;
}
