#include <benchmark/benchmark.h>

#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "gramts/engine.hpp"
#include "gramts/evaluators.hpp"
#include "gramts/grammar.hpp"
#include "gramts/policies.hpp"

using namespace gramts;

namespace {

std::string demo_text() {
    static std::string text = [] {
        std::ifstream in(std::string(GRAMTS_GRAMMAR_DIR) + "/demo.gram");
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    }();
    return text;
}

const Grammar& demo_grammar() {
    static Grammar g = expand_ranges(parse_grammar(demo_text()));
    return g;
}

std::unique_ptr<SelectionPolicy> make_policy(int which) {
    switch (which) {
        case 0: return std::make_unique<UctPolicy>(0.7);
        case 1: return std::make_unique<BtsPolicy>(1);
        default: return std::make_unique<TpePolicy>(0.85);
    }
}

}  // namespace

static void BM_ParseGrammar(benchmark::State& state) {
    std::string text = demo_text();
    for (auto _ : state) {
        benchmark::DoNotOptimize(parse_grammar(text));
    }
}
BENCHMARK(BM_ParseGrammar);

static void BM_ExpandRanges(benchmark::State& state) {
    Grammar raw = parse_grammar(demo_text());
    for (auto _ : state) {
        benchmark::DoNotOptimize(expand_ranges(raw));
    }
}
BENCHMARK(BM_ExpandRanges);

static void BM_CountProductions(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(count_productions(demo_grammar()));
    }
}
BENCHMARK(BM_CountProductions);

// One hundred search iterations on the demo grammar; the argument picks
// the selection policy (0=uct, 1=bts, 2=tpe).
static void BM_SearchIterations(benchmark::State& state) {
    const Grammar& g = demo_grammar();
    auto policy = make_policy(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        SyntheticEvaluator eval(5);
        RngStream rng(1);
        SearchEngine engine(g, *policy, eval, rng);
        benchmark::DoNotOptimize(engine.run(Budget::iterations(100)));
    }
    state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_SearchIterations)->Arg(0)->Arg(1)->Arg(2);

BENCHMARK_MAIN();
