#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CommandResult run_cli(const std::string& args) {
    std::string cmd = std::string(GRAMTS_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CommandResult result;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) result.output.append(buf, n);
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string demo_grammar() { return std::string(GRAMTS_GRAMMAR_DIR) + "/demo.gram"; }

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / name;
        fs::remove_all(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

}  // namespace

TEST_CASE("run writes outcome and metrics files and exits zero") {
    TempDir dir("gramts_cli_run");
    auto r = run_cli("run --grammar " + demo_grammar() +
                     " --policy uct --c 0.7 --eval synthetic:1 --budget-iters 50 --seed 3"
                     " --out-dir " + dir.path.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("outcomes=") != std::string::npos);
    CHECK(r.output.find("best_reward=") != std::string::npos);

    std::string outcomes = read_file(dir.path / "outcomes.jsonl");
    CHECK_FALSE(outcomes.empty());
    CHECK(outcomes.find("\"key\"") != std::string::npos);
    std::string iterations = read_file(dir.path / "iterations.csv");
    CHECK(iterations.rfind("iter,", 0) == 0);
    std::string summary = read_file(dir.path / "summary.csv");
    CHECK(summary.rfind("time_iter_mean,", 0) == 0);
}

TEST_CASE("a missing grammar file is a usage error") {
    auto r = run_cli("run --grammar /nonexistent.gram --budget-iters 5");
    CHECK(r.exit_code == 2);
    CHECK_FALSE(r.output.empty());
}

TEST_CASE("a malformed grammar is a usage error") {
    TempDir dir("gramts_cli_badgram");
    fs::create_directories(dir.path);
    fs::path bad = dir.path / "bad.gram";
    {
        std::ofstream os(bad);
        os << "S := A\n";  // A undefined
    }
    auto r = run_cli("run --grammar " + bad.string() + " --budget-iters 5 --out-dir " +
                     (dir.path / "out").string());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("error:") != std::string::npos);
}

TEST_CASE("giving both budgets is a usage error") {
    auto r = run_cli("run --grammar " + demo_grammar() + " --budget-iters 5 --budget-secs 1");
    CHECK(r.exit_code == 2);
}

TEST_CASE("same seed twice gives byte-identical outcome files") {
    TempDir a("gramts_cli_seed_a");
    TempDir b("gramts_cli_seed_b");
    std::string common = "run --grammar " + demo_grammar() +
                         " --policy tpe --gamma 85 --eval synthetic:9 --budget-iters 150 --seed 7"
                         " --out-dir ";
    CHECK(run_cli(common + a.path.string()).exit_code == 0);
    CHECK(run_cli(common + b.path.string()).exit_code == 0);
    std::string first = read_file(a.path / "outcomes.jsonl");
    CHECK_FALSE(first.empty());
    CHECK(first == read_file(b.path / "outcomes.jsonl"));
}

TEST_CASE("ablate emits one row per setting") {
    TempDir dir("gramts_cli_ablate");
    auto r = run_cli("ablate --grammar " + demo_grammar() +
                     " --c 0,0.7 --j 1 --gamma 85 --eval synthetic:2 --budget-iters 20"
                     " --runs 2 --seed 1 --out-dir " + dir.path.string());
    CHECK(r.exit_code == 0);
    std::istringstream lines(read_file(dir.path / "ablation.csv"));
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty()) rows.push_back(line);
    }
    REQUIRE(rows.size() == 5);  // header + c=0, c=0.7, j=1, gamma=85
    CHECK(rows[0].rfind("setting,", 0) == 0);
    CHECK(rows[1].rfind("c=0,", 0) == 0);
    CHECK(rows[2].rfind("c=0.7,", 0) == 0);
    CHECK(rows[3].rfind("j=1,", 0) == 0);
    CHECK(rows[4].rfind("gamma=85,", 0) == 0);
}

TEST_CASE("ablate without any sweep values is a usage error") {
    auto r = run_cli("ablate --grammar " + demo_grammar() + " --budget-iters 5");
    CHECK(r.exit_code == 2);
}

TEST_CASE("enumerate counts and lists productions") {
    auto count = run_cli("enumerate --grammar " + demo_grammar());
    CHECK(count.exit_code == 0);
    CHECK(count.output.find("productions=") != std::string::npos);

    auto listing = run_cli("enumerate --grammar " + demo_grammar() + " --list");
    CHECK(listing.exit_code == 0);
    // count the listed keys against the reported total
    std::istringstream lines(listing.output);
    std::string line;
    long total = -1, listed = 0;
    while (std::getline(lines, line)) {
        if (line.rfind("productions=", 0) == 0) {
            total = std::stol(line.substr(line.find('=') + 1));
        } else if (!line.empty()) {
            ++listed;
        }
    }
    CHECK(total > 0);
    CHECK(listed == total);
}

TEST_CASE("enumerate refuses to list past the cap") {
    auto r = run_cli("enumerate --grammar " + demo_grammar() + " --list --cap 10");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("listing refused") != std::string::npos);
}

TEST_CASE("a permanently failing evaluator command exits with a run failure") {
    TempDir dir("gramts_cli_fatal");
    auto r = run_cli("run --grammar " + demo_grammar() +
                     " --eval cmd:false --budget-iters 20 --out-dir " + dir.path.string());
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("error:") != std::string::npos);
}

TEST_CASE("no subcommand is a usage error and --help is not") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("--help").exit_code == 0);
}
