#include "gramts/evaluators.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>
#include <fstream>
#include <sstream>

#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"

namespace gramts {

namespace {

using json = nlohmann::json;

void check_range(double reward, const std::string& origin) {
    if (!(reward >= 0.0 && reward <= 1.0)) {
        throw EvaluatorError(origin + " returned reward outside [0,1]: " + std::to_string(reward));
    }
}

}  // namespace

// ------------------------------------------------------------- tabular

TabularOracle::TabularOracle(std::map<std::string, double> table,
                             std::optional<double> default_reward)
    : table_(std::move(table)), default_(default_reward) {
    for (const auto& [key, reward] : table_) check_range(reward, "tabular oracle");
    if (default_) check_range(*default_, "tabular oracle default");
}

TabularOracle TabularOracle::from_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EvaluatorError("cannot open tabular oracle file " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("key,reward", 0) != 0) {
        throw EvaluatorError(path + ": expected CSV header 'key,reward'");
    }
    std::map<std::string, double> table;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        // key is quoted and may contain commas; reward follows the closing
        // quote and comma.
        if (line.front() != '"') {
            throw EvaluatorError(path + ":" + std::to_string(line_no) + ": key must be quoted");
        }
        std::size_t close = line.find('"', 1);
        if (close == std::string::npos || close + 1 >= line.size() || line[close + 1] != ',') {
            throw EvaluatorError(path + ":" + std::to_string(line_no) + ": malformed row");
        }
        std::string key = line.substr(1, close - 1);
        double reward = std::stod(line.substr(close + 2));
        table[key] = reward;
    }
    return TabularOracle(std::move(table));
}

double TabularOracle::evaluate(const PipelineConfig& config) {
    auto it = table_.find(config.canonical_key);
    if (it != table_.end()) return it->second;
    if (default_) return *default_;
    throw EvaluatorError("tabular oracle has no entry for key '" + config.canonical_key + "'");
}

void TabularOracle::set(const std::string& key, double reward) {
    check_range(reward, "tabular oracle");
    table_[key] = reward;
}

// ------------------------------------------------------------ synthetic

SyntheticEvaluator::SyntheticEvaluator(std::uint64_t seed, std::optional<std::string> planted_key)
    : seed_(seed), planted_(std::move(planted_key)) {}

double SyntheticEvaluator::hash_reward(std::uint64_t seed, const std::string& key) {
    // FNV-1a over the key bytes, mixed with the seed via splitmix64
    // finalization. Platform independent.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : key) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::uint64_t z = h + 0x9e3779b97f4a7c15ull * (seed + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

double SyntheticEvaluator::evaluate(const PipelineConfig& config) {
    if (planted_ && config.canonical_key == *planted_) return 1.0;
    return hash_reward(seed_, config.canonical_key);
}

// ------------------------------------------------------------- external

struct ExternalEvaluator::Worker {
    pid_t pid = -1;
    int to_child = -1;    // we write requests here
    int from_child = -1;  // we read responses here
    std::string buffer;   // unconsumed response bytes

    ~Worker() {
        if (to_child >= 0) close(to_child);
        if (from_child >= 0) close(from_child);
        if (pid > 0) {
            kill(pid, SIGKILL);
            waitpid(pid, nullptr, 0);
        }
    }
};

ExternalEvaluator::ExternalEvaluator(std::string command, double timeout_s,
                                     int max_consecutive_failures)
    : command_(std::move(command)), timeout_s_(timeout_s), max_failures_(max_consecutive_failures) {
    if (command_.empty()) throw EvaluatorError("external evaluator: empty command");
    if (timeout_s_ <= 0) throw EvaluatorError("external evaluator: timeout must be > 0");
}

ExternalEvaluator::~ExternalEvaluator() = default;

void ExternalEvaluator::ensure_worker() {
    if (worker_ && worker_->pid > 0) return;

    // A dead worker must surface as a write error, not SIGPIPE.
    signal(SIGPIPE, SIG_IGN);

    int in_pipe[2];   // parent -> child
    int out_pipe[2];  // child -> parent
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
        throw EvaluatorFatalError("external evaluator: pipe() failed");
    }
    pid_t pid = fork();
    if (pid < 0) throw EvaluatorFatalError("external evaluator: fork() failed");
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    worker_ = std::make_unique<Worker>();
    worker_->pid = pid;
    worker_->to_child = in_pipe[1];
    worker_->from_child = out_pipe[0];
}

void ExternalEvaluator::kill_worker() { worker_.reset(); }

double ExternalEvaluator::evaluate(const PipelineConfig& config) {
    auto fail = [&](const std::string& what, bool protocol) -> double {
        if (protocol) ++protocol_errors_;
        kill_worker();
        if (++consecutive_failures_ >= max_failures_) {
            throw EvaluatorFatalError("external evaluator: too many consecutive failures (last: " +
                                      what + ")");
        }
        throw EvaluatorError("external evaluator: " + what);
    };

    ensure_worker();
    std::uint64_t id = next_id_++;

    json request;
    request["id"] = id;
    request["key"] = config.canonical_key;
    request["timeout_s"] = timeout_s_;
    json cfg = json::object();
    for (const auto& [path, value] : config.structured) cfg[path] = value;
    request["config"] = cfg;

    std::string line = request.dump() + "\n";
    ssize_t written = write(worker_->to_child, line.data(), line.size());
    if (written != static_cast<ssize_t>(line.size())) {
        return fail("worker write failed (crashed?)", false);
    }

    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::duration<double>(timeout_s_);
    std::string response;
    for (;;) {
        std::size_t nl = worker_->buffer.find('\n');
        if (nl != std::string::npos) {
            response = worker_->buffer.substr(0, nl);
            worker_->buffer.erase(0, nl + 1);
            break;
        }
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (remaining.count() <= 0) {
            // Timed out: terminate the wedged worker and report reward 0.
            ++timeouts_;
            kill_worker();
            consecutive_failures_ = 0;
            return 0.0;
        }
        pollfd pfd{worker_->from_child, POLLIN, 0};
        int ready = poll(&pfd, 1, static_cast<int>(remaining.count()));
        if (ready < 0 && errno != EINTR) return fail("poll() failed", false);
        if (ready <= 0) continue;
        char chunk[4096];
        ssize_t n = read(worker_->from_child, chunk, sizeof(chunk));
        if (n <= 0) return fail("worker closed its output (crashed?)", false);
        worker_->buffer.append(chunk, static_cast<std::size_t>(n));
    }

    json reply = json::parse(response, nullptr, false);
    if (reply.is_discarded() || !reply.is_object() || !reply.contains("id")) {
        return fail("malformed response line: " + response, true);
    }
    if (reply["id"].get<std::uint64_t>() != id) {
        return fail("response id mismatch", true);
    }
    if (reply.contains("error")) {
        // Worker-reported failure: reward 0, run continues.
        consecutive_failures_ = 0;
        return 0.0;
    }
    if (!reply.contains("reward") || !reply["reward"].is_number()) {
        return fail("response has no numeric reward", true);
    }
    double reward = reply["reward"].get<double>();
    if (!(reward >= 0.0 && reward <= 1.0)) {
        return fail("reward outside [0,1]: " + std::to_string(reward), true);
    }
    consecutive_failures_ = 0;
    return reward;
}

// -------------------------------------------------------------- caching

CachedEvaluator::CachedEvaluator(RewardEvaluator& inner) : inner_(&inner) {
    if (!inner.deterministic()) {
        throw EvaluatorError("cannot cache a nondeterministic evaluator");
    }
}

double CachedEvaluator::evaluate(const PipelineConfig& config) {
    auto it = cache_.find(config.canonical_key);
    if (it != cache_.end()) return it->second;
    ++inner_calls_;
    double reward = inner_->evaluate(config);
    check_range(reward, "cached evaluator inner");
    cache_.emplace(config.canonical_key, reward);
    return reward;
}

// -------------------------------------------------------------- factory

std::unique_ptr<RewardEvaluator> make_evaluator(const std::string& spec, const Grammar& grammar,
                                                double timeout_s, std::size_t enumeration_cap) {
    auto colon = spec.find(':');
    if (colon == std::string::npos) {
        throw EvaluatorError("evaluator spec must look like tabular:..., synthetic:... or cmd:...");
    }
    std::string kind = spec.substr(0, colon);
    std::string rest = spec.substr(colon + 1);

    if (kind == "tabular") {
        return std::make_unique<TabularOracle>(TabularOracle::from_csv_file(rest));
    }
    if (kind == "synthetic") {
        bool planted = false;
        auto comma = rest.find(',');
        if (comma != std::string::npos) {
            if (rest.substr(comma + 1) != "planted") {
                throw EvaluatorError("unknown synthetic option '" + rest.substr(comma + 1) + "'");
            }
            planted = true;
            rest = rest.substr(0, comma);
        }
        std::uint64_t seed = std::stoull(rest);
        std::optional<std::string> planted_key;
        if (planted) {
            // Place the optimum on the key the hash already favors.
            double best = -1.0;
            for (const std::string& key : enumerate_keys(grammar, enumeration_cap)) {
                double r = SyntheticEvaluator::hash_reward(seed, key);
                if (r > best) {
                    best = r;
                    planted_key = key;
                }
            }
        }
        return std::make_unique<SyntheticEvaluator>(seed, std::move(planted_key));
    }
    if (kind == "cmd") {
        return std::make_unique<ExternalEvaluator>(rest, timeout_s);
    }
    throw EvaluatorError("unknown evaluator kind '" + kind + "'");
}

}  // namespace gramts
