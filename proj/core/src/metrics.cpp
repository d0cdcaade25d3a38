#include "gramts/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gramts {

namespace {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(std::span<const double> values) {
    MeanStd out;
    if (values.empty()) return out;
    double sum = 0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return out;
    double ss = 0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return out;
}

}  // namespace

std::string format_value(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_value failed");
    return std::string(buf, end);
}

AblationSummary summarize(std::span<const IterationRecord> records) {
    AblationSummary s;
    if (records.empty()) return s;

    std::vector<double> times, actions;
    times.reserve(records.size());
    actions.reserve(records.size());
    std::uint64_t repeated = 0;
    for (const IterationRecord& r : records) {
        times.push_back(r.algorithm_time_s);
        actions.push_back(static_cast<double>(r.actions));
        s.total_time += r.algorithm_time_s;
        s.total_actions += static_cast<double>(r.actions);
        if (r.repeated) ++repeated;
    }
    auto t = mean_std(times);
    auto a = mean_std(actions);
    s.time_iter_mean = t.mean;
    s.time_iter_std = t.std;
    s.actions_iter_mean = a.mean;
    s.actions_iter_std = a.std;
    s.time_first = records.front().algorithm_time_s;
    s.first_actions = static_cast<double>(records.front().actions);
    s.repetition_ratio = static_cast<double>(repeated) / static_cast<double>(records.size());
    return s;
}

RunTrace anytime_trace(const RunTrace& raw, std::optional<double> true_max) {
    RunTrace out;
    out.points.reserve(raw.points.size());
    for (const auto& [t, best] : raw.points) {
        double value = true_max ? 1.0 - (*true_max - best) : best;
        out.points.emplace_back(t, value);
    }
    return out;
}

std::vector<std::vector<double>> aggregate_ranks(std::span<const RunTrace> traces,
                                                 std::span<const double> grid) {
    const std::size_t m = traces.size();
    std::vector<std::vector<double>> ranks(m, std::vector<double>(grid.size(), 0.0));

    for (std::size_t t = 0; t < grid.size(); ++t) {
        std::vector<double> values(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            for (const auto& [time, value] : traces[i].points) {
                if (time <= grid[t]) values[i] = value;
                else break;
            }
        }
        // Average-rank tie convention, rank 1 for the highest value.
        std::vector<std::size_t> order(m);
        for (std::size_t i = 0; i < m; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
        std::size_t i = 0;
        while (i < m) {
            std::size_t j = i;
            while (j + 1 < m && values[order[j + 1]] == values[order[i]]) ++j;
            double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (std::size_t k = i; k <= j; ++k) ranks[order[k]][t] = shared;
            i = j + 1;
        }
    }
    return ranks;
}

void write_iteration_csv(std::ostream& os, std::span<const IterationRecord> records) {
    os << "iter,algo_time_s,actions,repeated,reward,best_so_far\n";
    double best = 0.0;
    for (const IterationRecord& r : records) {
        best = std::max(best, r.reward);
        os << r.iteration << ',' << format_value(r.algorithm_time_s) << ',' << r.actions << ','
           << (r.repeated ? 1 : 0) << ',' << format_value(r.reward) << ',' << format_value(best)
           << '\n';
    }
}

std::vector<IterationRecord> parse_iteration_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "iter,algo_time_s,actions,repeated,reward,best_so_far") {
        throw std::runtime_error("bad iteration CSV header");
    }
    std::vector<IterationRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        IterationRecord r;
        std::getline(row, field, ',');
        r.iteration = std::stoull(field);
        std::getline(row, field, ',');
        r.algorithm_time_s = std::stod(field);
        std::getline(row, field, ',');
        r.actions = std::stoull(field);
        std::getline(row, field, ',');
        r.repeated = field == "1";
        std::getline(row, field, ',');
        r.reward = std::stod(field);
        out.push_back(std::move(r));
    }
    return out;
}

void write_summary_csv(std::ostream& os, const AblationSummary& s) {
    os << "time_iter_mean,time_iter_std,time_first,tot_time,"
          "act_iter_mean,act_iter_std,first_act,tot_act,rep_ratio\n";
    os << format_value(s.time_iter_mean) << ',' << format_value(s.time_iter_std) << ','
       << format_value(s.time_first) << ',' << format_value(s.total_time) << ','
       << format_value(s.actions_iter_mean) << ',' << format_value(s.actions_iter_std) << ','
       << format_value(s.first_actions) << ',' << format_value(s.total_actions) << ','
       << format_value(s.repetition_ratio) << '\n';
}

AblationSummary parse_summary_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) ||
        line != "time_iter_mean,time_iter_std,time_first,tot_time,"
                "act_iter_mean,act_iter_std,first_act,tot_act,rep_ratio") {
        throw std::runtime_error("bad summary CSV header");
    }
    if (!std::getline(is, line)) throw std::runtime_error("summary CSV has no data row");
    std::istringstream row(line);
    std::string field;
    std::vector<double> v;
    while (std::getline(row, field, ',')) v.push_back(std::stod(field));
    if (v.size() != 9) throw std::runtime_error("summary CSV needs 9 fields");
    AblationSummary s;
    s.time_iter_mean = v[0];
    s.time_iter_std = v[1];
    s.time_first = v[2];
    s.total_time = v[3];
    s.actions_iter_mean = v[4];
    s.actions_iter_std = v[5];
    s.first_actions = v[6];
    s.total_actions = v[7];
    s.repetition_ratio = v[8];
    return s;
}

}  // namespace gramts
