#include "ctfkit/evaluate.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <stdexcept>

namespace ctfkit::evaluate {

double pass_at_k(int n, int c, int k) {
    if (n < 1) throw std::invalid_argument("pass_at_k: n must be >= 1");
    if (c < 0 || c > n) throw std::invalid_argument("pass_at_k: c out of range");
    if (k < 1 || k > n) throw std::invalid_argument("pass_at_k: require 1 <= k <= n");
    if (c == 0) return 0.0;
    if (n - c < k) return 1.0;  // cannot draw k all-failure samples
    // prod_{i=0}^{k-1} (n-c-i)/(n-i)
    double prod = 1.0;
    for (int i = 0; i < k; ++i) {
        prod *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    }
    return 1.0 - prod;
}

nlohmann::ordered_json AggregateReport::to_json() const {
    nlohmann::ordered_json out;
    out["k"] = k;
    out["mean"] = mean;
    out["tasks"] = per_task.size();
    nlohmann::ordered_json cats = nlohmann::ordered_json::object();
    for (const auto& [cat, v] : per_category) {
        cats[cat] = {{"mean", v}, {"tasks", per_category_tasks.at(cat)}};
    }
    out["per_category"] = cats;
    nlohmann::ordered_json tasks = nlohmann::ordered_json::array();
    for (const auto& [id, v] : per_task) {
        tasks.push_back({{"task_id", id}, {"pass_at_k", v}});
    }
    out["per_task"] = tasks;
    return out;
}

std::string AggregateReport::to_table() const {
    size_t label_w = std::string("category").size();
    for (const auto& [cat, _] : per_category) label_w = std::max(label_w, cat.size());
    label_w = std::max(label_w, std::string("overall").size());

    std::string out;
    out += fmt::format("{:<{}}  {:>7}  {:>9}\n", "category", label_w, "tasks", fmt::format("pass@{}", k));
    out += std::string(label_w + 20, '-') + "\n";
    for (const auto& [cat, v] : per_category) {
        out += fmt::format("{:<{}}  {:>7}  {:>9.4f}\n", cat, label_w,
                           per_category_tasks.at(cat), v);
    }
    out += std::string(label_w + 20, '-') + "\n";
    out += fmt::format("{:<{}}  {:>7}  {:>9.4f}\n", "overall", label_w,
                       per_task.size(), mean);
    return out;
}

AggregateReport aggregate(const std::vector<TaskOutcomes>& outcomes, int k,
                          const std::map<std::string, std::string>& categories) {
    std::vector<std::string> offenders;
    for (const auto& t : outcomes) {
        if (t.n < k) offenders.push_back(t.task_id);
    }
    if (!offenders.empty()) {
        std::sort(offenders.begin(), offenders.end());
        std::string msg = "aggregate: n < k for tasks:";
        for (const auto& id : offenders) msg += " " + id;
        throw std::invalid_argument(msg);
    }

    AggregateReport report;
    report.k = k;

    // Sort by task id so the report is permutation-invariant in input order.
    std::vector<TaskOutcomes> sorted = outcomes;
    std::sort(sorted.begin(), sorted.end(),
              [](const TaskOutcomes& a, const TaskOutcomes& b) { return a.task_id < b.task_id; });

    std::map<std::string, double> cat_sum;
    double total = 0.0;
    for (const auto& t : sorted) {
        double v = pass_at_k(t.n, t.c, k);
        report.per_task.emplace_back(t.task_id, v);
        total += v;
        auto it = categories.find(t.task_id);
        std::string cat = it == categories.end() ? "uncategorized" : it->second;
        cat_sum[cat] += v;
        report.per_category_tasks[cat] += 1;
    }
    for (const auto& [cat, sum] : cat_sum) {
        report.per_category[cat] = sum / report.per_category_tasks[cat];
    }
    report.mean = sorted.empty() ? 0.0 : total / static_cast<double>(sorted.size());
    return report;
}

}  // namespace ctfkit::evaluate
