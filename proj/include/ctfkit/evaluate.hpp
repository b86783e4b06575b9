#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ctfkit::evaluate {

struct TaskOutcomes {
    std::string task_id;
    int n = 0;  // rollouts
    int c = 0;  // successes, 0 <= c <= n
};

// Unbiased estimator 1 - C(n-c, k)/C(n, k), evaluated in product form so it
// stays stable for n up to 1e4 without large factorials.
// Throws std::invalid_argument when k > n or arguments are out of range.
double pass_at_k(int n, int c, int k);

struct AggregateReport {
    int k = 0;
    double mean = 0.0;
    std::map<std::string, double> per_category;      // category -> mean pass@k
    std::map<std::string, int> per_category_tasks;   // category -> task count
    std::vector<std::pair<std::string, double>> per_task;  // task_id -> pass@k

    nlohmann::ordered_json to_json() const;
    std::string to_table() const;  // aligned text table
};

// Mean pass@k across tasks plus a per-category breakdown. `categories` maps
// task_id -> category; unmapped tasks land in "uncategorized".
// Throws std::invalid_argument listing every task with n < k.
AggregateReport aggregate(const std::vector<TaskOutcomes>& outcomes, int k,
                          const std::map<std::string, std::string>& categories = {});

}  // namespace ctfkit::evaluate
