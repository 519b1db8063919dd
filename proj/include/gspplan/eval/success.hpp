#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace gspplan::eval {

struct EpisodeOutcome {
  std::string domain;
  std::string task;
  std::string method;
  std::uint64_t seed = 0;
  bool success = false;
};

struct SuccessRow {
  std::string domain;
  std::string task;  // "*" for the per-domain aggregate
  std::string method;
  int n_seeds = 0;
  int n_episodes = 0;
  double mean = 0.0;  // mean over seeds of per-seed success rate
  double std = 0.0;   // population standard deviation over seeds
  bool single_seed = false;
};

// Per (domain, task, method) rows followed by per (domain, method) rows that
// pool every task of a seed. Rows are sorted by key.
std::vector<SuccessRow> success_table(const std::vector<EpisodeOutcome>& outcomes);

// CSV with header domain,task,method,seed,success.
std::string outcomes_csv(const std::vector<EpisodeOutcome>& outcomes);
std::vector<EpisodeOutcome> parse_outcomes_csv(const std::string& text);
nlohmann::json success_json(const std::vector<SuccessRow>& rows);

}  // namespace gspplan::eval
