#include "gspplan/eval/success.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace gspplan::eval {
namespace {

using Key = std::tuple<std::string, std::string, std::string>;

SuccessRow summarize(const Key& key, const std::map<std::uint64_t, std::pair<int, int>>& per_seed) {
  SuccessRow row;
  std::tie(row.domain, row.task, row.method) = key;
  row.n_seeds = static_cast<int>(per_seed.size());
  std::vector<double> rates;
  for (const auto& [seed, counts] : per_seed) {
    rates.push_back(static_cast<double>(counts.first) / counts.second);
    row.n_episodes += counts.second;
  }
  for (double r : rates) row.mean += r / static_cast<double>(rates.size());
  double var = 0.0;
  for (double r : rates) var += (r - row.mean) * (r - row.mean) / static_cast<double>(rates.size());
  row.std = std::sqrt(var);
  row.single_seed = row.n_seeds == 1;
  return row;
}

}  // namespace

std::vector<SuccessRow> success_table(const std::vector<EpisodeOutcome>& outcomes) {
  std::map<Key, std::map<std::uint64_t, std::pair<int, int>>> by_task, by_domain;
  for (const auto& o : outcomes) {
    if (o.domain.empty() || o.task.empty() || o.method.empty()) {
      throw std::invalid_argument("success_table: outcome is missing a domain, task or method tag");
    }
    for (auto* m : {&by_task, &by_domain}) {
      const Key k{o.domain, m == &by_task ? o.task : "*", o.method};
      auto& c = (*m)[k][o.seed];
      c.first += o.success ? 1 : 0;
      c.second += 1;
    }
  }
  std::vector<SuccessRow> rows;
  for (const auto& [k, v] : by_task) rows.push_back(summarize(k, v));
  for (const auto& [k, v] : by_domain) rows.push_back(summarize(k, v));
  return rows;
}

std::string outcomes_csv(const std::vector<EpisodeOutcome>& outcomes) {
  std::ostringstream os;
  os << "domain,task,method,seed,success\n";
  for (const auto& o : outcomes) {
    for (const auto* s : {&o.domain, &o.task, &o.method}) {
      if (s->find_first_of(",\n") != std::string::npos) throw std::invalid_argument("outcomes_csv: tag contains a separator");
    }
    os << o.domain << ',' << o.task << ',' << o.method << ',' << o.seed << ',' << (o.success ? 1 : 0) << '\n';
  }
  return os.str();
}

std::vector<EpisodeOutcome> parse_outcomes_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "domain,task,method,seed,success") {
    throw std::invalid_argument("parse_outcomes_csv: bad header");
  }
  std::vector<EpisodeOutcome> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    EpisodeOutcome o;
    std::string seed, success;
    if (!std::getline(ls, o.domain, ',') || !std::getline(ls, o.task, ',') || !std::getline(ls, o.method, ',') ||
        !std::getline(ls, seed, ',') || !std::getline(ls, success)) {
      throw std::invalid_argument("parse_outcomes_csv: malformed row '" + line + "'");
    }
    o.seed = std::stoull(seed);
    if (success != "0" && success != "1") throw std::invalid_argument("parse_outcomes_csv: success must be 0 or 1");
    o.success = success == "1";
    out.push_back(o);
  }
  return out;
}

nlohmann::json success_json(const std::vector<SuccessRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"domain", r.domain},
                   {"task", r.task},
                   {"method", r.method},
                   {"n_seeds", r.n_seeds},
                   {"n_episodes", r.n_episodes},
                   {"mean", r.mean},
                   {"std", r.std},
                   {"single_seed", r.single_seed}});
  }
  return arr;
}

}  // namespace gspplan::eval
