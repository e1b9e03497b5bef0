#include "trdrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace trdrl {

double iqm(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("iqm: empty input");
  std::sort(values.begin(), values.end());
  std::size_t trim = values.size() / 4;
  double sum = std::accumulate(values.begin() + trim, values.end() - trim, 0.0);
  return sum / static_cast<double>(values.size() - 2 * trim);
}

AggregateStat parse_stat(const std::string& tag) {
  if (tag == "iqm") return AggregateStat::Iqm;
  if (tag == "mean-std") return AggregateStat::MeanStd;
  throw std::invalid_argument("unknown stat: " + tag);
}

std::vector<RunRecord> load_run_dir(const std::string& dir) {
  RunConfig cfg = load_config_file(dir + "/config.resolved");
  RunMetrics metrics = load_metrics_csv_file(dir + "/metrics.csv");
  auto [id_a, id_b] = pair_tasks(cfg.pair);
  std::vector<RunRecord> records(2);
  for (int task = 0; task < 2; ++task) {
    RunRecord& rec = records[task];
    rec.method = method_tag(cfg);
    rec.env = task == 0 ? id_a : id_b;
    rec.seed = cfg.seed;
    rec.horizon = cfg.horizon;
    for (const MetricRow& row : metrics.rows) {
      if (row.task_id != task) continue;
      rec.episodes.push_back(row.episode);
      rec.success.push_back(row.success_rate);
    }
  }
  return records;
}

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records,
                                    AggregateStat stat) {
  if (records.empty()) return {};
  const std::vector<int>& grid = records[0].episodes;
  std::ostringstream offenders;
  for (const RunRecord& rec : records) {
    if (rec.episodes != grid)
      offenders << ' ' << rec.method << ':' << rec.env << ":seed" << rec.seed;
  }
  std::string bad = offenders.str();
  if (!bad.empty())
    throw std::invalid_argument("aggregate: mismatched evaluation grids:" + bad);

  std::map<std::string, std::vector<const RunRecord*>> by_method;
  for (const RunRecord& rec : records) by_method[rec.method].push_back(&rec);

  std::vector<AggregateRow> rows;
  for (const auto& [method, recs] : by_method) {
    for (std::size_t p = 0; p < grid.size(); ++p) {
      std::vector<double> values;
      values.reserve(recs.size());
      long transitions = 0;
      for (const RunRecord* rec : recs) {
        values.push_back(rec->success[p]);
        transitions = static_cast<long>(grid[p]) * rec->horizon;
      }
      AggregateRow row;
      row.method = method;
      row.transitions = transitions;
      if (stat == AggregateStat::Iqm) {
        row.stat = "iqm";
        row.value = iqm(values);
        row.spread = 0.0;
      } else {
        row.stat = "mean-std";
        double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                      static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(values.size());  // population std
        row.value = mean;
        row.spread = std::sqrt(var);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& os) {
  os << "method,transitions,stat,value,spread\n";
  os << std::setprecision(17);
  for (const AggregateRow& r : rows)
    os << r.method << ',' << r.transitions << ',' << r.stat << ',' << r.value << ','
       << r.spread << '\n';
}

void write_aggregate_csv_file(const std::vector<AggregateRow>& rows,
                              const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write aggregate csv: " + path);
  write_aggregate_csv(rows, os);
}

}  // namespace trdrl
