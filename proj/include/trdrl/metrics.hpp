#pragma once

#include "trdrl/trainer.hpp"

#include <string>
#include <vector>

namespace trdrl {

/// Inter-quartile mean: drop the lowest and highest floor(n/4) values
/// (by count), then take the arithmetic mean of what remains. n <= 3
/// trims nothing, so the result equals the plain mean there.
double iqm(std::vector<double> values);

enum class AggregateStat { Iqm, MeanStd };
AggregateStat parse_stat(const std::string& tag);

/// One evaluation series from a run directory, tagged for grouping.
struct RunRecord {
  std::string method;
  std::string env;
  std::uint64_t seed = 0;
  int horizon = 0;  // transitions per episode
  std::vector<int> episodes;
  std::vector<double> success;
};

/// Reads config.resolved and metrics.csv; returns one record per task.
std::vector<RunRecord> load_run_dir(const std::string& dir);

struct AggregateRow {
  std::string method;
  long transitions = 0;
  std::string stat;
  double value = 0.0;
  double spread = 0.0;  // population std for mean-std, 0 for iqm
};

/// Per-method, per-eval-point statistic across (env x seed). All
/// records must share the evaluation grid; offenders are listed in the
/// error otherwise.
std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records,
                                    AggregateStat stat);

void write_aggregate_csv(const std::vector<AggregateRow>& rows, std::ostream& os);
void write_aggregate_csv_file(const std::vector<AggregateRow>& rows,
                              const std::string& path);

}  // namespace trdrl
