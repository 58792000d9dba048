#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace entroplan {

inline constexpr int kMetricsSchemaVersion = 1;

// Per-episode record. The replan statistics summarize the within-episode
// distribution: replan_prob is the squashed probability p^2 at each step,
// len_before_replan the number of steps executed between replan events.
struct EpisodeRecord {
  int64_t step = 0;
  uint64_t seed = 0;
  std::string run_id;
  int64_t episode = 0;
  double episode_return = 0.0;
  int64_t length = 0;
  int goals_found = 0;
  double mean_replan_prob = 0.0;
  double std_replan_prob = 0.0;
  double max_replan_prob = 0.0;
  double mean_len_before_replan = 0.0;
  double std_len_before_replan = 0.0;
  double max_len_before_replan = 0.0;
};

struct UpdateRecord {
  int64_t step = 0;
  uint64_t seed = 0;
  std::string run_id;
  std::string kind;  // world_model | actor_critic | meta
  std::map<std::string, double> terms;
};

// Wall-clock timing of one planning call. Written to a separate stream so the
// main metric stream stays bit-deterministic.
struct PlanCallRecord {
  int64_t step = 0;
  uint64_t seed = 0;
  std::string run_id;
  double seconds = 0.0;
  int horizon = 0;
  int choices = 0;
};

// Append-only JSON-lines sinks: metrics.jsonl (deterministic records) and
// timings.jsonl (wall-clock measurements).
class MetricsSink {
 public:
  explicit MetricsSink(const std::string& run_dir, bool append = false);

  void write(const EpisodeRecord& rec);
  void write(const UpdateRecord& rec);
  void write(const PlanCallRecord& rec);
  void flush();

  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  std::ofstream metrics_;
  std::ofstream timings_;
};

struct RunRecords {
  std::vector<EpisodeRecord> episodes;
  std::vector<UpdateRecord> updates;
  std::vector<PlanCallRecord> plan_calls;
};

RunRecords read_run_records(const std::string& run_dir);

// Aggregation across runs: align per-episode series by episode index
// (truncated to the shortest run), then at each index take the cross-run
// mean of the per-episode mean, of the per-episode std (the band), and of
// the per-episode max (the dotted trace).
struct AggregatedSeries {
  Eigen::VectorXd mean;
  Eigen::VectorXd band;
  Eigen::VectorXd max;
};

using EpisodeField = double (*)(const EpisodeRecord&);

AggregatedSeries aggregate_metrics(
    const std::vector<std::vector<EpisodeRecord>>& runs, EpisodeField mean_of,
    EpisodeField std_of, EpisodeField max_of);

// Convenience single-field aggregation where the per-episode record already
// carries mean/std/max (replan statistics), or where only a scalar exists
// (return, length: band and max degenerate to that scalar).
AggregatedSeries aggregate_replan_prob(
    const std::vector<std::vector<EpisodeRecord>>& runs);
AggregatedSeries aggregate_len_before_replan(
    const std::vector<std::vector<EpisodeRecord>>& runs);
AggregatedSeries aggregate_scalar(
    const std::vector<std::vector<EpisodeRecord>>& runs, EpisodeField field);

// Rolling mean with a window of `fraction` of the series length (>= 1).
Eigen::VectorXd rolling_mean(const Eigen::VectorXd& series, double fraction);

}  // namespace entroplan
