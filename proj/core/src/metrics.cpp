#include "entroplan/metrics.hpp"

#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "entroplan/errors.hpp"

namespace entroplan {

using json = nlohmann::ordered_json;

MetricsSink::MetricsSink(const std::string& run_dir, bool append)
    : dir_(run_dir) {
  std::filesystem::create_directories(dir_);
  const auto mode = append ? std::ios::app : std::ios::trunc;
  metrics_.open(dir_ + "/metrics.jsonl", mode);
  timings_.open(dir_ + "/timings.jsonl", mode);
  if (!metrics_ || !timings_)
    throw std::runtime_error("cannot open metric sinks in " + dir_);
}

void MetricsSink::write(const EpisodeRecord& rec) {
  json j;
  j["v"] = kMetricsSchemaVersion;
  j["type"] = "episode";
  j["step"] = rec.step;
  j["seed"] = rec.seed;
  j["run_id"] = rec.run_id;
  j["episode"] = rec.episode;
  j["return"] = rec.episode_return;
  j["length"] = rec.length;
  j["goals_found"] = rec.goals_found;
  j["mean_replan_prob"] = rec.mean_replan_prob;
  j["std_replan_prob"] = rec.std_replan_prob;
  j["max_replan_prob"] = rec.max_replan_prob;
  j["mean_len_before_replan"] = rec.mean_len_before_replan;
  j["std_len_before_replan"] = rec.std_len_before_replan;
  j["max_len_before_replan"] = rec.max_len_before_replan;
  metrics_ << j.dump() << '\n';
}

void MetricsSink::write(const UpdateRecord& rec) {
  json j;
  j["v"] = kMetricsSchemaVersion;
  j["type"] = "update";
  j["step"] = rec.step;
  j["seed"] = rec.seed;
  j["run_id"] = rec.run_id;
  j["kind"] = rec.kind;
  json terms;
  for (const auto& [k, v] : rec.terms) terms[k] = v;
  j["terms"] = terms;
  metrics_ << j.dump() << '\n';
}

void MetricsSink::write(const PlanCallRecord& rec) {
  json j;
  j["v"] = kMetricsSchemaVersion;
  j["type"] = "plan_call";
  j["step"] = rec.step;
  j["seed"] = rec.seed;
  j["run_id"] = rec.run_id;
  j["seconds"] = rec.seconds;
  j["horizon"] = rec.horizon;
  j["choices"] = rec.choices;
  timings_ << j.dump() << '\n';
}

void MetricsSink::flush() {
  metrics_.flush();
  timings_.flush();
}

RunRecords read_run_records(const std::string& run_dir) {
  RunRecords out;
  const auto parse_file = [&](const std::string& path, bool timing) {
    std::ifstream in(path);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      const std::string type = j.at("type");
      if (!timing && type == "episode") {
        EpisodeRecord r;
        r.step = j.at("step");
        r.seed = j.at("seed");
        r.run_id = j.at("run_id");
        r.episode = j.at("episode");
        r.episode_return = j.at("return");
        r.length = j.at("length");
        r.goals_found = j.at("goals_found");
        r.mean_replan_prob = j.at("mean_replan_prob");
        r.std_replan_prob = j.at("std_replan_prob");
        r.max_replan_prob = j.at("max_replan_prob");
        r.mean_len_before_replan = j.at("mean_len_before_replan");
        r.std_len_before_replan = j.at("std_len_before_replan");
        r.max_len_before_replan = j.at("max_len_before_replan");
        out.episodes.push_back(std::move(r));
      } else if (!timing && type == "update") {
        UpdateRecord r;
        r.step = j.at("step");
        r.seed = j.at("seed");
        r.run_id = j.at("run_id");
        r.kind = j.at("kind");
        for (auto& [k, v] : j.at("terms").items())
          r.terms[k] = v.get<double>();
        out.updates.push_back(std::move(r));
      } else if (timing && type == "plan_call") {
        PlanCallRecord r;
        r.step = j.at("step");
        r.seed = j.at("seed");
        r.run_id = j.at("run_id");
        r.seconds = j.at("seconds");
        r.horizon = j.at("horizon");
        r.choices = j.at("choices");
        out.plan_calls.push_back(std::move(r));
      }
    }
  };
  parse_file(run_dir + "/metrics.jsonl", false);
  parse_file(run_dir + "/timings.jsonl", true);
  return out;
}

AggregatedSeries aggregate_metrics(
    const std::vector<std::vector<EpisodeRecord>>& runs, EpisodeField mean_of,
    EpisodeField std_of, EpisodeField max_of) {
  if (runs.empty()) throw EmptyInput("aggregate_metrics: no runs");
  size_t len = SIZE_MAX;
  for (const auto& run : runs) {
    if (run.empty()) throw EmptyInput("aggregate_metrics: empty run");
    len = std::min(len, run.size());
  }
  AggregatedSeries out;
  out.mean.resize(static_cast<Eigen::Index>(len));
  out.band.resize(static_cast<Eigen::Index>(len));
  out.max.resize(static_cast<Eigen::Index>(len));
  const double n = static_cast<double>(runs.size());
  for (size_t i = 0; i < len; ++i) {
    double m = 0.0, b = 0.0, x = 0.0;
    for (const auto& run : runs) {
      m += mean_of(run[i]);
      b += std_of(run[i]);
      x += max_of(run[i]);
    }
    out.mean[static_cast<Eigen::Index>(i)] = m / n;
    out.band[static_cast<Eigen::Index>(i)] = b / n;
    out.max[static_cast<Eigen::Index>(i)] = x / n;
  }
  return out;
}

AggregatedSeries aggregate_replan_prob(
    const std::vector<std::vector<EpisodeRecord>>& runs) {
  return aggregate_metrics(
      runs, [](const EpisodeRecord& r) { return r.mean_replan_prob; },
      [](const EpisodeRecord& r) { return r.std_replan_prob; },
      [](const EpisodeRecord& r) { return r.max_replan_prob; });
}

AggregatedSeries aggregate_len_before_replan(
    const std::vector<std::vector<EpisodeRecord>>& runs) {
  return aggregate_metrics(
      runs, [](const EpisodeRecord& r) { return r.mean_len_before_replan; },
      [](const EpisodeRecord& r) { return r.std_len_before_replan; },
      [](const EpisodeRecord& r) { return r.max_len_before_replan; });
}

AggregatedSeries aggregate_scalar(
    const std::vector<std::vector<EpisodeRecord>>& runs, EpisodeField field) {
  AggregatedSeries out = aggregate_metrics(runs, field, field, field);
  // band across runs: population std of the per-run values at each index
  size_t len = static_cast<size_t>(out.mean.size());
  for (size_t i = 0; i < len; ++i) {
    double sq = 0.0;
    for (const auto& run : runs) {
      const double d = field(run[i]) - out.mean[static_cast<Eigen::Index>(i)];
      sq += d * d;
    }
    out.band[static_cast<Eigen::Index>(i)] =
        std::sqrt(sq / static_cast<double>(runs.size()));
    double mx = field(runs[0][i]);
    for (const auto& run : runs) mx = std::max(mx, field(run[i]));
    out.max[static_cast<Eigen::Index>(i)] = mx;
  }
  return out;
}

Eigen::VectorXd rolling_mean(const Eigen::VectorXd& series, double fraction) {
  if (series.size() == 0) throw EmptyInput("rolling_mean: empty series");
  const int n = static_cast<int>(series.size());
  const int window = std::max(1, static_cast<int>(std::floor(n * fraction)));
  Eigen::VectorXd out(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += series[i];
    if (i >= window) acc -= series[i - window];
    out[i] = acc / std::min(i + 1, window);
  }
  return out;
}

}  // namespace entroplan
