#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "entroplan/errors.hpp"
#include "entroplan/metrics.hpp"
#include "entroplan/plots.hpp"

using namespace entroplan;

namespace {

EpisodeRecord make_episode(int64_t idx, double ret, double mean_p,
                           double std_p, double max_p) {
  EpisodeRecord r;
  r.step = 100 * (idx + 1);
  r.seed = 0;
  r.run_id = "test-run";
  r.episode = idx;
  r.episode_return = ret;
  r.length = 10 + idx;
  r.goals_found = 3;
  r.mean_replan_prob = mean_p;
  r.std_replan_prob = std_p;
  r.max_replan_prob = max_p;
  r.mean_len_before_replan = 2.0;
  r.std_len_before_replan = 0.5;
  r.max_len_before_replan = 5.0;
  return r;
}

std::string temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("entroplan_" + tag);
  std::filesystem::remove_all(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("sink round-trips records through the jsonl files") {
  const std::string dir = temp_dir("sink");
  {
    MetricsSink sink(dir);
    sink.write(make_episode(0, 1.5, 0.4, 0.1, 0.9));
    UpdateRecord u;
    u.step = 42;
    u.seed = 0;
    u.run_id = "test-run";
    u.kind = "world_model";
    u.terms["total"] = 1.25;
    sink.write(u);
    PlanCallRecord p;
    p.step = 43;
    p.seed = 0;
    p.run_id = "test-run";
    p.seconds = 0.012;
    p.horizon = 8;
    p.choices = 16;
    sink.write(p);
    sink.flush();
  }
  RunRecords records = read_run_records(dir);
  REQUIRE(records.episodes.size() == 1);
  CHECK(records.episodes[0].episode_return == 1.5);
  CHECK(records.episodes[0].mean_replan_prob == 0.4);
  REQUIRE(records.updates.size() == 1);
  CHECK(records.updates[0].terms.at("total") == 1.25);
  REQUIRE(records.plan_calls.size() == 1);
  CHECK(records.plan_calls[0].horizon == 8);
}

TEST_CASE("aggregation follows the per-episode then cross-run recipe") {
  // three fixed episodes in each of two runs; expectations by hand
  std::vector<std::vector<EpisodeRecord>> runs(2);
  runs[0] = {make_episode(0, 1.0, 0.2, 0.05, 0.5),
             make_episode(1, 2.0, 0.4, 0.10, 0.6),
             make_episode(2, 3.0, 0.6, 0.15, 0.7)};
  runs[1] = {make_episode(0, 3.0, 0.4, 0.15, 0.7),
             make_episode(1, 4.0, 0.6, 0.20, 0.8),
             make_episode(2, 5.0, 0.8, 0.25, 0.9)};

  AggregatedSeries prob = aggregate_replan_prob(runs);
  CHECK(prob.mean[0] == doctest::Approx(0.3));   // (0.2 + 0.4) / 2
  CHECK(prob.mean[2] == doctest::Approx(0.7));
  CHECK(prob.band[1] == doctest::Approx(0.15));  // (0.10 + 0.20) / 2
  CHECK(prob.max[0] == doctest::Approx(0.6));    // (0.5 + 0.7) / 2

  AggregatedSeries ret = aggregate_scalar(
      runs, [](const EpisodeRecord& r) { return r.episode_return; });
  CHECK(ret.mean[0] == doctest::Approx(2.0));
  CHECK(ret.band[0] == doctest::Approx(1.0));  // population std of {1, 3}
  CHECK(ret.max[0] == doctest::Approx(3.0));

  // ragged runs truncate to the shortest
  runs[1].pop_back();
  CHECK(aggregate_replan_prob(runs).mean.size() == 2);

  CHECK_THROWS_AS(aggregate_replan_prob({}), EmptyInput);
}

TEST_CASE("single-run scalar aggregation has a zero band") {
  std::vector<std::vector<EpisodeRecord>> runs(1);
  runs[0] = {make_episode(0, 1.0, 0.2, 0.05, 0.5),
             make_episode(1, 2.0, 0.4, 0.10, 0.6)};
  AggregatedSeries s = aggregate_scalar(
      runs, [](const EpisodeRecord& r) { return r.episode_return; });
  CHECK(s.band[0] == doctest::Approx(0.0));
  CHECK(s.band[1] == doctest::Approx(0.0));
}

TEST_CASE("rolling mean keeps constants and smooths ramps") {
  Eigen::VectorXd constant = Eigen::VectorXd::Constant(50, 4.2);
  Eigen::VectorXd rolled = rolling_mean(constant, 0.1);
  for (int i = 0; i < 50; ++i) CHECK(rolled[i] == doctest::Approx(4.2));

  Eigen::VectorXd ramp(10);
  for (int i = 0; i < 10; ++i) ramp[i] = i;
  Eigen::VectorXd r2 = rolling_mean(ramp, 0.2);  // window 2
  CHECK(r2[0] == doctest::Approx(0.0));
  CHECK(r2[5] == doctest::Approx(4.5));

  CHECK_THROWS_AS(rolling_mean(Eigen::VectorXd(), 0.1), EmptyInput);
}

TEST_CASE("plot export is lossless and byte-stable") {
  const std::string run_dir = temp_dir("export_run");
  {
    MetricsSink sink(run_dir);
    for (int i = 0; i < 12; ++i)
      sink.write(make_episode(i, i * 1.5, 0.3, 0.1, 0.8));
    sink.flush();
  }
  const std::string out1 = temp_dir("export_out1");
  const std::string out2 = temp_dir("export_out2");
  ExportedFiles files1 = export_plots({run_dir}, out1);
  ExportedFiles files2 = export_plots({run_dir}, out2);
  REQUIRE(!files1.csv_paths.empty());
  REQUIRE(!files1.image_paths.empty());

  // records.csv has one row per record plus a header
  std::ifstream records(out1 + "/records.csv");
  int lines = 0;
  std::string line;
  while (std::getline(records, line)) ++lines;
  CHECK(lines == 12 + 1);

  // byte-identical re-export
  for (size_t i = 0; i < files1.csv_paths.size(); ++i) {
    std::ifstream a(files1.csv_paths[i], std::ios::binary);
    std::ifstream b(files2.csv_paths[i], std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
  for (size_t i = 0; i < files1.image_paths.size(); ++i) {
    std::ifstream a(files1.image_paths[i], std::ios::binary);
    std::ifstream b(files2.image_paths[i], std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }

  // exported curve values match the aggregation
  RunRecords rec = read_run_records(run_dir);
  AggregatedSeries expect = aggregate_scalar(
      {rec.episodes}, [](const EpisodeRecord& r) {
        return static_cast<double>(r.length);
      });
  std::ifstream curve(out1 + "/episode_length.csv");
  std::getline(curve, line);  // header
  std::getline(curve, line);  // first row: episode 0
  const double mean0 = std::stod(line.substr(line.find(',') + 1));
  CHECK(mean0 == doctest::Approx(expect.mean[0]));
}
