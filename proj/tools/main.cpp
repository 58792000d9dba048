// Command-line surface: train, ablate, bench, render, plot, test-oracles.
// Exit codes: 0 ok, 2 configuration error, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "entroplan/errors.hpp"
#include "entroplan/maze.hpp"
#include "entroplan/plots.hpp"
#include "entroplan/selfcheck.hpp"
#include "entroplan/trainloop.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  int64_t seed = -1;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "config file (key: value)");
  cmd->add_option("--seed", opts.seed, "run seed (overrides the config)");
  cmd->add_option("--override", opts.overrides,
                  "config override key=value (repeatable)");
}

entroplan::Config build_config(const CommonOpts& opts) {
  entroplan::Config cfg = opts.config_path.empty()
                              ? entroplan::Config::defaults()
                              : entroplan::Config::load_file(opts.config_path);
  for (const auto& o : opts.overrides) cfg.apply_override(o);
  if (opts.seed >= 0) cfg.seed = static_cast<uint64_t>(opts.seed);
  cfg.validate();
  return cfg;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  size_t at = 0;
  while (at < csv.size()) {
    const size_t comma = csv.find(',', at);
    out.push_back(std::stoi(csv.substr(at, comma - at)));
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"entroplan: entropy-seeking planner workbench"};
  app.require_subcommand(1);

  CommonOpts train_opts, ablate_opts, bench_opts;
  std::string out_root = "runs";
  std::string ablate_mode;
  std::string bench_horizons = "2,4,8,16";
  std::string bench_choices = "2,4,8,16,32,64,128,256";
  int bench_repeats = 30;
  std::string bench_out;

  auto* train = app.add_subcommand("train", "run a training loop");
  add_common(train, train_opts);
  train->add_option("--outdir", out_root, "output root directory");

  auto* ablate = app.add_subcommand("ablate", "run an ablation variant");
  add_common(ablate, ablate_opts);
  ablate->add_option("--outdir", out_root, "output root directory");
  ablate->add_option("--mode", ablate_mode,
                     "mpc | entropy_only | reward_only | mixed")
      ->required();

  auto* bench = app.add_subcommand("bench", "planning-call timing sweep");
  add_common(bench, bench_opts);
  bench->add_option("--horizons", bench_horizons, "comma-separated horizons");
  bench->add_option("--choices", bench_choices, "comma-separated candidate counts");
  bench->add_option("--repeats", bench_repeats, "measured calls per cell");
  bench->add_option("--out", bench_out, "write the timing matrix CSV here");

  int render_width = 8, render_height = 8;
  double render_porosity = 0.2;
  uint64_t render_seed = 0;
  std::string render_out = "maze.ppm";
  auto* render = app.add_subcommand("render", "render a maze top-down");
  render->add_option("--width", render_width);
  render->add_option("--height", render_height);
  render->add_option("--porosity", render_porosity);
  render->add_option("--seed", render_seed);
  render->add_option("--out", render_out, "PPM output path");

  std::vector<std::string> plot_dirs;
  std::string plot_out = "plots";
  auto* plot = app.add_subcommand("plot", "aggregate runs and export curves");
  plot->add_option("dirs", plot_dirs, "run directories")->required();
  plot->add_option("--out", plot_out, "output directory");

  uint64_t oracle_seed = 0;
  auto* oracles = app.add_subcommand("test-oracles",
                                     "run the fast oracle checks");
  oracles->add_option("--seed", oracle_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      auto cfg = build_config(train_opts);
      auto result = entroplan::run_train(cfg, out_root);
      std::printf("run complete: %s (%lld steps, %lld episodes)\n",
                  result.run_dir.c_str(),
                  static_cast<long long>(result.steps_completed),
                  static_cast<long long>(result.episodes));
    } else if (ablate->parsed()) {
      auto cfg = build_config(ablate_opts);
      auto mode = entroplan::ablation_mode_from_string(ablate_mode);
      auto result = entroplan::run_ablation(cfg, mode, out_root);
      std::printf("ablation complete: %s (%lld steps)\n",
                  result.run_dir.c_str(),
                  static_cast<long long>(result.steps_completed));
    } else if (bench->parsed()) {
      auto cfg = build_config(bench_opts);
      auto result = entroplan::run_bench(cfg, parse_int_list(bench_horizons),
                                         parse_int_list(bench_choices),
                                         bench_repeats);
      std::printf("%s", result.table().c_str());
      if (!bench_out.empty()) {
        std::ofstream f(bench_out, std::ios::trunc);
        f << result.csv();
        std::printf("wrote %s\n", bench_out.c_str());
      }
    } else if (render->parsed()) {
      entroplan::MazeSpec spec;
      spec.width = render_width;
      spec.height = render_height;
      spec.porosity = render_porosity;
      auto state = entroplan::generate_maze(spec, render_seed);
      auto img = entroplan::render_topdown(state);
      std::ofstream f(render_out, std::ios::binary | std::ios::trunc);
      f.write(img.ppm.data(), static_cast<std::streamsize>(img.ppm.size()));
      std::printf("%s", img.ascii.c_str());
      std::printf("wrote %s (%dx%d)\n", render_out.c_str(), img.width_px,
                  img.height_px);
    } else if (plot->parsed()) {
      auto files = entroplan::export_plots(plot_dirs, plot_out);
      for (const auto& p : files.csv_paths) std::printf("wrote %s\n", p.c_str());
      for (const auto& p : files.image_paths)
        std::printf("wrote %s\n", p.c_str());
    } else if (oracles->parsed()) {
      auto results = entroplan::run_selfchecks(oracle_seed);
      bool all = true;
      for (const auto& r : results) {
        std::printf("%s  %-55s (%.2fs) %s\n", r.pass ? "PASS" : "FAIL",
                    r.name.c_str(), r.seconds, r.pass ? "" : r.detail.c_str());
        all = all && r.pass;
      }
      return all ? 0 : 1;
    }
  } catch (const entroplan::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const entroplan::NonFiniteLoss& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
