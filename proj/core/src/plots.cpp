#include "entroplan/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "entroplan/errors.hpp"

namespace entroplan {

Raster::Raster(int width, int height, uint8_t r, uint8_t g, uint8_t b)
    : width_(width), height_(height),
      px_(static_cast<size_t>(width) * height * 3) {
  for (size_t i = 0; i < px_.size(); i += 3) {
    px_[i] = r;
    px_[i + 1] = g;
    px_[i + 2] = b;
  }
}

void Raster::set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
  if (x < 0 || x >= width_ || y < 0 || y >= height_) return;
  const size_t at = (static_cast<size_t>(y) * width_ + x) * 3;
  px_[at] = r;
  px_[at + 1] = g;
  px_[at + 2] = b;
}

void Raster::line(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g,
                  uint8_t b, bool dotted) {
  // Bresenham with an optional 4-on/4-off dash pattern
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  int tick = 0;
  while (true) {
    if (!dotted || (tick / 4) % 2 == 0) set(x0, y0, r, g, b);
    ++tick;
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Raster::vspan(int x, int y0, int y1, uint8_t r, uint8_t g, uint8_t b) {
  if (y0 > y1) std::swap(y0, y1);
  for (int y = y0; y <= y1; ++y) set(x, y, r, g, b);
}

std::string Raster::ppm() const {
  std::string out = "P6\n" + std::to_string(width_) + " " +
                    std::to_string(height_) + "\n255\n";
  out.append(reinterpret_cast<const char*>(px_.data()), px_.size());
  return out;
}

void Raster::write(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  const std::string data = ppm();
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
}

Raster plot_series(const AggregatedSeries& series, int width, int height) {
  Raster img(width, height);
  const int margin = 40;
  const int n = static_cast<int>(series.mean.size());
  if (n == 0) throw EmptyInput("plot_series: empty series");

  double lo = (series.mean - series.band).minCoeff();
  double hi = std::max(series.max.maxCoeff(),
                       (series.mean + series.band).maxCoeff());
  if (hi - lo < 1e-12) {
    hi += 1.0;
    lo -= 1.0;
  }
  const auto xpix = [&](int i) {
    return margin + (n == 1 ? 0
                            : static_cast<int>((width - 2.0 * margin) * i /
                                               (n - 1)));
  };
  const auto ypix = [&](double v) {
    return height - margin -
           static_cast<int>((height - 2.0 * margin) * (v - lo) / (hi - lo));
  };

  // band first, then traces on top
  for (int i = 0; i < n; ++i) {
    const int x = xpix(i);
    img.vspan(x, ypix(series.mean[i] - series.band[i]),
              ypix(series.mean[i] + series.band[i]), 210, 225, 250);
  }
  for (int i = 0; i + 1 < n; ++i) {
    img.line(xpix(i), ypix(series.max[i]), xpix(i + 1), ypix(series.max[i + 1]),
             160, 160, 160, true);
  }
  for (int i = 0; i + 1 < n; ++i) {
    img.line(xpix(i), ypix(series.mean[i]), xpix(i + 1),
             ypix(series.mean[i + 1]), 30, 60, 180);
  }
  // axes
  img.line(margin, height - margin, width - margin, height - margin, 0, 0, 0);
  img.line(margin, margin, margin, height - margin, 0, 0, 0);
  return img;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_series_csv(const std::string& path, const AggregatedSeries& s,
                      const Eigen::VectorXd& rolled) {
  std::ofstream f(path, std::ios::trunc);
  f << "episode,mean,band,max,rolling_mean\n";
  for (Eigen::Index i = 0; i < s.mean.size(); ++i) {
    f << i << ',' << fmt(s.mean[i]) << ',' << fmt(s.band[i]) << ','
      << fmt(s.max[i]) << ',' << fmt(rolled[i]) << '\n';
  }
}

}  // namespace

ExportedFiles export_plots(const std::vector<std::string>& run_dirs,
                           const std::string& out_dir) {
  if (run_dirs.empty()) throw EmptyInput("export_plots: no run directories");
  std::filesystem::create_directories(out_dir);

  std::vector<std::vector<EpisodeRecord>> runs;
  for (const auto& dir : run_dirs) {
    RunRecords rec = read_run_records(dir);
    if (rec.episodes.empty())
      throw EmptyInput("export_plots: no episode records in " + dir);
    runs.push_back(std::move(rec.episodes));
  }

  ExportedFiles out;

  // full record dump, one row per episode record
  {
    const std::string path = out_dir + "/records.csv";
    std::ofstream f(path, std::ios::trunc);
    f << "run_id,seed,step,episode,return,length,goals_found,"
         "mean_replan_prob,std_replan_prob,max_replan_prob,"
         "mean_len_before_replan,std_len_before_replan,max_len_before_replan"
         "\n";
    for (const auto& run : runs) {
      for (const auto& r : run) {
        f << r.run_id << ',' << r.seed << ',' << r.step << ',' << r.episode
          << ',' << fmt(r.episode_return) << ',' << r.length << ','
          << r.goals_found << ',' << fmt(r.mean_replan_prob) << ','
          << fmt(r.std_replan_prob) << ',' << fmt(r.max_replan_prob) << ','
          << fmt(r.mean_len_before_replan) << ','
          << fmt(r.std_len_before_replan) << ','
          << fmt(r.max_len_before_replan) << '\n';
      }
    }
    out.csv_paths.push_back(path);
  }

  struct Item {
    const char* name;
    AggregatedSeries series;
  };
  std::vector<Item> items;
  items.push_back({"episode_length",
                   aggregate_scalar(runs, [](const EpisodeRecord& r) {
                     return static_cast<double>(r.length);
                   })});
  items.push_back({"episode_return",
                   aggregate_scalar(runs, [](const EpisodeRecord& r) {
                     return r.episode_return;
                   })});
  items.push_back({"replan_prob", aggregate_replan_prob(runs)});
  items.push_back({"len_before_replan", aggregate_len_before_replan(runs)});

  for (const auto& item : items) {
    const Eigen::VectorXd rolled = rolling_mean(item.series.mean, 0.10);
    const std::string csv = out_dir + "/" + item.name + ".csv";
    write_series_csv(csv, item.series, rolled);
    out.csv_paths.push_back(csv);
    const std::string img = out_dir + "/" + item.name + ".ppm";
    plot_series(item.series).write(img);
    out.image_paths.push_back(img);
  }
  return out;
}

}  // namespace entroplan
