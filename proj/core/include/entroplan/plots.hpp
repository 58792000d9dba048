#pragma once

#include <string>
#include <vector>

#include "entroplan/metrics.hpp"

namespace entroplan {

// Simple deterministic RGB raster writable as binary PPM (P6).
class Raster {
 public:
  Raster(int width, int height, uint8_t r = 255, uint8_t g = 255,
         uint8_t b = 255);

  int width() const { return width_; }
  int height() const { return height_; }
  void set(int x, int y, uint8_t r, uint8_t g, uint8_t b);
  void line(int x0, int y0, int x1, int y1, uint8_t r, uint8_t g, uint8_t b,
            bool dotted = false);
  void vspan(int x, int y0, int y1, uint8_t r, uint8_t g, uint8_t b);
  std::string ppm() const;
  void write(const std::string& path) const;

 private:
  int width_, height_;
  std::vector<uint8_t> px_;
};

// Draws mean (solid), mean +/- band (filled), and max (dotted) against the
// series index, with plain axes.
Raster plot_series(const AggregatedSeries& series, int width = 800,
                   int height = 480);

// Writes, per metric, a CSV of the aggregated series and a PPM plot, plus a
// records.csv with one row per episode record across all runs. Output is
// byte-identical across repeated exports of the same inputs.
struct ExportedFiles {
  std::vector<std::string> csv_paths;
  std::vector<std::string> image_paths;
};
ExportedFiles export_plots(const std::vector<std::string>& run_dirs,
                           const std::string& out_dir);

}  // namespace entroplan
