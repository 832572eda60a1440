#ifndef MBMRL_REPORT_HPP_
#define MBMRL_REPORT_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "mbmrl/meta.hpp"
#include "mbmrl/tensor.hpp"

namespace mbmrl {

// Shortest-round-trip decimal text for a double: parse_double(format_double(v))
// gives back v bit-exactly, and the text is locale-independent.
std::string format_double(double v);
double parse_double(const std::string& text);

// Minimal comma-separated table. Cells are plain tokens (no commas, quotes, or
// newlines allowed); doubles go through format_double so emitted files
// round-trip exactly.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws if absent
  std::string serialize() const;
  static CsvTable parse(const std::string& text);
};

// 2-D binned projection of a per-step metric over two state dimensions.
// Cells never visited stay marked empty (count = 0) instead of reading as 0.
struct HeatmapGrid {
  std::size_t dim_x = 0, dim_y = 1;
  std::size_t bins_x = 1, bins_y = 1;
  double min_x = 0.0, max_x = 1.0;
  double min_y = 0.0, max_y = 1.0;
  std::vector<double> value;        // bins_x * bins_y, mean metric per cell
  std::vector<std::size_t> count;   // samples per cell; 0 marks an empty cell

  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * bins_x + ix; }
  double center_x(std::size_t ix) const;
  double center_y(std::size_t iy) const;
  void init_cells();  // sizes value/count to the grid, all empty
};

std::string heatmap_to_csv(const HeatmapGrid& grid);
HeatmapGrid heatmap_from_csv(const std::string& text);
// self-contained SVG; byte-deterministic (no timestamps or generated ids)
std::string heatmap_to_svg(const HeatmapGrid& grid, const std::string& title);

// across-seed learning-curve aggregation (mean and sample std per epoch)
struct CurvePoint {
  std::size_t epoch = 0;
  std::size_t seed_count = 0;
  double mean_return = 0.0, std_return = 0.0;
  double mean_feedback = 0.0, std_feedback = 0.0;
  double mean_feedforward = 0.0, std_feedforward = 0.0;
  double mean_energy = 0.0, std_energy = 0.0;
};

std::vector<CurvePoint> learning_curves(const std::vector<std::vector<EpochReport>>& per_seed);
CsvTable curves_to_csv(const std::vector<CurvePoint>& curve);
std::vector<CurvePoint> curves_from_csv(const CsvTable& table);
std::string curves_to_svg(const std::vector<CurvePoint>& curve, const std::string& title);

// per-epoch log of one training run
CsvTable epochs_to_csv(const std::vector<EpochReport>& reports);
std::vector<EpochReport> epochs_from_csv(const CsvTable& table);

// final-evaluation episode rows (one per seed x episode), and the summary
// derived from them; the summary is computed in row order so recomputing it
// from the emitted CSV reproduces the JSON byte for byte
CsvTable episode_table(const std::vector<std::uint64_t>& seeds,
                       const std::vector<EvalReport>& evals);
std::string summary_from_episode_table(const CsvTable& table);

struct SummaryStat {
  double mean = 0.0;
  double stddev = 0.0;  // sample std (n - 1); 0 for a single value
  std::size_t count = 0;
};

SummaryStat summarize(const VecD& values);

}  // namespace mbmrl

#endif  // MBMRL_REPORT_HPP_
