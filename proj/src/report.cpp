#include "mbmrl/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace mbmrl {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw std::invalid_argument("not a number: '" + text + "'");
  return v;
}

namespace {

void check_cell(const std::string& cell) {
  for (char c : cell)
    if (c == ',' || c == '"' || c == '\n' || c == '\r')
      throw std::invalid_argument("csv cell contains a delimiter: '" + cell + "'");
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string::npos) pos = text.size();
    lines.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return lines;
}

double stat_mean(const VecD& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::invalid_argument("csv column not found: " + name);
}

std::string CsvTable::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    check_cell(header[i]);
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::invalid_argument("csv row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      check_cell(row[i]);
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

CsvTable CsvTable::parse(const std::string& text) {
  CsvTable table;
  const auto lines = split_lines(text);
  if (lines.empty()) throw std::invalid_argument("empty csv");
  table.header = split_cells(lines[0]);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cells = split_cells(lines[i]);
    if (cells.size() != table.header.size())
      throw std::invalid_argument("csv row " + std::to_string(i) + " has wrong width");
    table.rows.push_back(std::move(cells));
  }
  return table;
}

double HeatmapGrid::center_x(std::size_t ix) const {
  const double w = (max_x - min_x) / static_cast<double>(bins_x);
  return min_x + (static_cast<double>(ix) + 0.5) * w;
}

double HeatmapGrid::center_y(std::size_t iy) const {
  const double h = (max_y - min_y) / static_cast<double>(bins_y);
  return min_y + (static_cast<double>(iy) + 0.5) * h;
}

void HeatmapGrid::init_cells() {
  value.assign(bins_x * bins_y, 0.0);
  count.assign(bins_x * bins_y, 0);
}

std::string heatmap_to_csv(const HeatmapGrid& grid) {
  std::string out = "dim_x,dim_y,bins_x,bins_y,min_x,max_x,min_y,max_y\n";
  out += std::to_string(grid.dim_x) + ',' + std::to_string(grid.dim_y) + ',' +
         std::to_string(grid.bins_x) + ',' + std::to_string(grid.bins_y) + ',' +
         format_double(grid.min_x) + ',' + format_double(grid.max_x) + ',' +
         format_double(grid.min_y) + ',' + format_double(grid.max_y) + '\n';
  out += "ix,iy,x_center,y_center,count,mean\n";
  for (std::size_t iy = 0; iy < grid.bins_y; ++iy) {
    for (std::size_t ix = 0; ix < grid.bins_x; ++ix) {
      const std::size_t c = grid.index(ix, iy);
      out += std::to_string(ix) + ',' + std::to_string(iy) + ',' +
             format_double(grid.center_x(ix)) + ',' + format_double(grid.center_y(iy)) +
             ',' + std::to_string(grid.count[c]) + ',';
      if (grid.count[c] > 0) out += format_double(grid.value[c]);  // empty cell -> blank
      out += '\n';
    }
  }
  return out;
}

HeatmapGrid heatmap_from_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.size() < 3) throw std::invalid_argument("heatmap csv too short");
  if (lines[0] != "dim_x,dim_y,bins_x,bins_y,min_x,max_x,min_y,max_y")
    throw std::invalid_argument("heatmap csv: bad geometry header");
  const auto geo = split_cells(lines[1]);
  if (geo.size() != 8) throw std::invalid_argument("heatmap csv: bad geometry row");
  HeatmapGrid grid;
  grid.dim_x = static_cast<std::size_t>(std::stoull(geo[0]));
  grid.dim_y = static_cast<std::size_t>(std::stoull(geo[1]));
  grid.bins_x = static_cast<std::size_t>(std::stoull(geo[2]));
  grid.bins_y = static_cast<std::size_t>(std::stoull(geo[3]));
  grid.min_x = parse_double(geo[4]);
  grid.max_x = parse_double(geo[5]);
  grid.min_y = parse_double(geo[6]);
  grid.max_y = parse_double(geo[7]);
  if (lines[2] != "ix,iy,x_center,y_center,count,mean")
    throw std::invalid_argument("heatmap csv: bad cell header");
  grid.init_cells();
  for (std::size_t i = 3; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = split_cells(lines[i]);
    if (cells.size() != 6) throw std::invalid_argument("heatmap csv: bad cell row");
    const std::size_t ix = static_cast<std::size_t>(std::stoull(cells[0]));
    const std::size_t iy = static_cast<std::size_t>(std::stoull(cells[1]));
    if (ix >= grid.bins_x || iy >= grid.bins_y)
      throw std::invalid_argument("heatmap csv: cell index out of range");
    const std::size_t c = grid.index(ix, iy);
    grid.count[c] = static_cast<std::size_t>(std::stoull(cells[4]));
    grid.value[c] = cells[5].empty() ? 0.0 : parse_double(cells[5]);
    if (grid.count[c] == 0 && !cells[5].empty())
      throw std::invalid_argument("heatmap csv: empty cell carries a value");
  }
  return grid;
}

namespace {

struct Rgb {
  double r, g, b;
};

// compact 5-stop approximation of a perceptually ordered colormap
Rgb colormap(double t) {
  static const Rgb stops[5] = {{0.267, 0.005, 0.329},
                               {0.231, 0.322, 0.545},
                               {0.129, 0.567, 0.551},
                               {0.369, 0.788, 0.382},
                               {0.993, 0.906, 0.144}};
  if (t < 0.0) t = 0.0;
  if (t > 1.0) t = 1.0;
  const double s = t * 4.0;
  const std::size_t i = s >= 4.0 ? 3 : static_cast<std::size_t>(s);
  const double f = s - static_cast<double>(i);
  return {stops[i].r + f * (stops[i + 1].r - stops[i].r),
          stops[i].g + f * (stops[i + 1].g - stops[i].g),
          stops[i].b + f * (stops[i + 1].b - stops[i].b)};
}

std::string hex_color(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(c.r * 255.0)),
                static_cast<int>(std::lround(c.g * 255.0)),
                static_cast<int>(std::lround(c.b * 255.0)));
  return buf;
}

std::string coord(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void svg_text(std::string& svg, double x, double y, const std::string& anchor,
              const std::string& text, int size = 12) {
  svg += "<text x=\"" + coord(x) + "\" y=\"" + coord(y) + "\" font-size=\"" +
         std::to_string(size) + "\" font-family=\"sans-serif\" text-anchor=\"" + anchor +
         "\">" + xml_escape(text) + "</text>\n";
}

}  // namespace

std::string heatmap_to_svg(const HeatmapGrid& grid, const std::string& title) {
  const double plot_x = 70.0, plot_y = 40.0, plot_w = 440.0, plot_h = 440.0;
  const double bar_x = plot_x + plot_w + 20.0, bar_w = 18.0;
  const double width = bar_x + bar_w + 70.0, height = plot_y + plot_h + 50.0;

  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t c = 0; c < grid.value.size(); ++c) {
    if (grid.count[c] == 0) continue;
    if (!any || grid.value[c] < lo) lo = grid.value[c];
    if (!any || grid.value[c] > hi) hi = grid.value[c];
    any = true;
  }
  const double span = hi > lo ? hi - lo : 1.0;

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    coord(width) + "\" height=\"" + coord(height) + "\" viewBox=\"0 0 " +
                    coord(width) + " " + coord(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg_text(svg, plot_x + plot_w / 2.0, 24.0, "middle", title, 15);

  const double cw = plot_w / static_cast<double>(grid.bins_x);
  const double ch = plot_h / static_cast<double>(grid.bins_y);
  for (std::size_t iy = 0; iy < grid.bins_y; ++iy) {
    for (std::size_t ix = 0; ix < grid.bins_x; ++ix) {
      const std::size_t c = grid.index(ix, iy);
      // y axis points up: row iy = 0 sits at the bottom
      const double px = plot_x + static_cast<double>(ix) * cw;
      const double py = plot_y + plot_h - static_cast<double>(iy + 1) * ch;
      std::string fill = "#d9d9d9";  // empty bin
      if (grid.count[c] > 0) fill = hex_color(colormap((grid.value[c] - lo) / span));
      svg += "<rect x=\"" + coord(px) + "\" y=\"" + coord(py) + "\" width=\"" +
             coord(cw) + "\" height=\"" + coord(ch) + "\" fill=\"" + fill + "\"/>\n";
    }
  }
  svg += "<rect x=\"" + coord(plot_x) + "\" y=\"" + coord(plot_y) + "\" width=\"" +
         coord(plot_w) + "\" height=\"" + coord(plot_h) +
         "\" fill=\"none\" stroke=\"black\"/>\n";

  svg_text(svg, plot_x, plot_y + plot_h + 18.0, "start", format_double(grid.min_x));
  svg_text(svg, plot_x + plot_w, plot_y + plot_h + 18.0, "end", format_double(grid.max_x));
  svg_text(svg, plot_x + plot_w / 2.0, plot_y + plot_h + 34.0, "middle",
           "state dim " + std::to_string(grid.dim_x));
  svg_text(svg, plot_x - 6.0, plot_y + plot_h, "end", format_double(grid.min_y));
  svg_text(svg, plot_x - 6.0, plot_y + 10.0, "end", format_double(grid.max_y));
  svg += "<text x=\"" + coord(18.0) + "\" y=\"" + coord(plot_y + plot_h / 2.0) +
         "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 " +
         coord(18.0) + " " + coord(plot_y + plot_h / 2.0) + ")\">state dim " +
         std::to_string(grid.dim_y) + "</text>\n";

  const int bar_steps = 64;
  for (int i = 0; i < bar_steps; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / bar_steps;
    const double py = plot_y + plot_h * (1.0 - (static_cast<double>(i) + 1.0) / bar_steps);
    svg += "<rect x=\"" + coord(bar_x) + "\" y=\"" + coord(py) + "\" width=\"" +
           coord(bar_w) + "\" height=\"" + coord(plot_h / bar_steps + 0.5) +
           "\" fill=\"" + hex_color(colormap(t)) + "\"/>\n";
  }
  svg += "<rect x=\"" + coord(bar_x) + "\" y=\"" + coord(plot_y) + "\" width=\"" +
         coord(bar_w) + "\" height=\"" + coord(plot_h) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  svg_text(svg, bar_x + bar_w + 4.0, plot_y + plot_h, "start", any ? format_double(lo) : "-");
  svg_text(svg, bar_x + bar_w + 4.0, plot_y + 10.0, "start", any ? format_double(hi) : "-");

  svg += "</svg>\n";
  return svg;
}

std::vector<CurvePoint> learning_curves(
    const std::vector<std::vector<EpochReport>>& per_seed) {
  std::size_t max_len = 0;
  for (const auto& s : per_seed) max_len = std::max(max_len, s.size());
  std::vector<CurvePoint> curve;
  curve.reserve(max_len);
  for (std::size_t e = 0; e < max_len; ++e) {
    VecD ret, fb, ff, en;
    std::size_t epoch = e;
    for (const auto& s : per_seed) {
      if (e >= s.size()) continue;
      epoch = s[e].epoch;
      ret.push_back(s[e].eval_return_mean);
      fb.push_back(s[e].eval_feedback_mean);
      ff.push_back(s[e].eval_feedforward_mean);
      en.push_back(s[e].eval_energy_mean);
    }
    if (ret.empty()) continue;
    CurvePoint p;
    p.epoch = epoch;
    p.seed_count = ret.size();
    const SummaryStat sr = summarize(ret), sf = summarize(fb), sw = summarize(ff),
                      se = summarize(en);
    p.mean_return = sr.mean;
    p.std_return = sr.stddev;
    p.mean_feedback = sf.mean;
    p.std_feedback = sf.stddev;
    p.mean_feedforward = sw.mean;
    p.std_feedforward = sw.stddev;
    p.mean_energy = se.mean;
    p.std_energy = se.stddev;
    curve.push_back(p);
  }
  return curve;
}

CsvTable curves_to_csv(const std::vector<CurvePoint>& curve) {
  CsvTable t;
  t.header = {"epoch",          "seed_count",     "mean_return",    "std_return",
              "mean_feedback",  "std_feedback",   "mean_feedforward", "std_feedforward",
              "mean_energy",    "std_energy"};
  for (const auto& p : curve)
    t.rows.push_back({std::to_string(p.epoch), std::to_string(p.seed_count),
                      format_double(p.mean_return), format_double(p.std_return),
                      format_double(p.mean_feedback), format_double(p.std_feedback),
                      format_double(p.mean_feedforward), format_double(p.std_feedforward),
                      format_double(p.mean_energy), format_double(p.std_energy)});
  return t;
}

std::vector<CurvePoint> curves_from_csv(const CsvTable& table) {
  std::vector<CurvePoint> curve;
  const std::size_t c_epoch = table.column("epoch"), c_n = table.column("seed_count"),
                    c_mr = table.column("mean_return"), c_sr = table.column("std_return"),
                    c_mf = table.column("mean_feedback"),
                    c_sf = table.column("std_feedback"),
                    c_mw = table.column("mean_feedforward"),
                    c_sw = table.column("std_feedforward"),
                    c_me = table.column("mean_energy"),
                    c_se = table.column("std_energy");
  for (const auto& row : table.rows) {
    CurvePoint p;
    p.epoch = static_cast<std::size_t>(std::stoull(row[c_epoch]));
    p.seed_count = static_cast<std::size_t>(std::stoull(row[c_n]));
    p.mean_return = parse_double(row[c_mr]);
    p.std_return = parse_double(row[c_sr]);
    p.mean_feedback = parse_double(row[c_mf]);
    p.std_feedback = parse_double(row[c_sf]);
    p.mean_feedforward = parse_double(row[c_mw]);
    p.std_feedforward = parse_double(row[c_sw]);
    p.mean_energy = parse_double(row[c_me]);
    p.std_energy = parse_double(row[c_se]);
    curve.push_back(p);
  }
  return curve;
}

std::string curves_to_svg(const std::vector<CurvePoint>& curve, const std::string& title) {
  const double plot_x = 70.0, plot_y = 40.0, plot_w = 520.0, plot_h = 300.0;
  const double width = plot_x + plot_w + 30.0, height = plot_y + plot_h + 60.0;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + coord(width) +
                    "\" height=\"" + coord(height) + "\" viewBox=\"0 0 " + coord(width) +
                    " " + coord(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg_text(svg, plot_x + plot_w / 2.0, 24.0, "middle", title, 15);

  if (!curve.empty()) {
    double x_lo = static_cast<double>(curve.front().epoch);
    double x_hi = static_cast<double>(curve.back().epoch);
    if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
    double y_lo = curve[0].mean_return - curve[0].std_return;
    double y_hi = curve[0].mean_return + curve[0].std_return;
    for (const auto& p : curve) {
      y_lo = std::min(y_lo, p.mean_return - p.std_return);
      y_hi = std::max(y_hi, p.mean_return + p.std_return);
    }
    if (!(y_hi > y_lo)) {
      y_lo -= 1.0;
      y_hi += 1.0;
    }
    const double pad = 0.05 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;
    auto sx = [&](double e) { return plot_x + (e - x_lo) / (x_hi - x_lo) * plot_w; };
    auto sy = [&](double v) { return plot_y + (y_hi - v) / (y_hi - y_lo) * plot_h; };

    std::string band = "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" points=\"";
    for (const auto& p : curve)
      band += coord(sx(static_cast<double>(p.epoch))) + "," +
              coord(sy(p.mean_return + p.std_return)) + " ";
    for (std::size_t i = curve.size(); i-- > 0;)
      band += coord(sx(static_cast<double>(curve[i].epoch))) + "," +
              coord(sy(curve[i].mean_return - curve[i].std_return)) + " ";
    band += "\"/>\n";
    svg += band;

    std::string line = "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"";
    for (const auto& p : curve)
      line += coord(sx(static_cast<double>(p.epoch))) + "," + coord(sy(p.mean_return)) + " ";
    line += "\"/>\n";
    svg += line;

    svg_text(svg, plot_x, plot_y + plot_h + 18.0, "start", std::to_string(curve.front().epoch));
    svg_text(svg, plot_x + plot_w, plot_y + plot_h + 18.0, "end",
             std::to_string(curve.back().epoch));
    svg_text(svg, plot_x - 6.0, plot_y + plot_h, "end", format_double(y_lo));
    svg_text(svg, plot_x - 6.0, plot_y + 10.0, "end", format_double(y_hi));
  }

  svg += "<rect x=\"" + coord(plot_x) + "\" y=\"" + coord(plot_y) + "\" width=\"" +
         coord(plot_w) + "\" height=\"" + coord(plot_h) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  svg_text(svg, plot_x + plot_w / 2.0, plot_y + plot_h + 40.0, "middle", "epoch");
  svg += "<text x=\"" + coord(18.0) + "\" y=\"" + coord(plot_y + plot_h / 2.0) +
         "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 " +
         coord(18.0) + " " + coord(plot_y + plot_h / 2.0) +
         ")\">mean return (band: +-1 std)</text>\n";
  svg += "</svg>\n";
  return svg;
}

CsvTable epochs_to_csv(const std::vector<EpochReport>& reports) {
  CsvTable t;
  t.header = {"epoch",
              "failed_members",
              "eval_return_mean",
              "eval_return_std",
              "eval_feedback_mean",
              "eval_feedforward_mean",
              "eval_energy_mean",
              "collect_return_mean",
              "model_train_loss",
              "model_holdout_loss",
              "meta_objective",
              "grad_norm",
              "step_norm"};
  for (const auto& r : reports)
    t.rows.push_back({std::to_string(r.epoch), std::to_string(r.failed_members),
                      format_double(r.eval_return_mean), format_double(r.eval_return_std),
                      format_double(r.eval_feedback_mean),
                      format_double(r.eval_feedforward_mean),
                      format_double(r.eval_energy_mean),
                      format_double(r.collect_return_mean),
                      format_double(r.model_train_loss),
                      format_double(r.model_holdout_loss), format_double(r.meta_objective),
                      format_double(r.grad_norm), format_double(r.step_norm)});
  return t;
}

std::vector<EpochReport> epochs_from_csv(const CsvTable& table) {
  std::vector<EpochReport> out;
  const std::size_t c_epoch = table.column("epoch"),
                    c_fail = table.column("failed_members"),
                    c_rm = table.column("eval_return_mean"),
                    c_rs = table.column("eval_return_std"),
                    c_fb = table.column("eval_feedback_mean"),
                    c_ff = table.column("eval_feedforward_mean"),
                    c_en = table.column("eval_energy_mean"),
                    c_cr = table.column("collect_return_mean"),
                    c_tl = table.column("model_train_loss"),
                    c_hl = table.column("model_holdout_loss"),
                    c_mo = table.column("meta_objective"), c_gn = table.column("grad_norm"),
                    c_sn = table.column("step_norm");
  for (const auto& row : table.rows) {
    EpochReport r;
    r.epoch = static_cast<std::size_t>(std::stoull(row[c_epoch]));
    r.failed_members = static_cast<std::size_t>(std::stoull(row[c_fail]));
    r.eval_return_mean = parse_double(row[c_rm]);
    r.eval_return_std = parse_double(row[c_rs]);
    r.eval_feedback_mean = parse_double(row[c_fb]);
    r.eval_feedforward_mean = parse_double(row[c_ff]);
    r.eval_energy_mean = parse_double(row[c_en]);
    r.collect_return_mean = parse_double(row[c_cr]);
    r.model_train_loss = parse_double(row[c_tl]);
    r.model_holdout_loss = parse_double(row[c_hl]);
    r.meta_objective = parse_double(row[c_mo]);
    r.grad_norm = parse_double(row[c_gn]);
    r.step_norm = parse_double(row[c_sn]);
    out.push_back(r);
  }
  return out;
}

CsvTable episode_table(const std::vector<std::uint64_t>& seeds,
                       const std::vector<EvalReport>& evals) {
  if (seeds.size() != evals.size())
    throw std::invalid_argument("episode table: one eval report per seed required");
  CsvTable t;
  t.header = {"seed", "episode", "return", "feedback", "feedforward", "energy"};
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const EvalReport& ev = evals[s];
    for (std::size_t e = 0; e < ev.episode_returns.size(); ++e)
      t.rows.push_back({std::to_string(seeds[s]), std::to_string(e),
                        format_double(ev.episode_returns[e]),
                        format_double(ev.episode_feedback[e]),
                        format_double(ev.episode_feedforward[e]),
                        format_double(ev.episode_energy[e])});
  }
  return t;
}

std::string summary_from_episode_table(const CsvTable& table) {
  const std::size_t c_ret = table.column("return"), c_fb = table.column("feedback"),
                    c_ff = table.column("feedforward"), c_en = table.column("energy");
  VecD ret, fb, ff, en;
  for (const auto& row : table.rows) {
    ret.push_back(parse_double(row[c_ret]));
    fb.push_back(parse_double(row[c_fb]));
    ff.push_back(parse_double(row[c_ff]));
    en.push_back(parse_double(row[c_en]));
  }
  nlohmann::json j;
  j["episodes"] = table.rows.size();
  auto put = [&](const char* key, const VecD& v) {
    const SummaryStat s = summarize(v);
    j[key] = {{"mean", s.mean}, {"std", s.stddev}};
  };
  put("return", ret);
  put("feedback", fb);
  put("feedforward", ff);
  put("energy", en);
  return j.dump(2);
}

SummaryStat summarize(const VecD& values) {
  SummaryStat s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = stat_mean(values);
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace mbmrl
