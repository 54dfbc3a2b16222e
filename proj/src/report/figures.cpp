#include "sitsr/report/figures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "sitsr/errors.hpp"

namespace sitsr {

namespace {

struct BoxStats {
  double lo_whisker, q1, median, q3, hi_whisker;
  size_t count;
};

double quantile(std::vector<double>& sorted, double q) {
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return (1.0 - frac) * sorted[lo] + frac * sorted[hi];
}

BoxStats box_stats(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  BoxStats b{};
  b.count = values.size();
  b.q1 = quantile(values, 0.25);
  b.median = quantile(values, 0.5);
  b.q3 = quantile(values, 0.75);
  const double iqr = b.q3 - b.q1;
  b.lo_whisker = values.front();
  b.hi_whisker = values.back();
  for (double v : values) {
    if (v >= b.q1 - 1.5 * iqr) {
      b.lo_whisker = v;
      break;
    }
  }
  for (auto it = values.rbegin(); it != values.rend(); ++it) {
    if (*it <= b.q3 + 1.5 * iqr) {
      b.hi_whisker = *it;
      break;
    }
  }
  return b;
}

}  // namespace

void write_mae_boxplot_svg(const std::string& path, const ReportEntry& entry,
                           const std::string& title) {
  const char* labels[3] = {"<10 days", "10-30 days", ">30 days"};
  std::vector<std::vector<double>> groups(3);
  for (const auto& m : entry.per_sample)
    groups[static_cast<size_t>(stratum_of(m.gap_days))].push_back(m.mae);

  std::vector<int> present;
  for (int i = 0; i < 3; ++i)
    if (!groups[static_cast<size_t>(i)].empty()) present.push_back(i);

  const int width = 520, height = 360;
  const double plot_x = 70, plot_y = 40, plot_w = width - 100, plot_h = height - 110;

  double vmin = 1e30, vmax = -1e30;
  std::vector<BoxStats> stats;
  for (int g : present) {
    stats.push_back(box_stats(groups[static_cast<size_t>(g)]));
    vmin = std::min(vmin, stats.back().lo_whisker);
    vmax = std::max(vmax, stats.back().hi_whisker);
  }
  if (present.empty()) {
    vmin = 0;
    vmax = 1;
  }
  const double pad = std::max(1e-9, (vmax - vmin) * 0.1);
  vmin -= pad;
  vmax += pad;
  const auto ypix = [&](double v) {
    return plot_y + plot_h * (1.0 - (v - vmin) / (vmax - vmin));
  };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<text x='" << width / 2 << "' y='22' text-anchor='middle' font-size='15' "
         "font-family='sans-serif'>"
      << title << "</text>\n";
  svg << "<line x1='" << plot_x << "' y1='" << plot_y << "' x2='" << plot_x << "' y2='"
      << plot_y + plot_h << "' stroke='black'/>\n";
  svg << "<line x1='" << plot_x << "' y1='" << plot_y + plot_h << "' x2='" << plot_x + plot_w
      << "' y2='" << plot_y + plot_h << "' stroke='black'/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = vmin + (vmax - vmin) * i / 4.0;
    svg << "<text x='" << plot_x - 8 << "' y='" << ypix(v) + 4
        << "' text-anchor='end' font-size='11' font-family='sans-serif'>" << std::fixed
        << std::setprecision(1) << v << "</text>\n";
    svg << "<line x1='" << plot_x - 4 << "' y1='" << ypix(v) << "' x2='" << plot_x << "' y2='"
        << ypix(v) << "' stroke='black'/>\n";
  }
  svg << "<text x='18' y='" << plot_y + plot_h / 2
      << "' font-size='12' font-family='sans-serif' transform='rotate(-90 18 "
      << plot_y + plot_h / 2 << ")' text-anchor='middle'>MAE</text>\n";

  for (size_t i = 0; i < present.size(); ++i) {
    const BoxStats& b = stats[i];
    const double cx = plot_x + plot_w * (static_cast<double>(i) + 0.5) /
                                   static_cast<double>(present.size());
    const double bw = std::min(60.0, plot_w / (2.5 * static_cast<double>(present.size())));
    svg << "<line x1='" << cx << "' y1='" << ypix(b.lo_whisker) << "' x2='" << cx << "' y2='"
        << ypix(b.q1) << "' stroke='black'/>\n";
    svg << "<line x1='" << cx << "' y1='" << ypix(b.q3) << "' x2='" << cx << "' y2='"
        << ypix(b.hi_whisker) << "' stroke='black'/>\n";
    for (double v : {b.lo_whisker, b.hi_whisker})
      svg << "<line x1='" << cx - bw / 3 << "' y1='" << ypix(v) << "' x2='" << cx + bw / 3
          << "' y2='" << ypix(v) << "' stroke='black'/>\n";
    svg << "<rect x='" << cx - bw / 2 << "' y='" << ypix(b.q3) << "' width='" << bw
        << "' height='" << ypix(b.q1) - ypix(b.q3)
        << "' fill='#9ecae1' stroke='black'/>\n";
    svg << "<line x1='" << cx - bw / 2 << "' y1='" << ypix(b.median) << "' x2='" << cx + bw / 2
        << "' y2='" << ypix(b.median) << "' stroke='black' stroke-width='2'/>\n";
    svg << "<text x='" << cx << "' y='" << plot_y + plot_h + 20
        << "' text-anchor='middle' font-size='12' font-family='sans-serif'>"
        << labels[present[i]] << " (n=" << b.count << ")</text>\n";
  }

  std::string footnote;
  for (int i = 0; i < 3; ++i)
    if (groups[static_cast<size_t>(i)].empty()) {
      if (!footnote.empty()) footnote += ", ";
      footnote += labels[i];
    }
  if (!footnote.empty())
    svg << "<text x='" << plot_x << "' y='" << height - 14
        << "' font-size='11' font-family='sans-serif' fill='#555'>empty strata omitted: "
        << footnote << "</text>\n";
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw StateError("write_mae_boxplot_svg: cannot open '" + path + "'");
  out << svg.str();
}

void write_metrics_table_csv(const std::string& path, const MetricsReport& report) {
  save_report_csv(path, report);
}

void write_series_length_table_csv(const std::string& path, const MetricsReport& report) {
  std::ofstream out(path);
  if (!out) throw StateError("write_series_length_table_csv: cannot open '" + path + "'");
  out << "N,mae,shift_mae,rmse,psnr,ssim,perceptual\n";
  // Largest N first, matching the usual presentation.
  std::vector<const ReportEntry*> entries;
  for (const auto& e : report.entries) entries.push_back(&e);
  std::sort(entries.begin(), entries.end(), [](const ReportEntry* a, const ReportEntry* b) {
    return a->series_length > b->series_length;
  });
  for (const auto* e : entries) {
    const auto& a = e->aggregates;
    out << e->series_length << "," << a.mae << "," << a.shift_mae << "," << a.rmse << ","
        << a.psnr << "," << a.ssim << "," << a.perceptual << "\n";
  }
}

}  // namespace sitsr
