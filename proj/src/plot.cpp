#include "lco/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "lco/errors.hpp"

namespace lco {

namespace {

constexpr double kLeft = 70.0;
constexpr double kRight = 620.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 450.0;
constexpr int kTicks = 6;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::optional<double> cell_value(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

bool numeric_column(const CsvTable& t, std::size_t c) {
  for (const auto& row : t.rows)
    if (!row[c].empty() && !cell_value(row[c])) return false;
  return true;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  if (std::abs(v) < 1e-300) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  // 5% padding on each side; a flat or empty range gets a unit-width window.
  Range padded() const {
    if (!(lo <= hi)) return Range{0.0, 1.0};
    if (lo == hi) {
      const double half = lo == 0.0 ? 0.5 : 0.05 * std::abs(lo);
      return Range{lo - half, hi + half};
    }
    const double pad = 0.05 * (hi - lo);
    return Range{lo - pad, hi + pad};
  }
};

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

}  // namespace

std::string render_svg(const std::vector<PlotSeriesSource>& sources, const PlotOptions& options) {
  if (sources.empty()) throw InvalidInputError("nothing to plot");
  const CsvTable& first = sources.front().table;
  if (first.header.empty()) throw SchemaError("first table has no columns", "");
  const std::string x_name = options.x.value_or(first.header.front());
  std::vector<std::string> y_names = options.y;
  if (y_names.empty()) {
    for (std::size_t c = 0; c < first.header.size(); ++c)
      if (first.header[c] != x_name && numeric_column(first, c)) y_names.push_back(first.header[c]);
  }

  std::vector<Series> series;
  Range xr, yr;
  for (const auto& src : sources) {
    const auto xc = src.table.column(x_name);
    if (!xc) throw SchemaError("missing column '" + x_name + "' in " + src.label, x_name);
    for (const std::string& y_name : y_names) {
      const auto yc = src.table.column(y_name);
      if (!yc) throw SchemaError("missing column '" + y_name + "' in " + src.label, y_name);
      Series s;
      s.name = sources.size() > 1 ? src.label + ":" + y_name : y_name;
      for (const auto& row : src.table.rows) {
        const auto xv = cell_value(row[*xc]);
        const auto yv = cell_value(row[*yc]);
        if (!xv || !yv) continue;
        s.points.emplace_back(*xv, *yv);
        xr.add(*xv);
        yr.add(*yv);
      }
      series.push_back(std::move(s));
    }
  }
  const Range px = xr.padded(), py = yr.padded();
  auto sx = [&](double v) { return kLeft + (v - px.lo) / (px.hi - px.lo) * (kRight - kLeft); };
  auto sy = [&](double v) { return kBottom - (v - py.lo) / (py.hi - py.lo) * (kBottom - kTop); };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"500\" "
         "viewBox=\"0 0 800 500\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    svg << "<text x=\"" << fixed((kLeft + kRight) / 2) << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << escape(options.title) << "</text>\n";
  }
  svg << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n"
      << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kBottom) << "\" x2=\"" << fixed(kRight) << "\" y2=\""
      << fixed(kBottom) << "\"/>\n"
      << "<line x1=\"" << fixed(kLeft) << "\" y1=\"" << fixed(kTop) << "\" x2=\"" << fixed(kLeft) << "\" y2=\""
      << fixed(kBottom) << "\"/>\n";
  for (int i = 0; i < kTicks; ++i) {
    const double f = static_cast<double>(i) / (kTicks - 1);
    const double xpix = kLeft + f * (kRight - kLeft);
    const double ypix = kBottom - f * (kBottom - kTop);
    svg << "<line x1=\"" << fixed(xpix) << "\" y1=\"" << fixed(kBottom) << "\" x2=\"" << fixed(xpix) << "\" y2=\""
        << fixed(kBottom + 5) << "\"/>\n"
        << "<line x1=\"" << fixed(kLeft - 5) << "\" y1=\"" << fixed(ypix) << "\" x2=\"" << fixed(kLeft) << "\" y2=\""
        << fixed(ypix) << "\"/>\n";
  }
  svg << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
  for (int i = 0; i < kTicks; ++i) {
    const double f = static_cast<double>(i) / (kTicks - 1);
    svg << "<text x=\"" << fixed(kLeft + f * (kRight - kLeft)) << "\" y=\"" << fixed(kBottom + 18)
        << "\" text-anchor=\"middle\">" << tick_label(px.lo + f * (px.hi - px.lo)) << "</text>\n"
        << "<text x=\"" << fixed(kLeft - 8) << "\" y=\"" << fixed(kBottom - f * (kBottom - kTop) + 4)
        << "\" text-anchor=\"end\">" << tick_label(py.lo + f * (py.hi - py.lo)) << "</text>\n";
  }
  svg << "<text x=\"" << fixed((kLeft + kRight) / 2) << "\" y=\"" << fixed(kBottom + 40)
      << "\" text-anchor=\"middle\">" << escape(x_name) << "</text>\n</g>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    if (series[i].points.size() >= 2) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t p = 0; p < series[i].points.size(); ++p) {
        if (p) svg << ' ';
        svg << fixed(sx(series[i].points[p].first)) << ',' << fixed(sy(series[i].points[p].second));
      }
      svg << "\"/>\n";
    } else if (series[i].points.size() == 1) {
      svg << "<circle cx=\"" << fixed(sx(series[i].points[0].first)) << "\" cy=\""
          << fixed(sy(series[i].points[0].second)) << "\" r=\"2\" fill=\"" << color << "\"/>\n";
    }
  }

  svg << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(i);
    const char* color = kPalette[i % std::size(kPalette)];
    svg << "<line x1=\"640.00\" y1=\"" << fixed(y) << "\" x2=\"665.00\" y2=\"" << fixed(y) << "\" stroke=\""
        << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"670.00\" y=\"" << fixed(y + 4) << "\">" << escape(series[i].name) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace lco
