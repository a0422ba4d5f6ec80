#include "ogpsa_tools/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ogpsa::tools::svg {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 440;
constexpr double kLeft = 70;
constexpr double kRight = 170;
constexpr double kTop = 40;
constexpr double kBottom = 60;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

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

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

struct Frame {
  Range x, y;
  double px(double v) const { return kLeft + (v - x.lo) / (x.hi - x.lo) * (kWidth - kLeft - kRight); }
  double py(double v) const { return kHeight - kBottom - (v - y.lo) / (y.hi - y.lo) * (kHeight - kTop - kBottom); }
};

void open(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
}

void axes(std::ostringstream& out, const Frame& f, const std::string& x_label, const std::string& y_label,
          bool x_ticks) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  out << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double vy = f.y.lo + (f.y.hi - f.y.lo) * i / 4.0;
    const double yy = f.py(vy);
    out << "<line x1=\"" << x0 << "\" y1=\"" << yy << "\" x2=\"" << x1 << "\" y2=\"" << yy
        << "\" stroke=\"#ddd\"/>\n"
        << "<text x=\"" << x0 - 6 << "\" y=\"" << yy + 4 << "\" text-anchor=\"end\">" << num(vy) << "</text>\n";
    if (x_ticks) {
      const double vx = f.x.lo + (f.x.hi - f.x.lo) * i / 4.0;
      out << "<text x=\"" << f.px(vx) << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">" << num(vx)
          << "</text>\n";
    }
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n"
      << "<text transform=\"translate(16," << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(y_label) << "</text>\n";
}

void polylines(std::ostringstream& out, const Frame& f, const std::vector<Series>& series) {
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
    const auto& ser = series[s];
    for (std::size_t i = 0; i < std::min(ser.x.size(), ser.y.size()); ++i) {
      if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i])) continue;
      out << num(f.px(ser.x[i])) << ',' << num(f.py(ser.y[i])) << ' ';
    }
    out << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(s) + 8;
    out << "<line x1=\"" << kWidth - kRight + 12 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kRight + 32
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << kWidth - kRight + 38 << "\" y=\"" << ly + 4 << "\">" << escape(ser.name)
        << "</text>\n";
  }
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series) {
  Frame f;
  for (const auto& s : series) {
    for (double v : s.x) f.x.add(v);
    for (double v : s.y) f.y.add(v);
  }
  f.x.finish();
  f.y.finish();
  std::ostringstream out;
  open(out, title);
  axes(out, f, x_label, y_label, true);
  polylines(out, f, series);
  out << "</svg>\n";
  return out.str();
}

std::string category_chart(const std::string& title, const std::vector<std::string>& categories,
                           const std::string& y_label, const std::vector<Series>& series) {
  Frame f;
  f.x.add(0.0);
  f.x.add(static_cast<double>(categories.empty() ? 0 : categories.size() - 1));
  for (const auto& s : series) {
    for (double v : s.y) f.y.add(v);
  }
  f.x.finish();
  f.y.finish();
  std::ostringstream out;
  open(out, title);
  axes(out, f, "", y_label, false);
  for (std::size_t i = 0; i < categories.size(); ++i) {
    out << "<text x=\"" << f.px(static_cast<double>(i)) << "\" y=\"" << kHeight - kBottom + 18
        << "\" text-anchor=\"middle\">" << escape(categories[i]) << "</text>\n";
  }
  std::vector<Series> placed = series;
  for (auto& s : placed) {
    s.x.resize(s.y.size());
    for (std::size_t i = 0; i < s.x.size(); ++i) s.x[i] = static_cast<double>(i);
  }
  polylines(out, f, placed);
  out << "</svg>\n";
  return out.str();
}

std::string scatter_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Point>& points) {
  Frame f;
  for (const auto& p : points) {
    f.x.add(p.x);
    f.y.add(p.y);
  }
  f.x.finish();
  f.y.finish();
  std::ostringstream out;
  open(out, title);
  axes(out, f, x_label, y_label, true);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
    out << "<circle cx=\"" << num(f.px(p.x)) << "\" cy=\"" << num(f.py(p.y)) << "\" r=\"5\" fill=\""
        << kPalette[i % std::size(kPalette)] << "\"/>\n"
        << "<text x=\"" << num(f.px(p.x) + 8) << "\" y=\"" << num(f.py(p.y) - 8) << "\">" << escape(p.label)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace ogpsa::tools::svg
