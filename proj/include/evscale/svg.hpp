#pragma once

// Minimal SVG scatter/interval/line plots for return-level and QQ figures.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "evscale/csv.hpp"
#include "evscale/error.hpp"

namespace evscale {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += ch;
    }
  }
  return out;
}

class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

  /// Logarithmic x axis (return periods).
  void set_log_x(bool on) { log_x_ = on; }

  void add_points(const std::vector<double>& x, const std::vector<double>& y,
                  const std::string& colour = "black") {
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
      points_.push_back({x[i], y[i], colour});
      extend(x[i], y[i]);
    }
  }

  /// Vertical bars from lo to hi at each x.
  void add_intervals(const std::vector<double>& x, const std::vector<double>& lo,
                     const std::vector<double>& hi, const std::string& colour = "grey") {
    for (std::size_t i = 0; i < x.size() && i < lo.size() && i < hi.size(); ++i) {
      bars_.push_back({x[i], lo[i], hi[i], colour});
      extend(x[i], lo[i]);
      extend(x[i], hi[i]);
    }
  }

  void add_line(const std::vector<double>& x, const std::vector<double>& y,
                const std::string& colour = "red", bool dashed = false) {
    Line l{{}, colour, dashed};
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
      l.xy.emplace_back(x[i], y[i]);
      extend(x[i], y[i]);
    }
    lines_.push_back(std::move(l));
  }

  std::string render() const {
    if (!(x_max_ >= x_min_)) throw UsageError("svg: nothing to plot");
    std::ostringstream s;
    s << R"(<?xml version="1.0" encoding="UTF-8"?>)" << '\n'
      << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << kWidth << R"(" height=")"
      << kHeight << R"(" viewBox="0 0 )" << kWidth << ' ' << kHeight << R"(">)" << '\n'
      << R"(<rect x="0" y="0" width=")" << kWidth << R"(" height=")" << kHeight
      << R"(" fill="white"/>)" << '\n';
    s << R"(<rect x=")" << kLeft << R"(" y=")" << kTop << R"(" width=")" << plot_w()
      << R"(" height=")" << plot_h() << R"(" fill="none" stroke="black"/>)" << '\n';
    for (const auto& b : bars_) {
      s << R"(<line x1=")" << px(b.x) << R"(" y1=")" << py(b.lo) << R"(" x2=")" << px(b.x)
        << R"(" y2=")" << py(b.hi) << R"(" stroke=")" << b.colour << R"("/>)" << '\n';
    }
    for (const auto& l : lines_) {
      s << R"(<polyline fill="none" stroke=")" << l.colour << '"'
        << (l.dashed ? R"( stroke-dasharray="6,4")" : "") << R"( points=")";
      for (const auto& [x, y] : l.xy) s << px(x) << ',' << py(y) << ' ';
      s << R"("/>)" << '\n';
    }
    for (const auto& p : points_) {
      s << R"(<circle cx=")" << px(p.x) << R"(" cy=")" << py(p.y) << R"(" r="2.5" fill=")"
        << p.colour << R"("/>)" << '\n';
    }
    axis_labels(s);
    s << "</svg>\n";
    return s.str();
  }

  void write(const std::string& path) const {
    std::ofstream out = csv::open_for_write(path);
    out << render();
  }

 private:
  static constexpr double kWidth = 640, kHeight = 480, kLeft = 70, kRight = 20, kTop = 40,
                          kBottom = 60;

  struct Point {
    double x, y;
    std::string colour;
  };
  struct Bar {
    double x, lo, hi;
    std::string colour;
  };
  struct Line {
    std::vector<std::pair<double, double>> xy;
    std::string colour;
    bool dashed;
  };

  double tx(double x) const { return log_x_ ? std::log10(x) : x; }
  void extend(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y) || (log_x_ && !(x > 0.0))) return;
    x_min_ = std::min(x_min_, tx(x));
    x_max_ = std::max(x_max_, tx(x));
    y_min_ = std::min(y_min_, y);
    y_max_ = std::max(y_max_, y);
  }
  double plot_w() const { return kWidth - kLeft - kRight; }
  double plot_h() const { return kHeight - kTop - kBottom; }
  double span(double lo, double hi) const { return hi > lo ? hi - lo : 1.0; }
  double px(double x) const {
    return kLeft + plot_w() * (tx(x) - x_min_) / span(x_min_, x_max_);
  }
  double py(double y) const {
    return kTop + plot_h() * (1.0 - (y - y_min_) / span(y_min_, y_max_));
  }

  void axis_labels(std::ostringstream& s) const {
    auto text = [&](double x, double y, const std::string& t, const char* anchor,
                    const char* extra = "") {
      s << R"(<text x=")" << x << R"(" y=")" << y << R"(" font-family="sans-serif" font-size="12" text-anchor=")"
        << anchor << '"' << extra << '>' << xml_escape(t) << "</text>\n";
    };
    text(kWidth / 2, kTop / 2 + 6, title_, "middle");
    text(kLeft + plot_w() / 2, kHeight - 15, x_label_, "middle");
    s << R"(<text x="18" y=")" << kTop + plot_h() / 2
      << R"x(" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 18 )x"
      << kTop + plot_h() / 2 << R"x()">)x" << xml_escape(y_label_) << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
      const double fx = x_min_ + (x_max_ - x_min_) * k / 4.0;
      const double fy = y_min_ + (y_max_ - y_min_) * k / 4.0;
      const double label_x = log_x_ ? std::pow(10.0, fx) : fx;
      std::ostringstream lx, ly;
      lx.precision(4);
      ly.precision(4);
      lx << label_x;
      ly << fy;
      text(kLeft + plot_w() * k / 4.0, kTop + plot_h() + 18, lx.str(), "middle");
      text(kLeft - 6, kTop + plot_h() * (1.0 - k / 4.0) + 4, ly.str(), "end");
    }
  }

  std::string title_, x_label_, y_label_;
  bool log_x_ = false;
  std::vector<Point> points_;
  std::vector<Bar> bars_;
  std::vector<Line> lines_;
  double x_min_ = std::numeric_limits<double>::infinity();
  double x_max_ = -std::numeric_limits<double>::infinity();
  double y_min_ = std::numeric_limits<double>::infinity();
  double y_max_ = -std::numeric_limits<double>::infinity();
};

}  // namespace evscale
