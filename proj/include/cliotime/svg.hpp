#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cliotime/logistic.hpp"

namespace cliotime::svg {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string escape(std::string_view text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

inline std::string_view palette(std::size_t i) {
  static constexpr std::string_view colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b",
                                                "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79"};
  return colors[i % std::size(colors)];
}

/// One set of axes mapped onto a width x height box. Elements are appended in
/// drawing order; nothing outside the data ranges is clipped.
class Plot {
 public:
  Plot(double width, double height, Range x, Range y)
      : width_(width), height_(height), x_(x), y_(y) {}

  double px(double x) const { return left_ + (x - x_.lo) / (x_.hi - x_.lo) * (width_ - left_ - right_); }
  double py(double y) const { return height_ - bottom_ - (y - y_.lo) / (y_.hi - y_.lo) * (height_ - top_ - bottom_); }

  void polyline(std::span<const DataPoint> pts, std::string_view stroke, double stroke_width = 1.0,
                double opacity = 1.0, std::string_view dash = {}) {
    if (pts.empty()) return;
    body_ += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + fmt(stroke_width) +
             "\" stroke-opacity=\"" + fmt(opacity) + "\"";
    if (!dash.empty()) body_ += " stroke-dasharray=\"" + std::string(dash) + "\"";
    body_ += " points=\"";
    for (const auto& p : pts) body_ += fmt(px(p.t)) + "," + fmt(py(p.y)) + " ";
    body_ += "\"/>\n";
  }

  void markers(std::span<const DataPoint> pts, std::string_view fill, double radius = 1.5) {
    for (const auto& p : pts) {
      body_ += "<circle cx=\"" + fmt(px(p.t)) + "\" cy=\"" + fmt(py(p.y)) + "\" r=\"" + fmt(radius) +
               "\" fill=\"" + std::string(fill) + "\"/>\n";
    }
  }

  void bars(std::span<const double> edges, std::span<const double> heights, std::string_view fill) {
    for (std::size_t i = 0; i + 1 < edges.size() && i < heights.size(); ++i) {
      const double x0 = px(edges[i]);
      const double x1 = px(edges[i + 1]);
      const double y0 = py(heights[i]);
      body_ += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(x1 - x0) + "\" height=\"" +
               fmt(py(y_.lo) - y0) + "\" fill=\"" + std::string(fill) + "\" fill-opacity=\"0.5\"/>\n";
    }
  }

  void band(double x0, double x1, std::string_view fill, double opacity = 0.2) {
    const double a = px(std::max(x0, x_.lo));
    const double b = px(std::min(x1, x_.hi));
    body_ += "<rect x=\"" + fmt(a) + "\" y=\"" + fmt(top_) + "\" width=\"" + fmt(std::max(0.0, b - a)) +
             "\" height=\"" + fmt(height_ - top_ - bottom_) + "\" fill=\"" + std::string(fill) +
             "\" fill-opacity=\"" + fmt(opacity) + "\"/>\n";
  }

  void vline(double x, std::string_view stroke, std::string_view dash = "4 3") {
    body_ += "<line x1=\"" + fmt(px(x)) + "\" y1=\"" + fmt(top_) + "\" x2=\"" + fmt(px(x)) + "\" y2=\"" +
             fmt(height_ - bottom_) + "\" stroke=\"" + std::string(stroke) + "\" stroke-dasharray=\"" +
             std::string(dash) + "\"/>\n";
  }

  void hline(double y, std::string_view stroke, std::string_view dash = "4 3") {
    body_ += "<line x1=\"" + fmt(left_) + "\" y1=\"" + fmt(py(y)) + "\" x2=\"" + fmt(width_ - right_) + "\" y2=\"" +
             fmt(py(y)) + "\" stroke=\"" + std::string(stroke) + "\" stroke-dasharray=\"" + std::string(dash) +
             "\"/>\n";
  }

  void text(double x, double y, std::string_view content, double size = 11.0, std::string_view anchor = "start") {
    body_ += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" font-size=\"" + fmt(size) +
             "\" font-family=\"sans-serif\" text-anchor=\"" + std::string(anchor) + "\">" + escape(content) +
             "</text>\n";
  }

  void axes(std::string_view x_label, std::string_view y_label, std::string_view title, int ticks = 5) {
    const double x0 = left_, x1 = width_ - right_, y0 = height_ - bottom_, y1 = top_;
    body_ += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(y1) + "\" width=\"" + fmt(x1 - x0) + "\" height=\"" +
             fmt(y0 - y1) + "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (int i = 0; i <= ticks; ++i) {
      const double xv = x_.lo + (x_.hi - x_.lo) * i / ticks;
      const double yv = y_.lo + (y_.hi - y_.lo) * i / ticks;
      text(px(xv), y0 + 14, tick_label(xv), 9, "middle");
      text(x0 - 4, py(yv) + 3, tick_label(yv), 9, "end");
    }
    text((x0 + x1) / 2, height_ - 4, x_label, 10, "middle");
    body_ += "<text x=\"10\" y=\"" + fmt((y0 + y1) / 2) + "\" font-size=\"10\" font-family=\"sans-serif\" "
             "text-anchor=\"middle\" transform=\"rotate(-90 10 " + fmt((y0 + y1) / 2) + ")\">" +
             escape(y_label) + "</text>\n";
    text((x0 + x1) / 2, 12, title, 11, "middle");
  }

  std::string group(double dx, double dy) const {
    return "<g transform=\"translate(" + fmt(dx) + "," + fmt(dy) + ")\">\n" + body_ + "</g>\n";
  }

  std::string document() const { return wrap(width_, height_, group(0, 0)); }

  static std::string wrap(double width, double height, std::string_view content) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           fmt(width) + "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) +
           "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + std::string(content) + "</svg>\n";
  }

 private:
  static std::string tick_label(double v) {
    char buf[32];
    if (std::abs(v) >= 100.0 || v == std::round(v)) {
      std::snprintf(buf, sizeof(buf), "%.0f", v);
    } else {
      std::snprintf(buf, sizeof(buf), "%.2f", v);
    }
    return buf;
  }

  double width_;
  double height_;
  Range x_;
  Range y_;
  double left_ = 46.0;
  double right_ = 12.0;
  double top_ = 20.0;
  double bottom_ = 34.0;
  std::string body_;
};

}  // namespace cliotime::svg
