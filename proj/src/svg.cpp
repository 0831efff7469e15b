#include "interlace/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace interlace::svg {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 150;
constexpr double kTop = 40;
constexpr double kBottom = 55;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) {
      lo = 0;
      hi = 1;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

class Canvas {
 public:
  Canvas(const Axes& axes, Range x, Range y) : axes_(axes), x_(x), y_(y) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out_ << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
         << escape(axes.title) << "</text>\n";
    frame();
  }

  double px(double x) const { return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double y) const {
    return kHeight - kBottom - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom);
  }

  std::ostringstream& body() { return out_; }

  void legend(std::size_t index, const std::string& name) {
    const double y = kTop + 16.0 * static_cast<double>(index);
    out_ << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\""
         << color(index) << "\"/>\n<text x=\"" << kWidth - kRight + 27 << "\" y=\"" << y + 9 << "\">"
         << escape(name) << "</text>\n";
  }

  static const char* color(std::size_t index) { return kPalette[index % kPalette.size()]; }

  std::string finish() {
    for (double g : axes_.y_guides) {
      if (g < y_.lo || g > y_.hi) continue;
      out_ << "<line x1=\"" << kLeft << "\" x2=\"" << kWidth - kRight << "\" y1=\"" << py(g) << "\" y2=\""
           << py(g) << "\" stroke=\"#555\" stroke-dasharray=\"4 3\"/>\n";
    }
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  void frame() {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    out_ << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
         << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double xv = x_.lo + (x_.hi - x_.lo) * i / 4.0;
      const double yv = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      out_ << "<text x=\"" << px(xv) << "\" y=\"" << y0 + 15 << "\" text-anchor=\"middle\">" << tick(xv)
           << "</text>\n";
      out_ << "<text x=\"" << x0 - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << tick(yv)
           << "</text>\n";
    }
    out_ << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
         << escape(axes_.x_label) << "</text>\n";
    out_ << "<text transform=\"translate(18," << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
         << escape(axes_.y_label) << "</text>\n";
  }

  static std::string tick(double v) {
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
  }

  const Axes& axes_;
  Range x_;
  Range y_;
  std::ostringstream out_;
};

}  // namespace

std::string scatter(const Axes& axes, const std::vector<Series>& series) {
  Range xr, yr;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        xr.add(s.x[i]);
        yr.add(s.y[i]);
      }
    }
  }
  for (double g : axes.y_guides) yr.add(g);
  xr.settle();
  yr.settle();
  Canvas canvas(axes, xr, yr);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      canvas.body() << "<circle cx=\"" << canvas.px(s.x[i]) << "\" cy=\"" << canvas.py(s.y[i])
                    << "\" r=\"2.5\" fill=\"" << Canvas::color(k) << "\" fill-opacity=\"0.6\"/>\n";
    }
    canvas.legend(k, s.name);
  }
  return canvas.finish();
}

std::string histogram(const Axes& axes, const std::vector<Series>& series, int bins) {
  bins = std::max(bins, 1);
  Range xr;
  for (const auto& s : series) {
    for (double v : s.y) xr.add(v);
  }
  xr.settle();
  const double width = (xr.hi - xr.lo) / bins;
  std::vector<std::vector<int>> counts(series.size(), std::vector<int>(static_cast<std::size_t>(bins), 0));
  int peak = 1;
  for (std::size_t k = 0; k < series.size(); ++k) {
    for (double v : series[k].y) {
      if (!std::isfinite(v)) continue;
      const int b = std::clamp(static_cast<int>((v - xr.lo) / width), 0, bins - 1);
      peak = std::max(peak, ++counts[k][static_cast<std::size_t>(b)]);
    }
  }
  Range yr;
  yr.lo = 0;
  yr.hi = peak * 1.05;
  Canvas canvas(axes, xr, yr);
  for (std::size_t k = 0; k < series.size(); ++k) {
    for (int b = 0; b < bins; ++b) {
      const int c = counts[k][static_cast<std::size_t>(b)];
      if (c == 0) continue;
      const double x0 = canvas.px(xr.lo + b * width);
      const double x1 = canvas.px(xr.lo + (b + 1) * width);
      canvas.body() << "<rect x=\"" << x0 << "\" y=\"" << canvas.py(c) << "\" width=\"" << x1 - x0
                    << "\" height=\"" << canvas.py(0) - canvas.py(c) << "\" fill=\"" << Canvas::color(k)
                    << "\" fill-opacity=\"0.45\"/>\n";
    }
    canvas.legend(k, series[k].name);
  }
  return canvas.finish();
}

}  // namespace interlace::svg
