#include "sentinel/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "sentinel/common.hpp"

namespace sentinel {
namespace {

constexpr double kWidth = 1000.0, kHeight = 320.0;
constexpr double kLeft = 55.0, kRight = 985.0, kTop = 30.0, kBottom = 290.0;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

double x_of(std::int64_t t, std::int64_t T) {
  return kLeft + (kRight - kLeft) * static_cast<double>(t) / static_cast<double>(std::max<std::int64_t>(T - 1, 1));
}

std::string header(const std::string& title) {
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) +
       "\" font-family=\"monospace\" font-size=\"12\">\n";
  s += "<rect width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) + "\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(kLeft) + "\" y=\"18\" font-size=\"14\">" + title + "</text>\n";
  return s;
}

std::string frame() {
  return "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(kRight - kLeft) + "\" height=\"" +
         fmt(kBottom - kTop) + "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
}

std::string shaded_rects(const std::vector<Interval>& shaded, std::int64_t T, const char* fill) {
  std::string s;
  for (const Interval& iv : shaded) {
    const double x0 = x_of(iv.begin, T);
    const double x1 = x_of(std::max(iv.begin, iv.end - 1), T);
    s += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(std::max(x1 - x0, 1.0)) +
         "\" height=\"" + fmt(kBottom - kTop) + "\" fill=\"" + fill + "\" stroke=\"none\"/>\n";
  }
  return s;
}

std::string polyline(const std::vector<double>& xs, const std::vector<double>& ys, const char* color) {
  std::string s = "<polyline fill=\"none\" stroke=\"";
  s += color;
  s += "\" stroke-width=\"1\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ' ';
    s += fmt(xs[i]) + "," + fmt(ys[i]);
  }
  s += "\"/>\n";
  return s;
}

std::int64_t decimation_stride(std::int64_t T) { return std::max<std::int64_t>(1, T / 2000); }

std::string time_axis_labels(std::int64_t T) {
  std::string s;
  for (int k = 0; k <= 4; ++k) {
    const std::int64_t t = (T - 1) * k / 4;
    s += "<text x=\"" + fmt(x_of(t, T) - 10.0) + "\" y=\"" + fmt(kBottom + 16.0) + "\" fill=\"#444\">" +
         std::to_string(t) + "</text>\n";
  }
  return s;
}

}  // namespace

std::string render_channels_svg(const Signal2D& x, const std::vector<int>& channels,
                                const std::vector<Interval>& shaded, const std::string& title) {
  require_nonempty(x, "render_channels_svg");
  if (channels.empty()) throw ValidationError("render_channels_svg: no channels selected");
  for (int c : channels)
    if (c < 0 || c >= x.d) throw ValidationError("render_channels_svg: channel " + std::to_string(c) + " out of range");

  std::string s = header(title);
  s += shaded_rects(shaded, x.T, "#fde8e8");
  s += frame();
  s += time_axis_labels(x.T);

  const std::int64_t stride = decimation_stride(x.T);
  for (std::size_t k = 0; k < channels.size(); ++k) {
    const int c = channels[k];
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::int64_t t = 0; t < x.T; ++t) {
      lo = std::min(lo, x.at(t, c));
      hi = std::max(hi, x.at(t, c));
    }
    if (hi <= lo) hi = lo + 1.0;
    std::vector<double> px, py;
    for (std::int64_t t = 0; t < x.T; t += stride) {
      px.push_back(x_of(t, x.T));
      py.push_back(kBottom - (kBottom - kTop) * (x.at(t, c) - lo) / (hi - lo));
    }
    const char* color = kPalette[k % kPaletteSize];
    s += polyline(px, py, color);
    const std::string name = x.channels.size() == static_cast<std::size_t>(x.d) ? x.channels[static_cast<std::size_t>(c)]
                                                                                : "ch" + std::to_string(c);
    s += "<text x=\"" + fmt(kLeft + 8.0 + 90.0 * static_cast<double>(k)) + "\" y=\"" + fmt(kTop + 14.0) +
         "\" fill=\"" + color + "\">" + name + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string render_loss_svg(const std::vector<double>& loss_history) {
  if (loss_history.empty()) throw ValidationError("render_loss_svg: empty loss history");
  const std::int64_t n = static_cast<std::int64_t>(loss_history.size());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : loss_history) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) hi = lo + 1.0;

  std::string s = header("mean training loss per epoch");
  s += frame();
  std::vector<double> px, py;
  for (std::int64_t i = 0; i < n; ++i) {
    px.push_back(x_of(i, n));
    py.push_back(kBottom - (kBottom - kTop) * (loss_history[static_cast<std::size_t>(i)] - lo) / (hi - lo));
  }
  s += polyline(px, py, kPalette[0]);
  for (std::size_t i = 0; i < px.size(); ++i)
    s += "<circle cx=\"" + fmt(px[i]) + "\" cy=\"" + fmt(py[i]) + "\" r=\"2.5\" fill=\"" + kPalette[0] + "\"/>\n";
  s += "<text x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kBottom + 16.0) + "\" fill=\"#444\">epoch 0.." +
       std::to_string(n - 1) + ", loss " + fmt_g(lo) + " .. " + fmt_g(hi) + "</text>\n";
  s += "</svg>\n";
  return s;
}

std::string render_scores_svg(const std::vector<double>& scores, double threshold,
                              const std::vector<Interval>& shaded, const std::vector<Interval>& flagged,
                              const std::string& title) {
  if (scores.empty()) throw ValidationError("render_scores_svg: empty scores");
  const std::int64_t T = static_cast<std::int64_t>(scores.size());

  // Log axis; zeros from the cold start sit on the floor.
  auto logv = [](double v) { return std::log10(std::max(v, 1e-12)); };
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : scores) {
    lo = std::min(lo, logv(v));
    hi = std::max(hi, logv(v));
  }
  if (std::isfinite(threshold) && threshold > 0.0) {
    lo = std::min(lo, logv(threshold));
    hi = std::max(hi, logv(threshold));
  }
  if (hi <= lo) hi = lo + 1.0;
  auto y_of = [&](double lv) { return kBottom - (kBottom - kTop) * (lv - lo) / (hi - lo); };

  std::string s = header(title);
  s += shaded_rects(shaded, T, "#fde8e8");
  s += frame();
  s += time_axis_labels(T);

  const std::int64_t stride = decimation_stride(T);
  std::vector<double> px, py;
  for (std::int64_t t = 0; t < T; t += stride) {
    px.push_back(x_of(t, T));
    py.push_back(y_of(logv(scores[static_cast<std::size_t>(t)])));
  }
  s += polyline(px, py, kPalette[0]);

  if (std::isfinite(threshold)) {
    const double y = y_of(logv(threshold));
    s += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(kRight) + "\" y2=\"" + fmt(y) +
         "\" stroke=\"" + kPalette[3] + "\" stroke-width=\"1\" stroke-dasharray=\"6 4\"/>\n";
    s += "<text x=\"" + fmt(kRight - 160.0) + "\" y=\"" + fmt(y - 5.0) + "\" fill=\"" + kPalette[3] +
         "\">threshold " + fmt_g(threshold) + "</text>\n";
  }
  for (const Interval& iv : flagged) {
    const double x0 = x_of(iv.begin, T);
    const double x1 = x_of(std::max(iv.begin, iv.end - 1), T);
    s += "<rect x=\"" + fmt(x0) + "\" y=\"" + fmt(kBottom + 2.0) + "\" width=\"" + fmt(std::max(x1 - x0, 1.0)) +
         "\" height=\"5\" fill=\"" + kPalette[3] + "\" stroke=\"none\"/>\n";
  }
  s += "<text x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kBottom + 30.0) +
       "\" fill=\"#444\">log10 score, shaded = labeled attack, bottom marks = flagged</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace sentinel
