#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "stocycle/errors.hpp"

namespace stocycle::app {

std::string xml_escape(const std::string& text) {
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

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

// Roughly five round-numbered ticks spanning [lo, hi].
std::vector<double> ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) out.push_back(t);
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
  void finish() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      const double pad = std::max(1.0, std::abs(lo)) * 0.5;
      lo -= pad;
      hi += pad;
    } else {
      const double pad = 0.04 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  }
};

}  // namespace

Panel::Panel(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void Panel::line(const std::vector<double>& x, const std::vector<double>& y, const std::string& color, double width,
                 bool dashed) {
  shapes_.push_back({Shape::kLine, x, y, {}, color, width, dashed, 1.0});
}

void Panel::band(const std::vector<double>& x, const std::vector<double>& lower, const std::vector<double>& upper,
                 const std::string& color, double opacity) {
  shapes_.push_back({Shape::kBand, x, lower, upper, color, 0.0, false, opacity});
}

void Panel::points(const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
                   double radius) {
  shapes_.push_back({Shape::kPoints, x, y, {}, color, radius, false, 1.0});
}

void Panel::outline(const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
                    double width) {
  shapes_.push_back({Shape::kOutline, x, y, {}, color, width, false, 1.0});
}

void Panel::label(double x, double y, const std::string& text) { labels_.push_back({x, y, text}); }

void Panel::legend(const std::string& text, const std::string& color) { legend_.emplace_back(text, color); }

std::string Panel::render(double left, double top, double width, double height) const {
  Range rx, ry;
  for (const auto& s : shapes_) {
    for (double v : s.x) rx.add(v);
    for (double v : s.y) ry.add(v);
    for (double v : s.y2) ry.add(v);
  }
  for (const auto& l : labels_) {
    rx.add(l.x);
    ry.add(l.y);
  }
  rx.finish();
  ry.finish();

  const double ml = 62.0, mr = 16.0, mt = 30.0, mb = 44.0;
  const double x0 = left + ml, x1 = left + width - mr;
  const double y0 = top + mt, y1 = top + height - mb;
  const auto sx = [&](double v) { return x0 + (v - rx.lo) / (rx.hi - rx.lo) * (x1 - x0); };
  const auto sy = [&](double v) { return y1 - (v - ry.lo) / (ry.hi - ry.lo) * (y1 - y0); };

  std::ostringstream os;
  os << "<g>\n";
  os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(x1 - x0) << "\" height=\""
     << num(y1 - y0) << "\" fill=\"white\" stroke=\"#444\"/>\n";
  for (double t : ticks(rx.lo, rx.hi)) {
    os << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(sx(t)) << "\" y2=\""
       << num(y1 + 4) << "\" stroke=\"#444\"/>";
    os << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(y1 + 16) << "\" font-size=\"11\" text-anchor=\"middle\">"
       << tick_text(t) << "</text>\n";
  }
  for (double t : ticks(ry.lo, ry.hi)) {
    os << "<line x1=\"" << num(x0 - 4) << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << num(x0) << "\" y2=\""
       << num(sy(t)) << "\" stroke=\"#444\"/>";
    os << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(sy(t) + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
       << tick_text(t) << "</text>\n";
  }
  if (zero_axes_) {
    if (rx.lo < 0.0 && rx.hi > 0.0) {
      os << "<line x1=\"" << num(sx(0)) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(sx(0)) << "\" y2=\""
         << num(y1) << "\" stroke=\"#999\" stroke-dasharray=\"3,3\"/>\n";
    }
    if (ry.lo < 0.0 && ry.hi > 0.0) {
      os << "<line x1=\"" << num(x0) << "\" y1=\"" << num(sy(0)) << "\" x2=\"" << num(x1) << "\" y2=\""
         << num(sy(0)) << "\" stroke=\"#999\" stroke-dasharray=\"3,3\"/>\n";
    }
  }
  for (const auto& s : shapes_) {
    switch (s.kind) {
      case Shape::kBand: {
        os << "<polygon fill=\"" << s.color << "\" fill-opacity=\"" << s.opacity << "\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) os << num(sx(s.x[i])) << ',' << num(sy(s.y2[i])) << ' ';
        for (std::size_t i = s.x.size(); i > 0; --i) os << num(sx(s.x[i - 1])) << ',' << num(sy(s.y[i - 1])) << ' ';
        os << "\"/>\n";
        break;
      }
      case Shape::kLine:
      case Shape::kOutline: {
        os << "<" << (s.kind == Shape::kLine ? "polyline" : "polygon") << " fill=\"none\" stroke=\"" << s.color
           << "\" stroke-width=\"" << s.size << "\"" << (s.dashed ? " stroke-dasharray=\"5,4\"" : "")
           << " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) os << num(sx(s.x[i])) << ',' << num(sy(s.y[i])) << ' ';
        os << "\"/>\n";
        break;
      }
      case Shape::kPoints: {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          os << "<circle cx=\"" << num(sx(s.x[i])) << "\" cy=\"" << num(sy(s.y[i])) << "\" r=\"" << s.size
             << "\" fill=\"" << s.color << "\"/>";
        }
        os << '\n';
        break;
      }
    }
  }
  for (const auto& l : labels_) {
    os << "<text x=\"" << num(sx(l.x) + 3) << "\" y=\"" << num(sy(l.y) - 3) << "\" font-size=\"9\" fill=\"#333\">"
       << xml_escape(l.text) << "</text>\n";
  }
  double ly = y0 + 14;
  for (const auto& [text, color] : legend_) {
    os << "<line x1=\"" << num(x1 - 130) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(x1 - 112) << "\" y2=\""
       << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>";
    os << "<text x=\"" << num(x1 - 108) << "\" y=\"" << num(ly) << "\" font-size=\"11\">" << xml_escape(text)
       << "</text>\n";
    ly += 15;
  }
  os << "<text x=\"" << num(0.5 * (x0 + x1)) << "\" y=\"" << num(top + 18)
     << "\" font-size=\"13\" font-weight=\"bold\" text-anchor=\"middle\">" << xml_escape(title_) << "</text>\n";
  os << "<text x=\"" << num(0.5 * (x0 + x1)) << "\" y=\"" << num(top + height - 8)
     << "\" font-size=\"12\" text-anchor=\"middle\">" << xml_escape(x_label_) << "</text>\n";
  os << "<text transform=\"translate(" << num(left + 14) << ',' << num(0.5 * (y0 + y1))
     << ") rotate(-90)\" font-size=\"12\" text-anchor=\"middle\">" << xml_escape(y_label_) << "</text>\n";
  os << "</g>\n";
  return os.str();
}

void write_svg(const std::filesystem::path& path, const std::vector<Panel>& panels, std::size_t columns,
               double panel_width, double panel_height) {
  columns = std::max<std::size_t>(1, std::min(columns, panels.size()));
  const std::size_t rows = (panels.size() + columns - 1) / columns;
  const double w = panel_width * static_cast<double>(columns);
  const double h = panel_height * static_cast<double>(std::max<std::size_t>(rows, 1));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
      << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h) << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const double left = panel_width * static_cast<double>(i % columns);
    const double top = panel_height * static_cast<double>(i / columns);
    out << panels[i].render(left, top, panel_width, panel_height);
  }
  out << "</svg>\n";
}

}  // namespace stocycle::app
