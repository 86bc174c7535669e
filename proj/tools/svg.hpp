#pragma once

// Minimal static SVG charts: line series, shaded bands, scatter points and
// closed outlines on linear axes, arranged as one or more panels.

#include <filesystem>
#include <string>
#include <vector>

namespace stocycle::app {

class Panel {
 public:
  explicit Panel(std::string title = {}, std::string x_label = {}, std::string y_label = {});

  void line(const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
            double width = 1.5, bool dashed = false);
  void band(const std::vector<double>& x, const std::vector<double>& lower, const std::vector<double>& upper,
            const std::string& color, double opacity = 0.25);
  void points(const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
              double radius = 2.5);
  void outline(const std::vector<double>& x, const std::vector<double>& y, const std::string& color,
               double width = 1.0);
  void label(double x, double y, const std::string& text);
  // Draws the lines x = 0 and y = 0 when they fall inside the data range.
  void zero_axes(bool on = true) { zero_axes_ = on; }
  void legend(const std::string& text, const std::string& color);

  // SVG markup for this panel placed at (left, top) with the given size.
  std::string render(double left, double top, double width, double height) const;

 private:
  struct Shape {
    enum Kind { kLine, kBand, kPoints, kOutline } kind;
    std::vector<double> x, y, y2;
    std::string color;
    double size = 1.0;
    bool dashed = false;
    double opacity = 1.0;
  };
  struct Label {
    double x, y;
    std::string text;
  };
  std::string title_, x_label_, y_label_;
  std::vector<Shape> shapes_;
  std::vector<Label> labels_;
  std::vector<std::pair<std::string, std::string>> legend_;
  bool zero_axes_ = false;
};

// Writes panels in a grid with `columns` columns.
void write_svg(const std::filesystem::path& path, const std::vector<Panel>& panels, std::size_t columns = 1,
               double panel_width = 640.0, double panel_height = 360.0);

// Escapes text for inclusion in SVG.
std::string xml_escape(const std::string& text);

}  // namespace stocycle::app
