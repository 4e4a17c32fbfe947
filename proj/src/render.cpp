// Top-down SVG view of a layout.
#include <cmath>
#include <numbers>
#include <set>

#include <fmt/format.h>

#include "layoutforge/eval.hpp"
#include "layoutforge/geometry.hpp"

namespace layoutforge::eval {

namespace {

std::string escape(std::string_view s) {
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

// Fixed three decimals, with -0.000 folded to 0.000 so output is stable.
std::string num(double v) {
  std::string s = fmt::format("{:.3f}", v);
  if (s == "-0.000") s = "0.000";
  return s;
}

}  // namespace

std::string render_svg(const Layout& layout, const SvgOptions& options) {
  const double k = options.pixels_per_meter;
  const auto b = geometry::bounds(layout.floor.vertices);
  const double min_x = b.min.x - options.margin;
  const double max_y = b.max.y + options.margin;
  const double width = (b.max.x - b.min.x + 2.0 * options.margin) * k;
  const double height = (b.max.y - b.min.y + 2.0 * options.margin) * k;
  // SVG y grows downward; flip so +y points up on screen.
  const auto px = [&](Vec2 p) { return Vec2{(p.x - min_x) * k, (max_y - p.y) * k}; };

  std::set<std::string> overlapping;
  std::vector<geometry::OrientedRect2D> rects;
  for (const PlacedObject& o : layout.objects) rects.push_back(geometry::footprint(o));
  for (std::size_t i = 0; i < rects.size(); ++i) {
    for (std::size_t j = i + 1; j < rects.size(); ++j) {
      if (geometry::overlap_area(rects[i], rects[j]) > 0.0) {
        overlapping.insert(layout.objects[i].instance_id);
        overlapping.insert(layout.objects[j].instance_id);
      }
    }
  }

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n", num(width),
      num(height), num(width), num(height));
  svg += "<style>.floor{fill:#f4f1ea;stroke:#333;stroke-width:2}.object{fill:#9bb7d4;fill-opacity:0.7;stroke:#234;"
         "stroke-width:1}.overlap{stroke:#d62728;stroke-width:3}.out-of-bounds{fill:#ff9896}.heading{stroke:#234;"
         "stroke-width:2}.label{font:10px sans-serif;fill:#111;text-anchor:middle}</style>\n";
  std::string points;
  for (const Vec2& v : layout.floor.vertices) {
    const Vec2 p = px(v);
    points += (points.empty() ? "" : " ") + num(p.x) + "," + num(p.y);
  }
  svg += "<polygon class=\"floor\" points=\"" + points + "\"/>\n";

  for (std::size_t i = 0; i < layout.objects.size(); ++i) {
    const PlacedObject& o = layout.objects[i];
    const auto& r = rects[i];
    std::string cls = "object";
    if (overlapping.count(o.instance_id)) cls += " overlap";
    if (geometry::containment_violation(r, layout.floor) > 0.0) cls += " out-of-bounds";
    const Vec2 c = px(r.center);
    // Screen rotation is clockwise-positive because of the y flip.
    const double deg = -r.angle * 180.0 / std::numbers::pi;
    svg += fmt::format(
        "<rect class=\"{}\" data-id=\"{}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" transform=\"rotate({} {} {})\"/>\n",
        cls, escape(o.instance_id), num(c.x - r.half_width * k), num(c.y - r.half_depth * k), num(2.0 * r.half_width * k),
        num(2.0 * r.half_depth * k), num(deg), num(c.x), num(c.y));
    const Vec2 tip = px(r.center + geometry::facing_direction(r.angle) * r.half_depth);
    svg += fmt::format("<line class=\"heading\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n", num(c.x), num(c.y),
                       num(tip.x), num(tip.y));
    if (options.labels) {
      svg += fmt::format("<text class=\"label\" x=\"{}\" y=\"{}\">{}</text>\n", num(c.x), num(c.y),
                         escape(o.instance_id));
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace layoutforge::eval
