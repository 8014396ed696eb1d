#include "blockpred/plots.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "blockpred/errors.hpp"

namespace blockpred {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
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

struct Svg {
  std::string body;
  int width, height;

  Svg(int w, int h) : width(w), height(h) {}
  void rect(double x, double y, double w, double h, const std::string& fill) {
    body += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" +
            num(h) + "\" fill=\"" + fill + "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double sw = 1) {
    body += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
            num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(sw) + "\"/>\n";
  }
  void text(double x, double y, const std::string& t, const std::string& anchor = "middle",
            int size = 12, const std::string& fill = "#222") {
    body += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + std::to_string(size) +
            "\" text-anchor=\"" + anchor + "\" fill=\"" + fill +
            "\" font-family=\"sans-serif\">" + escape(t) + "</text>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke) {
    body += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : pts) body += num(x) + "," + num(y) + " ";
    body += "\"/>\n";
    for (const auto& [x, y] : pts) {
      body += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"3\" fill=\"" + stroke + "\"/>\n";
    }
  }
  std::string str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
           " " + std::to_string(height) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
           body + "</svg>\n";
  }
};

// Unit-interval y axis with gridlines; returns the y pixel for a value.
struct Axis {
  double left, top, w, h;
  double y(double v) const { return top + h * (1.0 - std::clamp(v, 0.0, 1.0)); }
  void draw(Svg& svg) const {
    for (int i = 0; i <= 5; ++i) {
      const double v = i / 5.0;
      svg.line(left, y(v), left + w, y(v), "#ddd");
      svg.text(left - 6, y(v) + 4, num(v), "end", 10);
    }
    svg.line(left, top, left, top + h, "#444");
    svg.line(left, top + h, left + w, top + h, "#444");
  }
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write plot " + path.string());
  out << text;
}

}  // namespace

std::string render_f1_bars(const std::vector<MetricsReport>& reports, int r_prime) {
  std::vector<const MetricsReport*> cells;
  for (const auto& r : reports) {
    if (r.r_prime == r_prime) cells.push_back(&r);
  }
  const int group_w = 70;
  const int width = std::max(320, 80 + group_w * static_cast<int>(cells.size()) + 40);
  Svg svg(width, 300);
  Axis axis{60, 40, static_cast<double>(width - 100), 200};
  axis.draw(svg);
  svg.text(width / 2.0, 22, "Future-" + std::to_string(r_prime) + " prediction: F1 and top-1 accuracy", "middle", 14);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double x0 = axis.left + 15 + static_cast<double>(i) * group_w;
    svg.rect(x0, axis.y(cells[i]->f1), 24, axis.top + axis.h - axis.y(cells[i]->f1), "#3b6ea5");
    svg.rect(x0 + 26, axis.y(cells[i]->top1_accuracy),
             24, axis.top + axis.h - axis.y(cells[i]->top1_accuracy), "#e08a3c");
    svg.text(x0 + 25, axis.top + axis.h + 16, cells[i]->scope, "middle", 11);
  }
  svg.rect(width - 150, 255, 12, 12, "#3b6ea5");
  svg.text(width - 134, 265, "F1", "start", 11);
  svg.rect(width - 100, 255, 12, 12, "#e08a3c");
  svg.text(width - 84, 265, "accuracy", "start", 11);
  return svg.str();
}

std::string render_sweep(const std::vector<MetricsReport>& reports) {
  std::vector<const MetricsReport*> cells;
  for (const auto& r : reports) {
    if (r.scope == "combined") cells.push_back(&r);
  }
  std::sort(cells.begin(), cells.end(),
            [](const MetricsReport* a, const MetricsReport* b) { return a->r_prime < b->r_prime; });
  Svg svg(520, 320);
  Axis axis{60, 40, 420, 220};
  axis.draw(svg);
  svg.text(260, 22, "Combined: accuracy and F1 vs future window", "middle", 14);
  if (!cells.empty()) {
    const int lo = cells.front()->r_prime, hi = cells.back()->r_prime;
    const auto x = [&](int rp) {
      return hi == lo ? axis.left + axis.w / 2
                      : axis.left + 20 + (axis.w - 40) * (rp - lo) / static_cast<double>(hi - lo);
    };
    std::vector<std::pair<double, double>> acc, f;
    for (const auto* c : cells) {
      acc.emplace_back(x(c->r_prime), axis.y(c->top1_accuracy));
      f.emplace_back(x(c->r_prime), axis.y(c->f1));
      svg.text(x(c->r_prime), axis.top + axis.h + 16, std::to_string(c->r_prime), "middle", 11);
    }
    svg.polyline(acc, "#e08a3c");
    svg.polyline(f, "#3b6ea5");
  }
  svg.text(270, 310, "future window r'", "middle", 11);
  svg.rect(380, 270, 12, 12, "#3b6ea5");
  svg.text(396, 280, "F1", "start", 11);
  svg.rect(420, 270, 12, 12, "#e08a3c");
  svg.text(436, 280, "accuracy", "start", 11);
  return svg.str();
}

std::string render_confusion(const MetricsReport& report) {
  const auto& cm = report.confusion;
  Svg svg(300, 300);
  svg.text(150, 22, report.scope + " future-" + std::to_string(report.r_prime), "middle", 14);
  const double total = std::max<double>(1.0, static_cast<double>(cm.total()));
  // Rows: truth (LOS, blocked); columns: prediction (LOS, blocked).
  const std::uint64_t cells[2][2] = {{cm.tn, cm.fp}, {cm.fn, cm.tp}};
  for (int row = 0; row < 2; ++row) {
    for (int col = 0; col < 2; ++col) {
      const double frac = static_cast<double>(cells[row][col]) / total;
      const int shade = static_cast<int>(255 - 200 * std::min(1.0, 2.0 * frac));
      char fill[16];
      std::snprintf(fill, sizeof(fill), "#%02x%02xff", shade, shade);
      const double x = 90 + col * 90, y = 60 + row * 90;
      svg.rect(x, y, 88, 88, fill);
      svg.text(x + 44, y + 50, std::to_string(cells[row][col]), "middle", 16,
               frac > 0.3 ? "white" : "#222");
    }
  }
  svg.text(135, 260, "LOS", "middle", 11);
  svg.text(225, 260, "blocked", "middle", 11);
  svg.text(150, 285, "predicted", "middle", 12);
  svg.text(80, 108, "LOS", "end", 11);
  svg.text(80, 198, "blocked", "end", 11);
  return svg.str();
}

std::vector<std::filesystem::path> write_report_plots(const std::vector<MetricsReport>& reports,
                                                      const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  std::set<int> r_primes;
  for (const auto& r : reports) r_primes.insert(r.r_prime);
  for (int rp : r_primes) {
    auto p = dir / ("f1_by_scenario_" + std::to_string(rp) + ".svg");
    write_text(p, render_f1_bars(reports, rp));
    written.push_back(p);
    for (const auto& r : reports) {
      if (r.r_prime == rp && r.scope == "combined") {
        auto c = dir / ("confusion_" + std::to_string(rp) + ".svg");
        write_text(c, render_confusion(r));
        written.push_back(c);
      }
    }
  }
  auto s = dir / "sweep_combined.svg";
  write_text(s, render_sweep(reports));
  written.push_back(s);
  return written;
}

}  // namespace blockpred
