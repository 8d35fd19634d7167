#include <cmath>
#include <cstdio>
#include <string>

#include "railsim/harness.hpp"
#include "railsim/io.hpp"

namespace railsim {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
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

}  // namespace

std::string render_time_space_svg(const RunRecord& r, const SvgStyle& style) {
  const double W = style.width;
  const double H = style.height;
  const double m = style.margin;
  const double pw = W - 2 * m;
  const double ph = H - 2 * m;
  const double span_t = std::max<double>(1.0, static_cast<double>(r.end_s - r.start_s));
  const double span_x = r.line_length > 0.0 ? r.line_length : 1.0;
  auto tx = [&](double t) { return m + (t - static_cast<double>(r.start_s)) / span_t * pw; };
  auto py = [&](double x) { return m + ph - x / span_x * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(style.width) + "\" height=\"" +
       std::to_string(style.height) + "\" viewBox=\"0 0 " + std::to_string(style.width) + " " +
       std::to_string(style.height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (style.title) {
    s += "<text x=\"" + num(m) + "\" y=\"" + num(m / 2) + "\" font-size=\"14\">" + escape(r.controller) + ", seed " +
         std::to_string(r.seed) + "</text>\n";
  }

  s += "<g class=\"grid\" stroke=\"#cccccc\" stroke-width=\"0.5\">\n";
  for (const auto& st : r.stations) {
    s += "<line x1=\"" + num(m) + "\" y1=\"" + num(py(st.position)) + "\" x2=\"" + num(m + pw) + "\" y2=\"" +
         num(py(st.position)) + "\"/>\n";
  }
  const Seconds first_hour = (r.start_s + 3599) / 3600 * 3600;
  for (Seconds h = first_hour; h <= r.end_s; h += 3600) {
    s += "<line x1=\"" + num(tx(static_cast<double>(h))) + "\" y1=\"" + num(m) + "\" x2=\"" +
         num(tx(static_cast<double>(h))) + "\" y2=\"" + num(m + ph) + "\"/>\n";
  }
  s += "</g>\n<g class=\"labels\" fill=\"#333333\">\n";
  for (const auto& st : r.stations) {
    s += "<text x=\"" + num(m - 6) + "\" y=\"" + num(py(st.position) + 4) + "\" text-anchor=\"end\">" +
         escape(st.name) + "</text>\n";
  }
  for (Seconds h = first_hour; h <= r.end_s; h += 3600) {
    s += "<text x=\"" + num(tx(static_cast<double>(h))) + "\" y=\"" + num(m + ph + 16) + "\" text-anchor=\"middle\">" +
         format_hms(h).substr(0, 5) + "</text>\n";
  }
  s += "</g>\n";
  s += "<rect x=\"" + num(m) + "\" y=\"" + num(m) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

  for (const auto& sp : r.spans) {
    const double t0 = std::max<double>(static_cast<double>(sp.start_s), static_cast<double>(r.start_s));
    const double t1 = std::min<double>(static_cast<double>(sp.end_s), static_cast<double>(r.end_s));
    if (t1 < t0) continue;
    s += "<rect class=\"disruption\" x=\"" + num(tx(t0)) + "\" y=\"" + num(py(sp.hi)) + "\" width=\"" +
         num(tx(t1) - tx(t0)) + "\" height=\"" + num(py(sp.lo) - py(sp.hi)) +
         "\" fill=\"black\" fill-opacity=\"0.12\" stroke=\"black\" stroke-width=\"" + num(style.disruption_stroke) +
         "\"/>\n";
  }

  for (std::size_t i = 0; i < r.trains.size(); ++i) {
    const char* color = kPalette[i % (sizeof kPalette / sizeof kPalette[0])];
    std::size_t k = 0;
    const std::size_t n = r.positions.size();
    while (k < n) {
      while (k < n && std::isnan(r.positions[k][i])) ++k;
      if (k >= n) break;
      std::string pts;
      auto add = [&](std::size_t at) {
        if (!pts.empty()) pts += ' ';
        pts += num(tx(static_cast<double>(r.start_s) + static_cast<double>(at))) + "," + num(py(r.positions[at][i]));
      };
      add(k);
      std::size_t last = k;
      ++k;
      for (; k < n && !std::isnan(r.positions[k][i]); ++k) {
        const bool tail = k + 1 >= n || std::isnan(r.positions[k + 1][i]);
        if (!tail && r.positions[k][i] - r.positions[k - 1][i] == r.positions[k + 1][i] - r.positions[k][i]) continue;
        add(k);
        last = k;
      }
      if (last == k - 1 && pts.find(' ') == std::string::npos) add(last);
      s += "<polyline class=\"train\" data-train=\"" + escape(r.trains[i]) + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"" + num(style.train_stroke) + "\" points=\"" + pts + "\"/>\n";
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace railsim
