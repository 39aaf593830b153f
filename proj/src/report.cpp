#include "mixkin/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mixkin {

using nlohmann::json;

bool Report::any_fail() const {
  return std::any_of(checks.begin(), checks.end(),
                     [](const CheckRecord& c) { return c.verdict == "fail"; });
}

bool Report::any_hard_fail() const {
  return std::any_of(checks.begin(), checks.end(),
                     [](const CheckRecord& c) { return c.hard && c.verdict == "fail"; });
}

int Report::count(const std::string& verdict) const {
  return static_cast<int>(std::count_if(
      checks.begin(), checks.end(),
      [&](const CheckRecord& c) { return c.verdict == verdict; }));
}

void Report::add_pass_fail(const std::string& quantity, double value, double bound,
                           double slack, double tolerance, bool ok, bool hard_check) {
  checks.push_back({quantity, value, bound, slack, tolerance, ok ? "pass" : "fail",
                    hard_check});
}

void Report::add_info(const std::string& quantity, double value) {
  checks.push_back({quantity, value, 0.0, 0.0, 0.0, "info", false});
}

void Report::add_inconclusive(const std::string& quantity, double value, double bound) {
  checks.push_back({quantity, value, bound, 0.0, 0.0, "inconclusive", false});
}

std::string Report::to_json() const {
  json j;
  j["experiment"] = name;
  j["provenance"] = {{"config_hash", config_hash}, {"seed", seed},
                     {"code_version", code_version}};
  json arr = json::array();
  for (const auto& c : checks) {
    arr.push_back({{"quantity", c.quantity}, {"value", c.value}, {"bound", c.bound},
                   {"slack", c.slack}, {"tolerance", c.tolerance}, {"verdict", c.verdict},
                   {"hard", c.hard}});
  }
  j["checks"] = arr;
  j["pass"] = !any_fail();
  return j.dump(2);
}

void Report::write(const std::string& dir) const {
  std::ofstream out(dir + "/report_" + name + ".json");
  out << to_json() << "\n";
}

std::string summary_markdown(const std::vector<Report>& reports) {
  std::ostringstream os;
  os << "# Verification summary\n\n";
  os << "| experiment | checks | pass | fail | inconclusive | verdict |\n";
  os << "|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    std::string verdict = r.any_fail() ? "FAIL" : (r.count("inconclusive") ? "PASS*" : "PASS");
    os << "| " << r.name << " | " << r.checks.size() << " | " << r.count("pass") << " | "
       << r.count("fail") << " | " << r.count("inconclusive") << " | " << verdict << " |\n";
  }
  os << "\n(*) pass with inconclusive trend rows.\n\n";
  for (const auto& r : reports) {
    os << "## " << r.name << "\n\n";
    os << "| quantity | value | bound | slack | verdict |\n|---|---|---|---|---|\n";
    for (const auto& c : r.checks) {
      os << "| " << c.quantity << " | " << c.value << " | " << c.bound << " | " << c.slack
         << " | " << c.verdict << " |\n";
    }
    os << "\n";
  }
  return os.str();
}

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<PlotSeries>& series, bool logy) {
  const int W = 720, H = 420, ML = 70, MR = 20, MT = 40, MB = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto ty = [&](double y) { return logy ? std::log10(std::max(y, 1e-300)) : y; };
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      xmin = std::min(xmin, s.x[k]);
      xmax = std::max(xmax, s.x[k]);
      ymin = std::min(ymin, ty(s.y[k]));
      ymax = std::max(ymax, ty(s.y[k]));
    }
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  auto px = [&](double x) { return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR); };
  auto py = [&](double y) { return H - MB - (ty(y) - ymin) / (ymax - ymin) * (H - MT - MB); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  std::ofstream out(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  out << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='15'>" << title
      << (logy ? " (log y)" : "") << "</text>\n";
  out << "<line x1='" << ML << "' y1='" << H - MB << "' x2='" << W - MR << "' y2='"
      << H - MB << "' stroke='black'/>\n";
  out << "<line x1='" << ML << "' y1='" << MT << "' x2='" << ML << "' y2='" << H - MB
      << "' stroke='black'/>\n";
  for (int t = 0; t <= 4; ++t) {
    double xv = xmin + t * (xmax - xmin) / 4.0;
    double yv = ymin + t * (ymax - ymin) / 4.0;
    out << "<text x='" << px(xv) << "' y='" << H - MB + 18
        << "' text-anchor='middle' font-size='11'>" << xv << "</text>\n";
    out << "<text x='" << ML - 8 << "' y='" << H - MB - t * (H - MT - MB) / 4.0 + 4
        << "' text-anchor='end' font-size='11'>" << yv << "</text>\n";
  }
  int ci = 0;
  for (const auto& s : series) {
    out << "<polyline fill='none' stroke='" << colors[ci % 8] << "' stroke-width='1.5' points='";
    for (std::size_t k = 0; k < s.x.size(); ++k)
      out << px(s.x[k]) << "," << py(s.y[k]) << " ";
    out << "'/>\n";
    out << "<text x='" << W - MR - 6 << "' y='" << MT + 16 * (ci + 1)
        << "' text-anchor='end' font-size='12' fill='" << colors[ci % 8] << "'>" << s.label
        << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

}  // namespace mixkin
