#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mixkin {

// One verified quantity: pass = (value within bound, up to tolerance),
// recomputable from the stored fields.  Trend checks may return
// "inconclusive" instead of failing on low statistics.
struct CheckRecord {
  std::string quantity;
  double value = 0.0;
  double bound = 0.0;
  double slack = 0.0;      // sign convention: >= 0 is the good side
  double tolerance = 0.0;
  std::string verdict;     // pass | fail | inconclusive | info
  bool hard = false;
};

struct Report {
  std::string name;
  std::vector<CheckRecord> checks;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string code_version;

  bool any_fail() const;
  bool any_hard_fail() const;
  int count(const std::string& verdict) const;

  void add_pass_fail(const std::string& quantity, double value, double bound, double slack,
                     double tolerance, bool ok, bool hard_check);
  void add_info(const std::string& quantity, double value);
  void add_inconclusive(const std::string& quantity, double value, double bound);

  std::string to_json() const;
  void write(const std::string& dir) const;  // report_<name>.json
};

// summary.md table over a set of reports.
std::string summary_markdown(const std::vector<Report>& reports);

// Minimal SVG polyline plot; one file per plot.
struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::vector<PlotSeries>& series, bool logy = false);

}  // namespace mixkin
