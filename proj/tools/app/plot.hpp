#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace hacklab::app {

// A requested series is absent or never observed.
class SeriesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PlotKind { traces, frontier, correlation };

struct PlotOptions {
  PlotKind kind = PlotKind::traces;
  std::vector<std::string> series;  // empty: the kind's default
  bool post_peak = false;           // correlation: only steps from the gold peak on
};

// Writes <out>.csv (normative) and <out>.svg. Inputs are metrics.jsonl
// files for traces/correlation; run directories, summary.json files or a
// sweep.csv for frontier. Returns the number of data rows written.
std::size_t make_plot(const std::vector<std::filesystem::path>& inputs, const PlotOptions& opt,
                      const std::filesystem::path& out);

std::string format_number(double x);

}  // namespace hacklab::app
