#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "hacklab/diagnostics.hpp"
#include "hacklab/trainer.hpp"

namespace hacklab::app {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

namespace {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

std::vector<json> read_metrics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SeriesError("cannot read " + path.string());
  std::vector<json> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error&) {
      throw SeriesError(path.string() + ": malformed line " + std::to_string(rows.size() + 1));
    }
  }
  if (rows.empty()) throw SeriesError(path.string() + ": no records");
  return rows;
}

// Values of `field` at each row; NaN where the row has null.
std::vector<double> column(const std::vector<json>& rows, const std::string& field) {
  std::vector<double> out;
  bool any = false;
  for (const auto& r : rows) {
    const auto it = r.find(field);
    if (it == r.end()) throw SeriesError("missing series '" + field + "'");
    if (it->is_number()) {
      out.push_back(it->get<double>());
      any = true;
    } else if (it->is_boolean()) {
      out.push_back(it->get<bool>() ? 1.0 : 0.0);
      any = true;
    } else {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  if (!any) throw SeriesError("series '" + field + "' has no values");
  return out;
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string svg(const std::vector<Series>& series, bool scatter, const std::string& xlabel, const std::string& title) {
  const double W = 640, H = 400, L = 60, R = 20, T = 30, B = 50;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || !std::isfinite(s.x[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  const auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << L << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" font-family=\"sans-serif\" font-size=\"12\">"
    << xlabel << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 4.0, yv = ymin + (ymax - ymin) * k / 4.0;
    o << "<text x=\"" << px(xv) - 10 << "\" y=\"" << H - B + 16 << "\" font-family=\"sans-serif\" font-size=\"10\">"
      << format_number(xv) << "</text>\n";
    o << "<text x=\"4\" y=\"" << py(yv) + 4 << "\" font-family=\"sans-serif\" font-size=\"10\">" << format_number(yv)
      << "</text>\n";
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kColors[si % 5];
    if (scatter) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i]) || !std::isfinite(s.x[i])) continue;
        o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      }
    } else {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        o << px(s.x[i]) << "," << py(s.y[i]) << " ";
      }
      o << "\"/>\n";
    }
    o << "<text x=\"" << W - R - 150 << "\" y=\"" << T + 14 * (si + 1) << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
      << color << "\">" << s.name << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::size_t traces(const std::vector<fs::path>& inputs, const PlotOptions& opt, const fs::path& out) {
  if (inputs.size() != 1) throw SeriesError("traces takes exactly one metrics file");
  const auto rows = read_metrics(inputs.front());
  const std::vector<std::string> names =
      opt.series.empty() ? std::vector<std::string>{"proxy_reward", "gold_reward", "grad_norm"} : opt.series;
  const std::vector<double> steps = column(rows, "step");
  std::vector<Series> series;
  for (const auto& n : names) series.push_back({n, steps, column(rows, n)});
  std::ostringstream csv;
  csv << "step";
  for (const auto& n : names) csv << "," << n;
  csv << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    csv << format_number(steps[i]);
    for (const auto& s : series) csv << "," << format_number(s.y[i]);
    csv << "\n";
  }
  write_file(out.string() + ".csv", csv.str());
  write_file(out.string() + ".svg", svg(series, false, "step", "traces"));
  return rows.size();
}

struct FrontierPoint {
  double kl;
  double gold;
  std::string source;
};

void read_sweep_csv(const fs::path& path, std::vector<FrontierPoint>& pts) {
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  std::vector<std::string> cols;
  {
    std::stringstream hs(header);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  const auto idx = [&](const std::string& name) {
    const auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) throw SeriesError("missing series '" + name + "' in " + path.string());
    return static_cast<std::size_t>(it - cols.begin());
  };
  const std::size_t ik = idx("final_kl_to_init"), ig = idx("final_gold"), iv = idx("value");
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) f.push_back(c);
    if (f.size() < cols.size()) continue;
    const double kl = std::strtod(f[ik].c_str(), nullptr), gold = std::strtod(f[ig].c_str(), nullptr);
    if (!std::isfinite(kl) || !std::isfinite(gold)) continue;
    pts.push_back({kl, gold, "value=" + f[iv]});
  }
}

std::size_t frontier(const std::vector<fs::path>& inputs, const fs::path& out) {
  std::vector<FrontierPoint> pts;
  for (const auto& in : inputs) {
    if (in.extension() == ".csv") {
      read_sweep_csv(in, pts);
      continue;
    }
    const fs::path summary = fs::is_directory(in) ? in / "summary.json" : in;
    std::ifstream f(summary);
    if (!f) throw SeriesError("cannot read " + summary.string());
    const json j = json::parse(f);
    if (!j.contains("final_kl_to_init")) throw SeriesError("missing series 'final_kl_to_init' in " + summary.string());
    if (!j.contains("final_gold")) throw SeriesError("missing series 'final_gold' in " + summary.string());
    pts.push_back({j["final_kl_to_init"].get<double>(), j["final_gold"].get<double>(), in.string()});
  }
  if (pts.empty()) throw SeriesError("no frontier points");
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.kl < b.kl; });
  std::ostringstream csv;
  csv << "final_kl_to_init,final_gold,source\n";
  Series s{"gold vs KL", {}, {}};
  for (const auto& p : pts) {
    csv << format_number(p.kl) << "," << format_number(p.gold) << "," << p.source << "\n";
    s.x.push_back(p.kl);
    s.y.push_back(p.gold);
  }
  write_file(out.string() + ".csv", csv.str());
  write_file(out.string() + ".svg", svg({s}, true, "KL to initial policy", "gold vs KL"));
  return pts.size();
}

std::size_t correlation(const std::vector<fs::path>& inputs, const PlotOptions& opt, const fs::path& out) {
  if (inputs.size() != 1) throw SeriesError("correlation takes exactly one metrics file");
  const auto rows = read_metrics(inputs.front());
  std::vector<std::string> names = opt.series.empty() ? std::vector<std::string>{"grad_norm", "bt_loss"} : opt.series;
  if (names.size() != 2) throw SeriesError("correlation needs exactly two series");
  const auto steps = column(rows, "step");
  const auto a = column(rows, names[0]);
  const auto b = column(rows, names[1]);
  std::int64_t from = std::numeric_limits<std::int64_t>::min();
  if (opt.post_peak) {
    std::vector<RunRecord> recs;
    for (const auto& r : rows) recs.push_back(record_from_json(r.dump()));
    from = summarize(recs).peak_step;
  }
  std::vector<double> xs, ys, ss;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (steps[i] < static_cast<double>(from) || !std::isfinite(a[i]) || !std::isfinite(b[i])) continue;
    ss.push_back(steps[i]);
    xs.push_back(a[i]);
    ys.push_back(b[i]);
  }
  double r = std::numeric_limits<double>::quiet_NaN();
  try {
    r = correlate(xs, ys);
  } catch (const std::exception&) {
  }
  std::ostringstream csv;
  csv << "# pearson=" << format_number(r) << "\n";
  csv << "step," << names[0] << "," << names[1] << "\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    csv << format_number(ss[i]) << "," << format_number(xs[i]) << "," << format_number(ys[i]) << "\n";
  write_file(out.string() + ".csv", csv.str());
  write_file(out.string() + ".svg", svg({{names[1] + " vs " + names[0], xs, ys}}, true, names[0],
                                        "pearson = " + format_number(r)));
  return xs.size();
}

}  // namespace

std::size_t make_plot(const std::vector<fs::path>& inputs, const PlotOptions& opt, const fs::path& out) {
  if (inputs.empty()) throw SeriesError("no inputs");
  switch (opt.kind) {
    case PlotKind::traces: return traces(inputs, opt, out);
    case PlotKind::frontier: return frontier(inputs, out);
    case PlotKind::correlation: return correlation(inputs, opt, out);
  }
  return 0;
}

}  // namespace hacklab::app
