#include "alref/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "alref/error.hpp"

namespace alref {

namespace {

constexpr char kCsvHeader[] =
    "repeat,fold,cycle,strategy,accuracy,acquisition_rate,newly_refined,seconds";

double metric_of(const CycleRecord& r, Metric m) {
  return m == Metric::kAccuracy ? r.accuracy : r.acquisition_rate;
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* color_of(StrategyKind s) {
  switch (s) {
    case StrategyKind::kRS: return "#7f7f7f";
    case StrategyKind::kCS: return "#1f77b4";
    case StrategyKind::kUS: return "#ff7f0e";
  }
  return "#000000";
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(c - 'a' + 'A');
  return out;
}

template <class T>
T parse_number(std::string_view field, int line) {
  T v{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw FormatError("results CSV line " + std::to_string(line) + ": bad number '" +
                      std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::vector<CurveSeries> aggregate(std::span<const CycleRecord> records, Metric metric) {
  if (records.empty()) throw FormatError("aggregate: no records");

  // strategy -> cycle -> sorted (repeat, fold, value); the sort fixes the
  // summation order so the result is independent of input order.
  std::map<StrategyKind, std::map<int, std::vector<std::tuple<int, int, double>>>> groups;
  std::map<StrategyKind, std::map<std::pair<int, int>, std::set<int>>> coverage;
  for (const auto& r : records) {
    groups[r.strategy][r.cycle].emplace_back(r.repeat, r.fold, metric_of(r, metric));
    if (!coverage[r.strategy][{r.repeat, r.fold}].insert(r.cycle).second) {
      throw FormatError("aggregate: duplicate record for strategy " +
                        std::string(to_string(r.strategy)) + " repeat " +
                        std::to_string(r.repeat) + " fold " + std::to_string(r.fold) +
                        " cycle " + std::to_string(r.cycle));
    }
  }

  std::vector<CurveSeries> out;
  for (auto& [strategy, by_cycle] : groups) {
    const auto& cov = coverage[strategy];
    const auto& reference = cov.begin()->second;
    const bool contiguous = *reference.begin() == 0 &&
                            *reference.rbegin() == static_cast<int>(reference.size()) - 1;
    const bool homogeneous = std::all_of(cov.begin(), cov.end(),
                                         [&](const auto& kv) { return kv.second == reference; });
    if (!contiguous || !homogeneous) {
      throw FormatError("aggregate: ragged cycle range for strategy " +
                        std::string(to_string(strategy)));
    }
    CurveSeries s;
    s.strategy = strategy;
    for (auto& [cycle, values] : by_cycle) {
      std::sort(values.begin(), values.end());
      const auto n = static_cast<double>(values.size());
      double sum = 0.0;
      for (const auto& v : values) sum += std::get<2>(v);
      const double mean = sum / n;
      double se = 0.0;
      if (values.size() > 1) {
        double ss = 0.0;
        for (const auto& v : values) ss += (std::get<2>(v) - mean) * (std::get<2>(v) - mean);
        se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
      }
      s.cycles.push_back(cycle);
      s.mean.push_back(mean);
      s.std_error.push_back(se);
    }
    double total = 0.0;
    for (double m : s.mean) total += m;
    s.legend_mean = total / static_cast<double>(s.mean.size());
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_legend_mean(double v) { return fmt("%.4f", v); }

std::string render_svg(std::span<const CurveSeries> series, std::string_view metric_label) {
  if (series.empty()) throw FormatError("render_svg: no series");

  constexpr double kWidth = 640, kHeight = 400;
  constexpr double kLeft = 70, kRight = 170, kTop = 30, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  int max_cycle = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : series) {
    if (s.cycles.empty()) throw FormatError("render_svg: empty series");
    max_cycle = std::max(max_cycle, s.cycles.back());
    for (std::size_t k = 0; k < s.mean.size(); ++k) {
      lo = std::min(lo, s.mean[k] - s.std_error[k]);
      hi = std::max(hi, s.mean[k] + s.std_error[k]);
    }
  }
  if (hi - lo < 1e-9) {
    lo -= 0.5e-2;
    hi += 0.5e-2;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double x_span = std::max(1, max_cycle);

  auto px = [&](double cycle) { return kLeft + plot_w * cycle / x_span; };
  auto py = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";

  // Axes.
  svg << "<g stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
      << "\" y2=\"" << kTop + plot_h << "\"/>\n"
      << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kTop + plot_h << "\"/>\n</g>\n";

  svg << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  const int x_step = max_cycle <= 20 ? 1 : (max_cycle <= 50 ? 5 : 10);
  for (int c = 0; c <= max_cycle; c += x_step) {
    const auto x = fmt("%.2f", px(c));
    svg << "<line x1=\"" << x << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << x << "\" y2=\""
        << kTop + plot_h + 4 << "\" stroke=\"black\"/>"
        << "<text x=\"" << x << "\" y=\"" << kTop + plot_h + 16 << "\" text-anchor=\"middle\">"
        << c << "</text>\n";
  }
  constexpr int kYTicks = 5;
  for (int t = 0; t <= kYTicks; ++t) {
    const double v = lo + (hi - lo) * t / kYTicks;
    const auto y = fmt("%.2f", py(v));
    svg << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\""
        << y << "\" stroke=\"black\"/>"
        << "<text x=\"" << kLeft - 6 << "\" y=\"" << y
        << "\" text-anchor=\"end\" dominant-baseline=\"middle\">" << fmt("%.3f", v)
        << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\">active learning cycle</text>\n"
      << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + plot_h / 2 << ")\">" << xml_escape(metric_label) << "</text>\n</g>\n";

  for (const auto& s : series) {
    const char* color = color_of(s.strategy);
    std::string band, line;
    for (std::size_t k = 0; k < s.cycles.size(); ++k) {
      band += fmt("%.2f", px(s.cycles[k])) + "," + fmt("%.2f", py(s.mean[k] + s.std_error[k])) + " ";
      line += fmt("%.2f", px(s.cycles[k])) + "," + fmt("%.2f", py(s.mean[k])) + " ";
    }
    for (std::size_t k = s.cycles.size(); k-- > 0;) {
      band += fmt("%.2f", px(s.cycles[k])) + "," + fmt("%.2f", py(s.mean[k] - s.std_error[k])) + " ";
    }
    band.pop_back();
    line.pop_back();
    svg << "<polygon class=\"stderr-band\" data-strategy=\"" << to_string(s.strategy)
        << "\" points=\"" << band << "\" fill=\"" << color
        << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n"
        << "<polyline class=\"mean\" data-strategy=\"" << to_string(s.strategy) << "\" points=\""
        << line << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
  }

  svg << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double y = kTop + 10 + 20.0 * static_cast<double>(k);
    const double x = kLeft + plot_w + 15;
    svg << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 20 << "\" y2=\"" << y
        << "\" stroke=\"" << color_of(series[k].strategy) << "\" stroke-width=\"2\"/>"
        << "<text x=\"" << x + 26 << "\" y=\"" << y << "\" dominant-baseline=\"middle\">"
        << upper(to_string(series[k].strategy)) << " (" << format_legend_mean(series[k].legend_mean)
        << ")</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

std::string records_to_csv(std::span<const CycleRecord> records, bool include_timing) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.repeat) + ',' + std::to_string(r.fold) + ',' +
           std::to_string(r.cycle) + ',' + std::string(to_string(r.strategy)) + ',' +
           shortest(r.accuracy) + ',' + shortest(r.acquisition_rate) + ',' +
           std::to_string(r.newly_refined) + ',' + (include_timing ? shortest(r.seconds) : "0") +
           '\n';
  }
  return out;
}

std::vector<CycleRecord> records_from_csv(std::string_view text) {
  std::vector<CycleRecord> out;
  std::size_t pos = 0;
  int line_no = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kCsvHeader) throw FormatError("results CSV: unexpected header");
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t p = 0;
    while (true) {
      const auto comma = line.find(',', p);
      fields.push_back(line.substr(p, comma == std::string_view::npos ? line.npos : comma - p));
      if (comma == std::string_view::npos) break;
      p = comma + 1;
    }
    if (fields.size() != 8) {
      throw FormatError("results CSV line " + std::to_string(line_no) + ": expected 8 fields");
    }
    CycleRecord r;
    r.repeat = parse_number<int>(fields[0], line_no);
    r.fold = parse_number<int>(fields[1], line_no);
    r.cycle = parse_number<int>(fields[2], line_no);
    const auto s = parse_strategy(fields[3]);
    if (!s) throw FormatError("results CSV line " + std::to_string(line_no) + ": bad strategy");
    r.strategy = *s;
    r.accuracy = parse_number<double>(fields[4], line_no);
    r.acquisition_rate = parse_number<double>(fields[5], line_no);
    r.newly_refined = parse_number<std::size_t>(fields[6], line_no);
    r.seconds = parse_number<double>(fields[7], line_no);
    out.push_back(r);
  }
  if (!header_seen) throw FormatError("results CSV: empty input");
  return out;
}

std::vector<SummaryRow> summarize(std::span<const CycleRecord> records) {
  const auto acc = aggregate(records, Metric::kAccuracy);
  const auto acq = aggregate(records, Metric::kAcquisitionRate);
  std::vector<SummaryRow> rows;
  for (std::size_t k = 0; k < acc.size(); ++k) {
    rows.push_back({acc[k].strategy, acc[k].legend_mean, acc[k].mean.back(), acq[k].mean.back()});
  }
  return rows;
}

std::string summary_to_csv(std::span<const SummaryRow> rows) {
  std::string out = "strategy,legend_mean_accuracy,final_accuracy,final_acquisition_rate\n";
  for (const auto& r : rows) {
    out += std::string(to_string(r.strategy)) + ',' + shortest(r.legend_mean_accuracy) + ',' +
           shortest(r.final_accuracy) + ',' + shortest(r.final_acquisition_rate) + '\n';
  }
  return out;
}

}  // namespace alref
