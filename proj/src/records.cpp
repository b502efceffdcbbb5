#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include "mrisk/errors.hpp"
#include "mrisk/simlab.hpp"

namespace mrisk {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

double parse_double(std::string_view cell) {
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    throw InvalidParameter("records csv: bad number '" + std::string(cell) + "'");
  return v;
}

}  // namespace

const std::vector<std::string>& record_columns() {
  static const std::vector<std::string> cols{"seed",  "rep_index", "n",       "p",       "gamma",
                                             "lambda", "R",        "R_hat",   "alpha_sq", "trace_v",
                                             "wall_time_ms", "variant", "selected"};
  return cols;
}

void write_records_csv(std::ostream& os, const std::vector<ExperimentRecord>& records,
                       bool include_wall_time) {
  const auto& cols = record_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : records) {
    os << r.seed << ',' << r.rep_index << ',' << r.n << ',' << r.p << ',' << fmt(r.gamma) << ','
       << fmt(r.lambda) << ',' << fmt(r.failed ? nan : r.R) << ',' << fmt(r.failed ? nan : r.R_hat) << ','
       << (r.alpha_sq ? fmt(*r.alpha_sq) : std::string()) << ',' << fmt(r.failed ? nan : r.trace_v) << ','
       << fmt(include_wall_time ? r.wall_time_ms : 0.0) << ',' << r.variant << ',' << (r.selected ? 1 : 0)
       << '\n';
  }
}

void write_records_csv_atomic(const std::string& path, const std::vector<ExperimentRecord>& records) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw InvalidParameter("cannot write '" + tmp.string() + "'");
    write_records_csv(out, records);
    out.flush();
    if (!out) throw InvalidParameter("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

std::vector<ExperimentRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw InvalidParameter("'" + path + "' is empty");
  std::vector<std::string> header;
  {
    std::size_t start = 0;
    while (true) {
      auto end = line.find(',', start);
      header.push_back(line.substr(start, end == std::string::npos ? std::string::npos : end - start));
      if (end == std::string::npos) break;
      start = end + 1;
    }
  }
  if (header != record_columns()) throw InvalidParameter("'" + path + "' does not have the record schema");
  std::vector<ExperimentRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      auto end = line.find(',', start);
      cells.emplace_back(line.data() + start, (end == std::string::npos ? line.size() : end) - start);
      if (end == std::string::npos) break;
      start = end + 1;
    }
    if (cells.size() != header.size()) throw InvalidParameter("'" + path + "': ragged row");
    ExperimentRecord r;
    std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), r.seed);
    r.rep_index = static_cast<int>(parse_double(cells[1]));
    r.n = static_cast<int>(parse_double(cells[2]));
    r.p = static_cast<int>(parse_double(cells[3]));
    r.gamma = parse_double(cells[4]);
    r.lambda = parse_double(cells[5]);
    r.R = parse_double(cells[6]);
    r.R_hat = parse_double(cells[7]);
    if (!cells[8].empty()) r.alpha_sq = parse_double(cells[8]);
    r.trace_v = parse_double(cells[9]);
    r.wall_time_ms = parse_double(cells[10]);
    r.variant = std::string(cells[11]);
    r.selected = cells[12] == "1";
    r.failed = std::isnan(r.R);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records) {
  std::map<std::pair<std::string, double>, std::vector<const ExperimentRecord*>> groups;
  std::vector<std::pair<std::string, double>> order;
  for (const auto& r : records) {
    auto key = std::make_pair(r.variant, r.lambda);
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    std::vector<double> rel, rs, rhats;
    for (const auto* r : groups[key]) {
      if (r->failed || !std::isfinite(r->R_hat) || !(r->R > 0.0)) continue;
      rel.push_back(std::abs(r->R_hat / r->R - 1.0));
      rs.push_back(r->R);
      rhats.push_back(r->R_hat);
    }
    SummaryRow row;
    row.variant = key.first;
    row.lambda = key.second;
    row.count = static_cast<int>(rel.size());
    std::sort(rel.begin(), rel.end());
    row.median_rel_err = quantile_sorted(rel, 0.5);
    row.iqr_rel_err = quantile_sorted(rel, 0.75) - quantile_sorted(rel, 0.25);
    row.median_R = median(rs);
    row.median_R_hat = median(rhats);
    out.push_back(row);
  }
  return out;
}

std::vector<TuningSummaryRow> summarize_tuning(const std::vector<ExperimentRecord>& records) {
  // variant -> (seed -> rows of that dataset)
  std::map<std::string, std::map<std::uint64_t, std::vector<const ExperimentRecord*>>> groups;
  std::vector<std::string> order;
  for (const auto& r : records) {
    if (!groups.count(r.variant)) order.push_back(r.variant);
    groups[r.variant][r.seed].push_back(&r);
  }
  std::vector<TuningSummaryRow> out;
  for (const auto& variant : order) {
    std::vector<double> excess, selected, minimum;
    double min_alpha = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [seed, rows] : groups[variant]) {
      double best = std::numeric_limits<double>::infinity();
      double chosen = std::numeric_limits<double>::quiet_NaN();
      for (const auto* r : rows) {
        if (r->failed) continue;
        best = std::min(best, r->R);
        if (r->selected) chosen = r->R;
        if (r->alpha_sq && !(*r->alpha_sq >= min_alpha)) min_alpha = *r->alpha_sq;
      }
      if (std::isnan(chosen) || !std::isfinite(best) || !(best > 0.0)) continue;
      excess.push_back(chosen / best - 1.0);
      selected.push_back(chosen);
      minimum.push_back(best);
    }
    TuningSummaryRow row;
    row.variant = variant;
    row.count = static_cast<int>(excess.size());
    row.median_excess = median(excess);
    row.median_R_selected = median(selected);
    row.median_R_min = median(minimum);
    row.min_alpha_sq = min_alpha;
    out.push_back(row);
  }
  return out;
}

}  // namespace mrisk
