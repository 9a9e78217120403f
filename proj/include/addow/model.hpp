#pragma once
// Grouped p-value data, rejection sets, and the FDP / power metrics.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace addow {

// Labels: 0 = true null, 1 = alternative.
struct GroupedPValues {
  std::vector<std::string> names;                 // group keys, first-appearance order
  std::vector<std::vector<double>> pvalues;       // one array per group
  std::vector<std::vector<std::uint8_t>> labels;  // empty when the data is unlabeled

  std::size_t n_groups() const { return pvalues.size(); }
  std::size_t group_size(std::size_t g) const { return pvalues[g].size(); }
  std::size_t total() const {
    std::size_t m = 0;
    for (const auto& p : pvalues) m += p.size();
    return m;
  }
  bool labeled() const { return !labels.empty(); }

  void validate() const {
    if (pvalues.empty()) throw std::invalid_argument("dataset: needs at least one group");
    if (names.size() != pvalues.size()) throw std::invalid_argument("dataset: name/group mismatch");
    if (!labels.empty() && labels.size() != pvalues.size())
      throw std::invalid_argument("dataset: label/group mismatch");
    for (std::size_t g = 0; g < pvalues.size(); ++g) {
      if (pvalues[g].empty()) throw std::invalid_argument("dataset: empty group " + names[g]);
      for (double p : pvalues[g])
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("dataset: p-value out of [0,1]");
      if (!labels.empty() && labels[g].size() != pvalues[g].size())
        throw std::invalid_argument("dataset: label array length mismatch in group " + names[g]);
    }
  }
};

struct RejectionSet {
  std::vector<std::vector<std::uint32_t>> by_group;  // ascending indices within each group

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& ix : by_group) n += ix.size();
    return n;
  }
};

struct MetricSample {
  double fdp = 0.0;
  double power = 0.0;           // |R ∩ H1| / m
  std::size_t rejections = 0;
};

namespace detail {

inline void require_labels(const GroupedPValues& data) {
  if (!data.labeled()) throw std::invalid_argument("metric: dataset has no ground-truth labels");
}

}  // namespace detail

// False discovery proportion: |R ∩ H0| / max(|R|, 1).
inline double fdp(const RejectionSet& r, const GroupedPValues& data) {
  detail::require_labels(data);
  std::size_t false_count = 0, n = 0;
  for (std::size_t g = 0; g < r.by_group.size(); ++g)
    for (std::uint32_t i : r.by_group[g]) {
      false_count += (data.labels[g][i] == 0);
      ++n;
    }
  return n == 0 ? 0.0 : static_cast<double>(false_count) / static_cast<double>(n);
}

// Realized power with the m denominator: |R ∩ H1| / m.
inline double power_sample(const RejectionSet& r, const GroupedPValues& data) {
  detail::require_labels(data);
  std::size_t true_count = 0;
  for (std::size_t g = 0; g < r.by_group.size(); ++g)
    for (std::uint32_t i : r.by_group[g]) true_count += (data.labels[g][i] == 1);
  return static_cast<double>(true_count) / static_cast<double>(data.total());
}

inline MetricSample metric_sample(const RejectionSet& r, const GroupedPValues& data) {
  return MetricSample{fdp(r, data), power_sample(r, data), r.total()};
}

// Power difference normalized against BH: (m/m1) * (pow_r - pow_bh).
inline double diff_pow(double pow_r, double pow_bh, std::size_t m, std::size_t m1) {
  if (m1 == 0) throw std::invalid_argument("diff_pow: no alternatives (m1 = 0)");
  return (static_cast<double>(m) / static_cast<double>(m1)) * (pow_r - pow_bh);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i)
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  return out;
}

inline double parse_double(std::string_view tok, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw std::invalid_argument("csv line " + std::to_string(line_no) + ": malformed number '" +
                                std::string(tok) + "'");
  return v;
}

}  // namespace detail

// CSV with header `group,pvalue[,label]`; group keys map to indices in
// first-appearance order, label is 0/1 and must be present for all rows or none.
inline GroupedPValues load_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty file");
  const auto header = detail::split_csv(line);
  const bool labeled = header.size() == 3 && header[2] == "label";
  if (!(header.size() == 2 || labeled) || header[0] != "group" || header[1] != "pvalue")
    throw std::invalid_argument("csv: expected header 'group,pvalue[,label]'");

  GroupedPValues data;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t line_no = 1, rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != header.size())
      throw std::invalid_argument("csv line " + std::to_string(line_no) +
                                  (labeled ? ": mixed labeled/unlabeled rows" : ": wrong field count"));
    const std::string key{fields[0]};
    auto [it, inserted] = index.try_emplace(key, data.pvalues.size());
    if (inserted) {
      data.names.push_back(key);
      data.pvalues.emplace_back();
      if (labeled) data.labels.emplace_back();
    }
    const double p = detail::parse_double(fields[1], line_no);
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("csv line " + std::to_string(line_no) + ": p-value out of [0,1]");
    data.pvalues[it->second].push_back(p);
    if (labeled) {
      if (fields[2] != "0" && fields[2] != "1")
        throw std::invalid_argument("csv line " + std::to_string(line_no) + ": label must be 0 or 1");
      data.labels[it->second].push_back(fields[2] == "1" ? 1 : 0);
    }
    ++rows;
  }
  if (rows == 0) throw std::invalid_argument("csv: no data rows");
  data.validate();
  return data;
}

inline void save_dataset(const GroupedPValues& data, std::ostream& out) {
  out << (data.labeled() ? "group,pvalue,label\n" : "group,pvalue\n");
  out.precision(17);
  for (std::size_t g = 0; g < data.n_groups(); ++g)
    for (std::size_t i = 0; i < data.pvalues[g].size(); ++i) {
      out << data.names[g] << ',' << data.pvalues[g][i];
      if (data.labeled()) out << ',' << static_cast<int>(data.labels[g][i]);
      out << '\n';
    }
}

// Per-group ascending order with the original indices; shared by every
// procedure touching the same dataset so each replication sorts once.
struct SortedPValues {
  std::vector<std::vector<double>> values;
  std::vector<std::vector<std::uint32_t>> order;  // order[g][j] = original index of values[g][j]
  std::vector<double> pooled;                     // all p-values, ascending
  std::size_t m = 0;

  explicit SortedPValues(const GroupedPValues& data) {
    data.validate();
    const std::size_t G = data.n_groups();
    values.resize(G);
    order.resize(G);
    for (std::size_t g = 0; g < G; ++g) {
      const auto& p = data.pvalues[g];
      order[g].resize(p.size());
      std::iota(order[g].begin(), order[g].end(), 0u);
      std::stable_sort(order[g].begin(), order[g].end(),
                       [&p](std::uint32_t a, std::uint32_t b) { return p[a] < p[b]; });
      values[g].resize(p.size());
      for (std::size_t j = 0; j < p.size(); ++j) values[g][j] = p[order[g][j]];
      m += p.size();
    }
    pooled.reserve(m);
    for (const auto& v : values) pooled.insert(pooled.end(), v.begin(), v.end());
    std::sort(pooled.begin(), pooled.end());
  }

  std::size_t n_groups() const { return values.size(); }
  std::size_t group_size(std::size_t g) const { return values[g].size(); }

  // #{p_{g,i} <= t}
  std::size_t count_leq(std::size_t g, double t) const {
    return std::upper_bound(values[g].begin(), values[g].end(), t) - values[g].begin();
  }

  // k-th smallest of group g (1-based); 0.0 for k = 0.
  double order_stat(std::size_t g, std::size_t k) const { return k == 0 ? 0.0 : values[g][k - 1]; }

  RejectionSet take_smallest(const std::vector<std::size_t>& counts) const {
    RejectionSet r;
    r.by_group.resize(values.size());
    for (std::size_t g = 0; g < values.size(); ++g) {
      r.by_group[g].assign(order[g].begin(), order[g].begin() + counts[g]);
      std::sort(r.by_group[g].begin(), r.by_group[g].end());
    }
    return r;
  }
};

}  // namespace addow
