#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctp/bounds.hpp"
#include "ctp/closure.hpp"
#include "ctp/constraints.hpp"
#include "ctp/covariance.hpp"
#include "ctp/errors.hpp"
#include "ctp/family.hpp"
#include "ctp/permutation.hpp"
#include "ctp/subset.hpp"

namespace ctp {

using json = nlohmann::ordered_json;

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.erase(f.begin());
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.pop_back();
  }
  return fields;
}

inline bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && !s.empty();
}

inline bool parse_int(const std::string& s, long& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && !s.empty();
}

inline std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return in;
}

inline std::string format_p(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", p);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV inputs
// ---------------------------------------------------------------------------

struct PValueRecord {
  std::string id;
  double p;
};

/// Elementary p-values as CSV rows `id,p`. A header row is skipped when its
/// second field is not numeric.
inline std::vector<PValueRecord> read_pvalue_csv(std::istream& in,
                                                 const std::string& name = "<input>") {
  std::vector<PValueRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 2)
      throw ParseError(name, lineno, "expected 2 columns (id, p), got " +
                                         std::to_string(fields.size()));
    double p = 0.0;
    if (!detail::parse_double(fields[1], p)) {
      if (lineno == 1 && out.empty()) continue;  // header row
      throw ParseError(name, lineno, "p-value '" + fields[1] + "' is not numeric");
    }
    if (!(p >= 0.0) || p > 1.0)
      throw ParseError(name, lineno, "p-value " + fields[1] + " outside [0,1]");
    out.push_back({fields[0], p});
  }
  if (out.empty()) throw ParseError(name, lineno, "no p-value rows");
  return out;
}

inline std::vector<PValueRecord> read_pvalue_csv_file(const std::string& path) {
  auto in = detail::open_or_throw(path);
  return read_pvalue_csv(in, path);
}

/// Dense correlation matrix, one CSV row per matrix row.
inline CovarianceMatrix read_covariance_csv(std::istream& in,
                                            const std::string& name = "<cov>") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      double v = 0.0;
      if (!detail::parse_double(f, v))
        throw ParseError(name, lineno, "entry '" + f + "' is not numeric");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(name, lineno, "ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(name, lineno, "no matrix rows");
  if (rows.size() != rows.front().size())
    throw ParseError(name, lineno, "matrix is not square");
  const int dim = static_cast<int>(rows.size());
  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(dim) * dim);
  for (const auto& r : rows) entries.insert(entries.end(), r.begin(), r.end());
  return CovarianceMatrix(dim, std::move(entries));
}

inline CovarianceMatrix read_covariance_csv_file(const std::string& path) {
  auto in = detail::open_or_throw(path);
  return read_covariance_csv(in, path);
}

/// Two-group data: first column is the group label (exactly two distinct
/// values; first label seen = group A), remaining columns are variables.
inline TwoGroupDataset read_dataset_csv(std::istream& in,
                                        const std::string& name = "<data>") {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> labels;
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() < 2)
      throw ParseError(name, lineno, "expected a group label plus >= 1 variable");
    std::vector<double> vals;
    vals.reserve(fields.size() - 1);
    bool numeric = true;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      double v = 0.0;
      if (!detail::parse_double(fields[i], v)) {
        numeric = false;
        break;
      }
      vals.push_back(v);
    }
    if (!numeric) {
      if (lineno == 1 && rows.empty()) {
        labels.assign(fields.begin() + 1, fields.end());
        continue;
      }
      throw ParseError(name, lineno, "non-numeric variable value");
    }
    if (!rows.empty() && vals.size() != rows.front().second.size())
      throw ParseError(name, lineno, "ragged row");
    rows.emplace_back(fields[0], std::move(vals));
  }
  if (rows.empty()) throw ParseError(name, lineno, "no data rows");

  const std::string group_a = rows.front().first;
  std::string group_b;
  for (const auto& [g, vals] : rows) {
    if (g == group_a) continue;
    if (group_b.empty()) group_b = g;
    else if (g != group_b)
      throw ParseError(name, 0, "more than two group labels");
  }
  if (group_b.empty()) throw ParseError(name, 0, "only one group label present");

  const int m = static_cast<int>(rows.front().second.size());
  int na = 0, nb = 0;
  for (const auto& [g, vals] : rows) (g == group_a ? na : nb)++;
  std::vector<double> a(static_cast<std::size_t>(na) * m);
  std::vector<double> b(static_cast<std::size_t>(nb) * m);
  int ia = 0, ib = 0;
  for (const auto& [g, vals] : rows) {
    if (g == group_a) {
      for (int v = 0; v < m; ++v)
        a[static_cast<std::size_t>(v) * na + ia] = vals[static_cast<std::size_t>(v)];
      ++ia;
    } else {
      for (int v = 0; v < m; ++v)
        b[static_cast<std::size_t>(v) * nb + ib] = vals[static_cast<std::size_t>(v)];
      ++ib;
    }
  }
  return TwoGroupDataset(na, nb, m, std::move(a), std::move(b), std::move(labels));
}

inline TwoGroupDataset read_dataset_csv_file(const std::string& path) {
  auto in = detail::open_or_throw(path);
  return read_dataset_csv(in, path);
}

/// Equality constraints as CSV rows `hypothesis_id,left_param,right_param`
/// (1-based parameter indices). Every id in `labels` must appear exactly
/// once. Returns the family with the equality structure attached.
inline HypothesisFamily read_constraints_csv(std::istream& in,
                                             std::vector<std::string> labels,
                                             const std::string& name = "<constraints>") {
  std::map<std::string, std::pair<long, long>> by_id;
  std::string line;
  std::size_t lineno = 0;
  long max_param = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 3)
      throw ParseError(name, lineno,
                       "expected 3 columns (hypothesis_id, left_param, right_param)");
    long left = 0, right = 0;
    if (!detail::parse_int(fields[1], left) || !detail::parse_int(fields[2], right)) {
      if (lineno == 1 && by_id.empty()) continue;  // header row
      throw ParseError(name, lineno, "parameter indices must be integers");
    }
    if (left < 1 || right < 1)
      throw ParseError(name, lineno, "parameter indices are 1-based");
    if (left == right)
      throw ParseError(name, lineno, "equality of a parameter with itself");
    if (!by_id.emplace(fields[0], std::make_pair(left, right)).second)
      throw ParseError(name, lineno, "duplicate hypothesis id '" + fields[0] + "'");
    max_param = std::max({max_param, left, right});
  }
  std::vector<HypothesisFamily::Equality> eq;
  eq.reserve(labels.size());
  for (const auto& id : labels) {
    const auto it = by_id.find(id);
    if (it == by_id.end())
      throw ParseError(name, 0, "no constraint row for hypothesis '" + id + "'");
    eq.push_back({static_cast<int>(it->second.first - 1),
                  static_cast<int>(it->second.second - 1)});
  }
  return HypothesisFamily(std::move(labels), std::move(eq),
                          static_cast<int>(max_param));
}

inline HypothesisFamily read_constraints_csv_file(const std::string& path,
                                                  std::vector<std::string> labels) {
  auto in = detail::open_or_throw(path);
  return read_constraints_csv(in, std::move(labels), path);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline json subset_to_json(Subset s) {
  json arr = json::array();
  s.for_each([&](int i) { arr.push_back(i + 1); });
  return arr;
}

inline Subset subset_from_json(const json& arr) {
  std::vector<int> idx;
  for (const auto& v : arr) idx.push_back(v.get<int>() - 1);
  return Subset::from_indices(idx);
}

/// Full lattice: one record per nonempty subset, ordered by cardinality
/// then by mask, so identical inputs serialize byte-identically.
inline json lattice_json(const HypothesisFamily& family, const ClosureTable& table,
                         const AdjustedResult& adjusted,
                         const std::string& test_name,
                         std::optional<std::uint64_t> seed = std::nullopt,
                         std::optional<std::uint64_t> sims = std::nullopt) {
  const int n = table.n();
  json out;
  out["n"] = n;
  json labels = json::array();
  for (const auto& l : family.labels()) labels.push_back(l);
  out["labels"] = labels;
  out["test"] = test_name;
  if (adjusted.alpha()) out["alpha"] = *adjusted.alpha();
  if (seed) out["seed"] = *seed;
  if (sims) out["sims"] = *sims;

  std::vector<std::uint64_t> masks;
  masks.reserve((std::size_t{1} << n) - 1);
  for (std::uint64_t m = 1; m < (std::uint64_t{1} << n); ++m) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(), [](std::uint64_t a, std::uint64_t b) {
    return std::popcount(a) != std::popcount(b) ? std::popcount(a) < std::popcount(b)
                                                : a < b;
  });

  json rows = json::array();
  for (const std::uint64_t m : masks) {
    const Subset s(m);
    json row;
    row["subset"] = subset_to_json(s);
    row["local_p"] = table.local_p(s);
    row["adjusted_p"] = adjusted.adjusted(s);
    if (adjusted.alpha()) row["rejected"] = adjusted.rejected(s);
    rows.push_back(std::move(row));
  }
  out["hypotheses"] = std::move(rows);
  return out;
}

/// Deduplicated lattice under logical constraints.
inline json constrained_lattice_json(const HypothesisFamily& family,
                                     const ConstrainedClosure& closure,
                                     const std::string& test_name,
                                     std::optional<double> alpha,
                                     std::optional<std::uint64_t> seed = std::nullopt,
                                     std::optional<std::uint64_t> sims = std::nullopt) {
  json out;
  out["n"] = family.size();
  json labels = json::array();
  for (const auto& l : family.labels()) labels.push_back(l);
  out["labels"] = labels;
  out["test"] = test_name;
  out["constrained"] = true;
  if (alpha) out["alpha"] = *alpha;
  if (seed) out["seed"] = *seed;
  if (sims) out["sims"] = *sims;
  json rows = json::array();
  const auto distinct = closure.distinct();
  for (std::size_t d = 0; d < distinct.size(); ++d) {
    json row;
    row["subset"] = subset_to_json(distinct[d].representative);
    row["partition"] = distinct[d].key.to_string();
    row["duplicates"] = distinct[d].members.size();
    row["local_p"] = closure.local_p(d);
    row["adjusted_p"] = closure.adjusted_p(d);
    if (alpha) row["rejected"] = closure.adjusted_p(d) <= *alpha;
    rows.push_back(std::move(row));
  }
  out["hypotheses"] = std::move(rows);
  return out;
}

/// Rebuild a ClosureTable (and labels) from lattice_json output.
inline ClosureTable table_from_json(const json& j, std::vector<std::string>* labels_out = nullptr) {
  if (!j.contains("n") || !j.contains("hypotheses"))
    throw std::invalid_argument("table_from_json: missing 'n' or 'hypotheses'");
  const int n = j.at("n").get<int>();
  if (n < 1 || n > ClosureTable::kDefaultMaxWidth)
    throw std::invalid_argument("table_from_json: n out of range");
  if (labels_out && j.contains("labels"))
    *labels_out = j.at("labels").get<std::vector<std::string>>();
  const std::size_t nmask = std::size_t{1} << n;
  std::vector<double> table(nmask, -1.0);
  for (const auto& row : j.at("hypotheses")) {
    const Subset s = subset_from_json(row.at("subset"));
    if (s.empty() || s.bits() >= nmask)
      throw std::invalid_argument("table_from_json: subset outside the family");
    table[s.bits()] = row.at("local_p").get<double>();
  }
  for (std::size_t m = 1; m < nmask; ++m)
    if (table[m] < 0.0)
      throw std::invalid_argument("table_from_json: lattice is missing subsets");
  return ClosureTable(n, std::move(table));
}

inline json bound_json(const TauBound& bound) {
  json out;
  out["subset"] = subset_to_json(bound.query);
  out["alpha"] = bound.alpha;
  out["tau_upper"] = bound.tau_upper;
  out["false_lower"] = bound.false_lower;
  json claims = json::array();
  for (const auto& c : bound.claims) {
    json row;
    row["k"] = c.k;
    row["p"] = c.p;
    claims.push_back(std::move(row));
  }
  out["claims"] = std::move(claims);
  return out;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

inline std::string subset_label(Subset s, const HypothesisFamily& family) {
  if (s.count() == 1) return family.label(s.indices().front());
  std::string out = "H_{";
  bool first = true;
  s.for_each([&](int i) {
    if (!first) out += ',';
    out += std::to_string(i + 1);
    first = false;
  });
  out += '}';
  return out;
}

/// Sentence template for a claim report.
inline std::string claim_sentence(const TauBound& bound, const HypothesisFamily& family) {
  std::string members = "{";
  bool first = true;
  bound.query.for_each([&](int i) {
    if (!first) members += ", ";
    members += family.label(i);
    first = false;
  });
  members += "}";
  if (bound.claims.empty()) return "No claims computed for " + members + ".";
  const double p1 = bound.claims.front().p;
  std::string out = "For familywise significance levels as low as " +
                    detail::format_p(p1) + ", there is at least one alternative among " +
                    members + ".";
  for (std::size_t k = 1; k < bound.claims.size(); ++k) {
    out += " At least " + std::to_string(bound.claims[k].k) + " false (adjusted p=" +
           detail::format_p(bound.claims[k].p) + ").";
  }
  return out;
}

/// DOT rendering of the full lattice, ranked by subset size as in the
/// usual closure diagrams (elementary hypotheses at the bottom, the global
/// intersection on top). Rejected nodes are drawn filled when alpha is set.
inline std::string lattice_dot(const HypothesisFamily& family, const ClosureTable& table,
                               const AdjustedResult& adjusted) {
  const int n = table.n();
  const std::uint64_t nmask = std::uint64_t{1} << n;
  std::ostringstream os;
  os << "digraph closure {\n  rankdir=BT;\n  node [shape=box];\n";
  for (std::uint64_t m = 1; m < nmask; ++m) {
    const Subset s(m);
    os << "  s" << m << " [label=\"" << subset_label(s, family)
       << ": p=" << detail::format_p(table.local_p(s))
       << ", adj=" << detail::format_p(adjusted.adjusted(s)) << "\"";
    if (adjusted.alpha() && adjusted.rejected(s))
      os << ", style=filled, fillcolor=lightgrey";
    os << "];\n";
  }
  for (int size = 1; size <= n; ++size) {
    os << "  { rank=same;";
    for (std::uint64_t m = 1; m < nmask; ++m)
      if (std::popcount(m) == size) os << " s" << m << ";";
    os << " }\n";
  }
  for (std::uint64_t m = 1; m < nmask; ++m)
    for (int b = 0; b < n; ++b)
      if (!(m & (std::uint64_t{1} << b)))
        os << "  s" << m << " -> s" << (m | (std::uint64_t{1} << b)) << ";\n";
  os << "}\n";
  return os.str();
}

/// DOT rendering of the deduplicated lattice (cover relation between the
/// distinct hypotheses).
inline std::string constrained_lattice_dot(const HypothesisFamily& family,
                                           const ConstrainedClosure& closure,
                                           std::optional<double> alpha) {
  const auto distinct = closure.distinct();
  std::ostringstream os;
  os << "digraph closure {\n  rankdir=BT;\n  node [shape=box];\n";
  for (std::size_t d = 0; d < distinct.size(); ++d) {
    os << "  d" << d << " [label=\"" << subset_label(distinct[d].representative, family)
       << ": p=" << detail::format_p(closure.local_p(d))
       << ", adj=" << detail::format_p(closure.adjusted_p(d)) << "\"";
    if (alpha && closure.adjusted_p(d) <= *alpha)
      os << ", style=filled, fillcolor=lightgrey";
    os << "];\n";
  }
  // cover edges: d -> e when e strictly contains d with nothing in between
  for (std::size_t d = 0; d < distinct.size(); ++d) {
    for (std::size_t e = 0; e < distinct.size(); ++e) {
      if (d == e) continue;
      const Subset lo = distinct[d].representative, hi = distinct[e].representative;
      if (!(hi.contains_all(lo) && hi != lo)) continue;
      bool covered = true;
      for (std::size_t f = 0; f < distinct.size() && covered; ++f) {
        if (f == d || f == e) continue;
        const Subset mid = distinct[f].representative;
        if (mid.contains_all(lo) && hi.contains_all(mid) && mid != lo && mid != hi)
          covered = false;
      }
      if (covered) os << "  d" << d << " -> d" << e << ";\n";
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace ctp
