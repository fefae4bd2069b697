#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pgm/common.hpp"
#include "pgm/matrix.hpp"

namespace pgm {

enum class VarKind { discrete, continuous };

struct VariableMeta {
  std::string name;
  VarKind kind = VarKind::discrete;
  std::vector<std::string> levels;  // empty for continuous

  int cardinality() const { return static_cast<int>(levels.size()); }

  int level_index(const std::string& label) const {
    for (std::size_t i = 0; i < levels.size(); ++i)
      if (levels[i] == label) return static_cast<int>(i);
    throw ArgumentError("variable '" + name + "' has no level '" + label + "'");
  }

  bool operator==(const VariableMeta& o) const {
    return name == o.name && kind == o.kind && levels == o.levels;
  }
};

// Optional sidecar declaration: one "name,kind[,levels...]" line per variable.
struct Schema {
  struct Decl {
    std::string name;
    VarKind kind;
    std::vector<std::string> levels;  // may stay empty for discrete: observed levels used
  };
  std::vector<Decl> decls;

  const Decl* find(const std::string& name) const {
    for (const auto& d : decls)
      if (d.name == name) return &d;
    return nullptr;
  }

  static Schema parse(std::istream& in) {
    Schema s;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> parts;
      std::stringstream ss(line);
      std::string tok;
      while (std::getline(ss, tok, ',')) parts.push_back(tok);
      if (parts.size() < 2)
        throw IngestError("schema line " + std::to_string(lineno) + ": expected name,kind");
      Decl d;
      d.name = parts[0];
      if (d.name.empty())
        throw IngestError("schema line " + std::to_string(lineno) + ": empty variable name");
      if (parts[1] == "discrete")
        d.kind = VarKind::discrete;
      else if (parts[1] == "continuous")
        d.kind = VarKind::continuous;
      else
        throw IngestError("schema line " + std::to_string(lineno) + ": unknown kind '" + parts[1] + "'");
      d.levels.assign(parts.begin() + 2, parts.end());
      for (const auto& lv : d.levels)
        if (lv.empty())
          throw IngestError("schema line " + std::to_string(lineno) + ": empty level label");
      if (d.kind == VarKind::continuous && !d.levels.empty())
        throw IngestError("schema line " + std::to_string(lineno) + ": continuous variable lists levels");
      s.decls.push_back(std::move(d));
    }
    return s;
  }
};

// Complete rectangular sample: typed columns, no missing cells, immutable.
class Dataset {
 public:
  Dataset(std::vector<VariableMeta> vars, std::vector<std::vector<int>> discrete_cols,
          std::vector<std::vector<double>> continuous_cols)
      : vars_(std::move(vars)), dcols_(std::move(discrete_cols)), ccols_(std::move(continuous_cols)) {
    if (vars_.empty()) throw ArgumentError("dataset needs at least one variable");
    std::set<std::string> seen;
    for (const auto& v : vars_)
      if (v.name.empty() || !seen.insert(v.name).second)
        throw ArgumentError("duplicate or empty variable name '" + v.name + "'");
    if (dcols_.size() != vars_.size() || ccols_.size() != vars_.size())
      throw ArgumentError("column count mismatch");
    n_ = -1;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      const auto& v = vars_[i];
      long long rows;
      if (v.kind == VarKind::discrete) {
        if (v.cardinality() < 2)
          throw ArgumentError("discrete variable '" + v.name + "' needs at least two levels");
        std::set<std::string> lv(v.levels.begin(), v.levels.end());
        if (lv.size() != v.levels.size())
          throw ArgumentError("duplicate level in variable '" + v.name + "'");
        rows = static_cast<long long>(dcols_[i].size());
        for (int code : dcols_[i])
          if (code < 0 || code >= v.cardinality())
            throw ArgumentError("level code out of range in variable '" + v.name + "'");
        if (!ccols_[i].empty()) throw ArgumentError("discrete variable with continuous storage");
      } else {
        rows = static_cast<long long>(ccols_[i].size());
        if (!dcols_[i].empty()) throw ArgumentError("continuous variable with discrete storage");
        for (double x : ccols_[i])
          if (!std::isfinite(x))
            throw ArgumentError("non-finite value in variable '" + v.name + "'");
      }
      if (n_ == -1) n_ = rows;
      if (rows != n_) throw ArgumentError("ragged columns");
    }
    if (n_ < 1) throw ArgumentError("dataset needs at least one row");
  }

  long long n() const { return n_; }
  int var_count() const { return static_cast<int>(vars_.size()); }
  const std::vector<VariableMeta>& variables() const { return vars_; }
  const VariableMeta& variable(int i) const { return vars_[static_cast<std::size_t>(i)]; }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i].name == name) return static_cast<int>(i);
    throw ArgumentError("unknown variable '" + name + "'");
  }

  bool has_variable(const std::string& name) const {
    for (const auto& v : vars_)
      if (v.name == name) return true;
    return false;
  }

  int level(long long row, int var) const {
    return dcols_[static_cast<std::size_t>(var)][static_cast<std::size_t>(row)];
  }
  double value(long long row, int var) const {
    return ccols_[static_cast<std::size_t>(var)][static_cast<std::size_t>(row)];
  }

  const std::vector<int>& discrete_column(int var) const {
    if (vars_[static_cast<std::size_t>(var)].kind != VarKind::discrete)
      throw ArgumentError("variable '" + vars_[static_cast<std::size_t>(var)].name + "' is not discrete");
    return dcols_[static_cast<std::size_t>(var)];
  }
  const std::vector<double>& continuous_column(int var) const {
    if (vars_[static_cast<std::size_t>(var)].kind != VarKind::continuous)
      throw ArgumentError("variable '" + vars_[static_cast<std::size_t>(var)].name + "' is not continuous");
    return ccols_[static_cast<std::size_t>(var)];
  }

  bool all_discrete() const {
    return std::all_of(vars_.begin(), vars_.end(),
                       [](const VariableMeta& v) { return v.kind == VarKind::discrete; });
  }
  bool all_continuous() const {
    return std::all_of(vars_.begin(), vars_.end(),
                       [](const VariableMeta& v) { return v.kind == VarKind::continuous; });
  }

  /// New dataset with the given rows (indices may repeat: bootstrap resampling).
  Dataset rows_subset(const std::vector<long long>& rows) const {
    std::vector<std::vector<int>> dc(vars_.size());
    std::vector<std::vector<double>> cc(vars_.size());
    for (std::size_t v = 0; v < vars_.size(); ++v) {
      if (vars_[v].kind == VarKind::discrete) {
        dc[v].reserve(rows.size());
        for (long long r : rows) dc[v].push_back(dcols_[v][static_cast<std::size_t>(r)]);
      } else {
        cc[v].reserve(rows.size());
        for (long long r : rows) cc[v].push_back(ccols_[v][static_cast<std::size_t>(r)]);
      }
    }
    return Dataset(vars_, std::move(dc), std::move(cc));
  }

 private:
  std::vector<VariableMeta> vars_;
  std::vector<std::vector<int>> dcols_;
  std::vector<std::vector<double>> ccols_;
  long long n_ = 0;
};

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last && std::isfinite(out);
}

inline std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Reads comma-separated data with a header row.  Kinds come from the schema
/// when declared, otherwise all-numeric columns become continuous and the
/// rest discrete with observed levels sorted.
inline Dataset load_dataset(std::istream& in, const std::optional<Schema>& schema = std::nullopt) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError("empty input: missing header row");
  const std::vector<std::string> names = detail::split_csv_line(line);
  for (const auto& nm : names)
    if (nm.empty()) throw IngestError("empty column name in header");
  const std::size_t width = names.size();

  std::vector<std::vector<std::string>> cells(width);
  long long row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != width)
      throw IngestError("row " + std::to_string(row) + ": expected " + std::to_string(width) +
                        " fields, found " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < width; ++c) {
      if (fields[c].empty())
        throw IngestError("row " + std::to_string(row) + ", column '" + names[c] + "': missing value");
      cells[c].push_back(std::move(fields[c]));
    }
  }
  if (row == 0) throw IngestError("empty body: no data rows");

  if (schema)
    for (const auto& d : schema->decls)
      if (std::find(names.begin(), names.end(), d.name) == names.end())
        throw IngestError("schema declares unknown column '" + d.name + "'");

  std::vector<VariableMeta> vars(width);
  std::vector<std::vector<int>> dcols(width);
  std::vector<std::vector<double>> ccols(width);
  for (std::size_t c = 0; c < width; ++c) {
    const Schema::Decl* decl = schema ? schema->find(names[c]) : nullptr;
    bool numeric = true;
    std::vector<double> parsed(cells[c].size());
    for (std::size_t r = 0; r < cells[c].size(); ++r)
      if (!detail::parse_double(cells[c][r], parsed[r])) {
        numeric = false;
        break;
      }
    const bool continuous = decl ? decl->kind == VarKind::continuous : numeric;
    if (continuous) {
      if (!numeric) {
        for (std::size_t r = 0; r < cells[c].size(); ++r) {
          double tmp;
          if (!detail::parse_double(cells[c][r], tmp))
            throw IngestError("row " + std::to_string(r + 1) + ", column '" + names[c] +
                              "': not a number: '" + cells[c][r] + "'");
        }
      }
      vars[c] = {names[c], VarKind::continuous, {}};
      ccols[c] = std::move(parsed);
    } else {
      std::vector<std::string> levels;
      if (decl && !decl->levels.empty()) {
        levels = decl->levels;
      } else {
        std::set<std::string> uniq(cells[c].begin(), cells[c].end());
        levels.assign(uniq.begin(), uniq.end());
      }
      if (levels.size() < 2)
        throw IngestError("column '" + names[c] + "': fewer than two distinct levels");
      std::map<std::string, int> code;
      for (std::size_t i = 0; i < levels.size(); ++i) code[levels[i]] = static_cast<int>(i);
      std::vector<int> col(cells[c].size());
      for (std::size_t r = 0; r < cells[c].size(); ++r) {
        auto it = code.find(cells[c][r]);
        if (it == code.end())
          throw IngestError("row " + std::to_string(r + 1) + ", column '" + names[c] +
                            "': level '" + cells[c][r] + "' not in declared levels");
        col[r] = it->second;
      }
      vars[c] = {names[c], VarKind::discrete, std::move(levels)};
      dcols[c] = std::move(col);
    }
  }
  return Dataset(std::move(vars), std::move(dcols), std::move(ccols));
}

// Exact joint counts for target variables within each configuration of the
// conditioning variables.  Zero-count configurations are retained.
class ContingencyTable {
 public:
  ContingencyTable(const Dataset& d, const std::vector<std::string>& targets,
                   const std::vector<std::string>& given) {
    if (targets.empty()) throw ArgumentError("contingency table needs target variables");
    std::set<std::string> seen;
    auto resolve = [&](const std::vector<std::string>& names) {
      std::vector<int> idx;
      for (const auto& nm : names) {
        int v = d.index_of(nm);
        if (d.variable(v).kind != VarKind::discrete)
          throw ArgumentError("variable '" + nm + "' is not discrete");
        if (!seen.insert(nm).second) throw ArgumentError("variable '" + nm + "' named twice");
        idx.push_back(v);
      }
      return idx;
    };
    target_idx_ = resolve(targets);
    given_idx_ = resolve(given);
    for (int v : target_idx_) {
      target_names_.push_back(d.variable(v).name);
      target_cards_.push_back(d.variable(v).cardinality());
    }
    for (int v : given_idx_) {
      given_names_.push_back(d.variable(v).name);
      given_cards_.push_back(d.variable(v).cardinality());
    }
    tsize_ = 1;
    for (int c : target_cards_) tsize_ *= c;
    gsize_ = 1;
    for (int c : given_cards_) gsize_ *= c;
    counts_.assign(static_cast<std::size_t>(tsize_) * gsize_, 0);
    n_ = d.n();
    for (long long r = 0; r < n_; ++r) {
      long long t = 0;
      for (std::size_t i = 0; i < target_idx_.size(); ++i)
        t = t * target_cards_[i] + d.level(r, target_idx_[i]);
      long long g = 0;
      for (std::size_t i = 0; i < given_idx_.size(); ++i)
        g = g * given_cards_[i] + d.level(r, given_idx_[i]);
      ++counts_[static_cast<std::size_t>(g) * tsize_ + t];
    }
  }

  const std::vector<std::string>& target_names() const { return target_names_; }
  const std::vector<std::string>& given_names() const { return given_names_; }
  const std::vector<int>& target_cards() const { return target_cards_; }
  const std::vector<int>& given_cards() const { return given_cards_; }

  long long target_configs() const { return tsize_; }
  long long given_configs() const { return gsize_; }
  long long total() const { return n_; }

  long long at(long long given_config, long long target_config) const {
    return counts_[static_cast<std::size_t>(given_config) * tsize_ + target_config];
  }

  /// Mixed-radix index over target levels, first variable most significant.
  long long target_config(const std::vector<int>& levels) const {
    long long t = 0;
    for (std::size_t i = 0; i < levels.size(); ++i) t = t * target_cards_[i] + levels[i];
    return t;
  }

 private:
  std::vector<int> target_idx_, given_idx_;
  std::vector<std::string> target_names_, given_names_;
  std::vector<int> target_cards_, given_cards_;
  long long tsize_ = 1, gsize_ = 1, n_ = 0;
  std::vector<long long> counts_;
};

inline ContingencyTable contingency_table(const Dataset& d, const std::vector<std::string>& targets,
                                          const std::vector<std::string>& given = {}) {
  return ContingencyTable(d, targets, given);
}

struct GaussStats {
  long long n = 0;
  std::vector<std::string> names;
  std::vector<double> means;
  Matrix correlation;

  int index_of(const std::string& nm) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == nm) return static_cast<int>(i);
    throw ArgumentError("unknown variable '" + nm + "'");
  }
};

/// Sample means and the correlation matrix derived from the unbiased covariance.
inline GaussStats gauss_stats(const Dataset& d) {
  if (!d.all_continuous()) throw ArgumentError("gauss_stats requires all-continuous data");
  if (d.n() < 2) throw ArgumentError("gauss_stats requires at least two rows");
  const int p = d.var_count();
  const long long n = d.n();
  GaussStats s;
  s.n = n;
  s.means.resize(static_cast<std::size_t>(p));
  for (int v = 0; v < p; ++v) {
    s.names.push_back(d.variable(v).name);
    const auto& col = d.continuous_column(v);
    double m = 0.0;
    for (double x : col) m += x;
    s.means[static_cast<std::size_t>(v)] = m / double(n);
  }
  Matrix cov(static_cast<std::size_t>(p), static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) {
      const auto& ci = d.continuous_column(i);
      const auto& cj = d.continuous_column(j);
      double acc = 0.0;
      for (long long r = 0; r < n; ++r)
        acc += (ci[static_cast<std::size_t>(r)] - s.means[static_cast<std::size_t>(i)]) *
               (cj[static_cast<std::size_t>(r)] - s.means[static_cast<std::size_t>(j)]);
      cov(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc / double(n - 1);
      cov(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) =
          cov(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  for (int v = 0; v < p; ++v)
    if (cov(static_cast<std::size_t>(v), static_cast<std::size_t>(v)) <= 0.0)
      throw NumericError("variable '" + d.variable(v).name + "' has zero variance");
  s.correlation = Matrix(static_cast<std::size_t>(p), static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      s.correlation(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          (i == j) ? 1.0
                   : cov(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) /
                         std::sqrt(cov(static_cast<std::size_t>(i), static_cast<std::size_t>(i)) *
                                   cov(static_cast<std::size_t>(j), static_cast<std::size_t>(j)));
  return s;
}

/// Replaces each continuous variable by a quantile-cut discrete one with
/// levels q1..qk; ties go to the lower bin.  Discrete variables pass through.
inline Dataset discretize(const Dataset& d, int bins) {
  if (bins < 2) throw ArgumentError("discretize needs at least two bins");
  std::vector<VariableMeta> vars;
  std::vector<std::vector<int>> dcols(static_cast<std::size_t>(d.var_count()));
  std::vector<std::vector<double>> ccols(static_cast<std::size_t>(d.var_count()));
  for (int v = 0; v < d.var_count(); ++v) {
    const auto& meta = d.variable(v);
    if (meta.kind == VarKind::discrete) {
      vars.push_back(meta);
      dcols[static_cast<std::size_t>(v)] = d.discrete_column(v);
      continue;
    }
    const auto& col = d.continuous_column(v);
    std::vector<double> sorted(col);
    std::sort(sorted.begin(), sorted.end());
    long long distinct = sorted.empty() ? 0 : 1;
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (sorted[i] != sorted[i - 1]) ++distinct;
    if (distinct < bins)
      throw ArgumentError("variable '" + meta.name + "': " + std::to_string(distinct) +
                          " distinct values for " + std::to_string(bins) + " bins");
    const long long n = d.n();
    std::vector<double> cuts;  // upper bound of bins 1..k-1
    for (int j = 1; j < bins; ++j) {
      long long rank = (n * j + bins - 1) / bins;  // ceil(n*j/k), 1-based order statistic
      cuts.push_back(sorted[static_cast<std::size_t>(rank - 1)]);
    }
    std::vector<int> codes(col.size());
    for (std::size_t r = 0; r < col.size(); ++r) {
      int b = bins - 1;
      for (int j = 0; j < bins - 1; ++j)
        if (col[r] <= cuts[static_cast<std::size_t>(j)]) {
          b = j;
          break;
        }
      codes[r] = b;
    }
    std::vector<std::string> levels;
    for (int j = 1; j <= bins; ++j) levels.push_back("q" + std::to_string(j));
    vars.push_back({meta.name, VarKind::discrete, std::move(levels)});
    dcols[static_cast<std::size_t>(v)] = std::move(codes);
  }
  return Dataset(std::move(vars), std::move(dcols), std::move(ccols));
}

}  // namespace pgm
