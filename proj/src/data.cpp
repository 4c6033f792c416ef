#include "nbcar/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace nbcar {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

// Strict full-token numeric parses; "12x", "", "nan" all fail.
bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end && std::isfinite(out);
}

bool parse_int(const std::string& s, long long& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

// Reads the next content line, skipping blank and '#' comment lines.
bool next_line(std::istream& in, std::string& line, int& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    line = t;
    return true;
  }
  return false;
}

const char* kZoneColumns[9] = {"zone_id",        "area_km2",       "crash",
                               "arterial_length_km", "access_density", "signal_density",
                               "road_density",   "betweenness",    "landuse"};

std::map<std::string, int> read_header(std::istream& in, const char* const* expected,
                                       int n_expected, int& line_no, const char* what) {
  std::string line;
  if (!next_line(in, line, line_no))
    throw SchemaError(std::string(what) + ": missing header row");
  const std::vector<std::string> cells = split_csv(line);
  std::map<std::string, int> pos;
  for (int c = 0; c < static_cast<int>(cells.size()); ++c) {
    bool known = false;
    for (int k = 0; k < n_expected; ++k)
      if (cells[static_cast<std::size_t>(c)] == expected[k]) known = true;
    if (!known)
      throw SchemaError(std::string(what) + ": unknown column '" +
                        cells[static_cast<std::size_t>(c)] + "'");
    if (pos.count(cells[static_cast<std::size_t>(c)]))
      throw SchemaError(std::string(what) + ": duplicate column '" +
                        cells[static_cast<std::size_t>(c)] + "'");
    pos[cells[static_cast<std::size_t>(c)]] = c;
  }
  for (int k = 0; k < n_expected; ++k)
    if (!pos.count(expected[k]))
      throw SchemaError(std::string(what) + ": missing column '" + expected[k] + "'");
  return pos;
}

[[noreturn]] void row_error(const char* what, int line_no, const std::string& msg) {
  throw ValidationError(std::string(what) + ": row at line " + std::to_string(line_no) + ": " +
                        msg);
}

}  // namespace

ZoneTable::ZoneTable(std::vector<ZoneRecord> rows) : rows_(std::move(rows)) {
  for (int i = 0; i < static_cast<int>(rows_.size()); ++i) {
    const auto [it, inserted] = index_.emplace(rows_[static_cast<std::size_t>(i)].zone_id, i);
    (void)it;
    if (!inserted)
      throw ValidationError("ZoneTable: duplicate zone_id '" +
                            rows_[static_cast<std::size_t>(i)].zone_id + "'");
  }
}

int ZoneTable::index_of(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? -1 : it->second;
}

ZoneTableResult read_zone_table(std::istream& in) {
  int line_no = 0;
  const auto pos = read_header(in, kZoneColumns, 9, line_no, "zones");

  std::vector<ZoneRecord> kept;
  std::vector<std::string> dropped;
  std::set<std::string> seen_ids;
  std::string line;
  while (next_line(in, line, line_no)) {
    const std::vector<std::string> cells = split_csv(line);
    if (static_cast<int>(cells.size()) != 9)
      row_error("zones", line_no,
                "expected 9 cells, got " + std::to_string(cells.size()));
    auto cell = [&](const char* name) -> const std::string& {
      return cells[static_cast<std::size_t>(pos.at(name))];
    };

    ZoneRecord r;
    r.zone_id = cell("zone_id");
    if (r.zone_id.empty()) row_error("zones", line_no, "empty zone_id");
    if (!seen_ids.insert(r.zone_id).second)
      row_error("zones", line_no, "duplicate zone_id '" + r.zone_id + "'");

    struct Field {
      const char* name;
      double* dst;
    };
    const Field numeric[6] = {{"area_km2", &r.area_km2},
                              {"arterial_length_km", &r.arterial_length_km},
                              {"access_density", &r.access_density},
                              {"signal_density", &r.signal_density},
                              {"road_density", &r.road_density},
                              {"betweenness", &r.betweenness}};
    for (const Field& f : numeric) {
      if (!parse_double(cell(f.name), *f.dst))
        row_error("zones", line_no, std::string("non-numeric ") + f.name + " '" +
                                        cell(f.name) + "'");
      if (*f.dst < 0.0)
        row_error("zones", line_no, std::string("negative ") + f.name);
    }
    if (!parse_int(cell("crash"), r.crash_count))
      row_error("zones", line_no, "crash count must be an integer, got '" + cell("crash") + "'");
    if (r.crash_count < 0) row_error("zones", line_no, "negative crash count");
    long long landuse = 0;
    if (!parse_int(cell("landuse"), landuse) || landuse < 0 || landuse >= kLandUseClasses)
      row_error("zones", line_no, "landuse must be an integer in 0..6, got '" +
                                      cell("landuse") + "'");
    r.land_use_class = static_cast<int>(landuse);

    if (r.arterial_length_km == 0.0) {
      dropped.push_back(r.zone_id);
    } else {
      kept.push_back(std::move(r));
    }
  }

  ZoneTableResult result;
  result.table = ZoneTable(std::move(kept));
  result.dropped_ids = dropped;
  if (!dropped.empty()) {
    std::string msg = std::to_string(dropped.size()) + " zones excluded (no arterials):";
    for (const auto& id : dropped) msg += " " + id;
    result.warnings.push_back(msg);
  }
  return result;
}

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_zone_table(std::ostream& out, const ZoneTable& table) {
  out << "zone_id,area_km2,crash,arterial_length_km,access_density,signal_density,"
         "road_density,betweenness,landuse\n";
  for (const ZoneRecord& r : table.rows()) {
    out << r.zone_id << ',' << format_double(r.area_km2) << ',' << r.crash_count << ','
        << format_double(r.arterial_length_km) << ',' << format_double(r.access_density) << ','
        << format_double(r.signal_density) << ',' << format_double(r.road_density) << ','
        << format_double(r.betweenness) << ',' << r.land_use_class << '\n';
  }
}

std::vector<AdjacencyRecord> read_adjacency(std::istream& in) {
  static const char* kCols[3] = {"zone_i", "zone_j", "lanes"};
  int line_no = 0;
  const auto pos = read_header(in, kCols, 3, line_no, "adjacency");

  std::vector<AdjacencyRecord> records;
  std::string line;
  while (next_line(in, line, line_no)) {
    const std::vector<std::string> cells = split_csv(line);
    if (static_cast<int>(cells.size()) != 3)
      row_error("adjacency", line_no,
                "expected 3 cells, got " + std::to_string(cells.size()));
    AdjacencyRecord rec;
    rec.zone_i = cells[static_cast<std::size_t>(pos.at("zone_i"))];
    rec.zone_j = cells[static_cast<std::size_t>(pos.at("zone_j"))];
    rec.line = line_no;
    if (rec.zone_i.empty() || rec.zone_j.empty())
      row_error("adjacency", line_no, "empty zone id");
    const std::string& lanes_cell = cells[static_cast<std::size_t>(pos.at("lanes"))];
    if (!parse_int(lanes_cell, rec.lanes) || rec.lanes <= 0)
      row_error("adjacency", line_no,
                "lanes must be a positive integer, got '" + lanes_cell + "'");
    records.push_back(std::move(rec));
  }
  return records;
}

void write_adjacency(std::ostream& out, const std::vector<AdjacencyRecord>& records) {
  out << "zone_i,zone_j,lanes\n";
  for (const AdjacencyRecord& r : records)
    out << r.zone_i << ',' << r.zone_j << ',' << r.lanes << '\n';
}

WeightMatrixResult build_weight_matrix(const std::vector<AdjacencyRecord>& records,
                                       const ZoneTable& table) {
  const int n = table.size();
  // (i, j) with i < j  ->  (lanes, first line seen)
  std::map<std::pair<int, int>, std::pair<long long, int>> edges;
  for (const AdjacencyRecord& rec : records) {
    const int a = table.index_of(rec.zone_i);
    const int b = table.index_of(rec.zone_j);
    if (a < 0)
      throw ReferenceError("adjacency line " + std::to_string(rec.line) +
                           ": unknown zone id '" + rec.zone_i + "'");
    if (b < 0)
      throw ReferenceError("adjacency line " + std::to_string(rec.line) +
                           ": unknown zone id '" + rec.zone_j + "'");
    if (a == b)
      throw ValidationError("adjacency line " + std::to_string(rec.line) +
                            ": self-pair for zone '" + rec.zone_i + "'");
    if (rec.lanes <= 0)
      throw ValidationError("adjacency line " + std::to_string(rec.line) +
                            ": lanes must be positive");
    const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
    const auto it = edges.find(key);
    if (it == edges.end()) {
      edges.emplace(key, std::make_pair(rec.lanes, rec.line));
    } else if (it->second.first != rec.lanes) {
      throw ConflictError("adjacency: conflicting lane counts for pair (" + rec.zone_i +
                          ", " + rec.zone_j + ") at lines " +
                          std::to_string(it->second.second) + " and " +
                          std::to_string(rec.line));
    }
  }

  std::vector<WeightMatrix::Edge> list;
  list.reserve(edges.size());
  for (const auto& [key, val] : edges)
    list.push_back({key.first, key.second, static_cast<double>(val.first)});

  WeightMatrixResult result;
  result.W = WeightMatrix::from_edges(n, list);
  for (int i = 0; i < n; ++i) {
    if (result.W.is_island(i)) {
      result.island_ids.push_back(table.row(i).zone_id);
      result.warnings.push_back("zone " + table.row(i).zone_id +
                                " has no adjacency (island); spatial effect pinned at 0");
    }
  }
  return result;
}

std::array<double, 6> encode_landuse(int cls, int base) {
  if (cls < 0 || cls >= kLandUseClasses)
    throw DomainError("encode_landuse: class " + std::to_string(cls) + " out of range 0..6");
  if (base < 0 || base >= kLandUseClasses)
    throw DomainError("encode_landuse: base " + std::to_string(base) + " out of range 0..6");
  std::array<double, 6> v{};
  int slot = 0;
  for (int c = 0; c < kLandUseClasses; ++c) {
    if (c == base) continue;
    if (c == cls) v[static_cast<std::size_t>(slot)] = 1.0;
    ++slot;
  }
  return v;
}

namespace {

using FieldGetter = double (*)(const ZoneRecord&);

const std::map<std::string, FieldGetter>& numeric_fields() {
  static const std::map<std::string, FieldGetter> fields = {
      {"area_km2", [](const ZoneRecord& r) { return r.area_km2; }},
      {"arterial_length_km", [](const ZoneRecord& r) { return r.arterial_length_km; }},
      {"access_density", [](const ZoneRecord& r) { return r.access_density; }},
      {"signal_density", [](const ZoneRecord& r) { return r.signal_density; }},
      {"road_density", [](const ZoneRecord& r) { return r.road_density; }},
      {"betweenness", [](const ZoneRecord& r) { return r.betweenness; }},
  };
  return fields;
}

}  // namespace

CovariateSpec CovariateSpec::defaults() {
  CovariateSpec spec;
  spec.covariates = {"arterial_length_km", "access_density", "signal_density", "betweenness",
                     "road_density"};
  return spec;
}

void CovariateSpec::validate() const {
  std::set<std::string> seen;
  for (const std::string& name : covariates) {
    if (!numeric_fields().count(name))
      throw ConfigError("CovariateSpec: unknown covariate '" + name + "'");
    if (!seen.insert(name).second)
      throw ConfigError("CovariateSpec: duplicate covariate '" + name + "'");
  }
  if (landuse_base < 0 || landuse_base >= kLandUseClasses)
    throw ConfigError("CovariateSpec: landuse base out of range 0..6");
}

DesignMatrix design_matrix(const ZoneTable& table, const CovariateSpec& spec) {
  spec.validate();
  const int n = table.size();
  const int p = (spec.include_intercept ? 1 : 0) + static_cast<int>(spec.covariates.size()) +
                (spec.include_landuse ? 6 : 0);

  DesignMatrix d;
  d.X.resize(n, p);
  int col = 0;
  if (spec.include_intercept) {
    d.X.col(col).setOnes();
    d.column_names.push_back("intercept");
    ++col;
  }
  for (const std::string& name : spec.covariates) {
    const FieldGetter get = numeric_fields().at(name);
    for (int i = 0; i < n; ++i) d.X(i, col) = get(table.row(i));
    d.column_names.push_back(name);
    ++col;
  }
  if (spec.include_landuse) {
    for (int c = 0; c < kLandUseClasses; ++c) {
      if (c == spec.landuse_base) continue;
      d.column_names.push_back(std::string("landuse_") + kLandUseNames[c]);
    }
    for (int i = 0; i < n; ++i) {
      const auto dummies = encode_landuse(table.row(i).land_use_class, spec.landuse_base);
      for (int k = 0; k < 6; ++k) d.X(i, col + k) = dummies[static_cast<std::size_t>(k)];
    }
    col += 6;
  }
  return d;
}

StatsReport descriptive_stats(const ZoneTable& table) {
  if (table.size() == 0) throw ValidationError("descriptive_stats: empty table");
  const int n = table.size();

  StatsReport report;
  report.n = n;
  report.single_row = (n == 1);

  struct Var {
    const char* name;
    FieldGetter get;
  };
  const Var vars[7] = {
      {"area_km2", [](const ZoneRecord& r) { return r.area_km2; }},
      {"crash", [](const ZoneRecord& r) { return static_cast<double>(r.crash_count); }},
      {"arterial_length_km", [](const ZoneRecord& r) { return r.arterial_length_km; }},
      {"access_density", [](const ZoneRecord& r) { return r.access_density; }},
      {"signal_density", [](const ZoneRecord& r) { return r.signal_density; }},
      {"road_density", [](const ZoneRecord& r) { return r.road_density; }},
      {"betweenness", [](const ZoneRecord& r) { return r.betweenness; }},
  };
  for (const Var& v : vars) {
    VariableStats s;
    s.name = v.name;
    double total = 0.0;
    s.min = v.get(table.row(0));
    s.max = s.min;
    for (int i = 0; i < n; ++i) {
      const double x = v.get(table.row(i));
      total += x;
      s.min = std::min(s.min, x);
      s.max = std::max(s.max, x);
    }
    s.mean = total / n;
    if (n > 1) {
      double ss = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = v.get(table.row(i)) - s.mean;
        ss += d * d;
      }
      s.sd = std::sqrt(ss / (n - 1));
    }
    report.variables.push_back(std::move(s));
  }
  return report;
}

ModelData make_model_data(const ZoneTable& table, const WeightMatrix& W,
                          const CovariateSpec& spec) {
  if (W.size() != table.size())
    throw ShapeError("make_model_data: weight matrix dimension " + std::to_string(W.size()) +
                     " does not match table size " + std::to_string(table.size()));
  DesignMatrix d = design_matrix(table, spec);
  ModelData data;
  data.y.resize(table.size());
  data.zone_ids.reserve(static_cast<std::size_t>(table.size()));
  for (int i = 0; i < table.size(); ++i) {
    data.y[i] = static_cast<int>(table.row(i).crash_count);
    data.zone_ids.push_back(table.row(i).zone_id);
  }
  data.X = std::move(d.X);
  data.column_names = std::move(d.column_names);
  data.W = W;
  return data;
}

}  // namespace nbcar
