#ifndef NBCAR_DATA_HPP
#define NBCAR_DATA_HPP

#include <array>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "nbcar/model.hpp"
#include "nbcar/weights.hpp"

namespace nbcar {

// Land-use classes, index = encoded class id.
inline constexpr int kLandUseClasses = 7;
inline constexpr const char* kLandUseNames[kLandUseClasses] = {
    "industrial", "commercial", "educational", "technical",
    "residential", "greenspace", "agricultural"};

// One traffic analysis zone: response, exposure, and covariates.
struct ZoneRecord {
  std::string zone_id;
  double area_km2 = 0.0;
  long long crash_count = 0;        // crashes per year on arterials in the zone
  double arterial_length_km = 0.0;
  double access_density = 0.0;      // access points per km of arterial
  double signal_density = 0.0;      // signalized intersections per km
  double road_density = 0.0;        // km of road per km^2
  double betweenness = 0.0;         // ingested as given, never recomputed
  int land_use_class = 0;           // dominant class, 0..6
};

// Ordered zone records with unique ids; zones without arterials never enter.
class ZoneTable {
public:
  ZoneTable() = default;
  explicit ZoneTable(std::vector<ZoneRecord> rows);

  int size() const { return static_cast<int>(rows_.size()); }
  const ZoneRecord& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }
  const std::vector<ZoneRecord>& rows() const { return rows_; }

  // Index of a zone id, or -1 if absent.
  int index_of(const std::string& id) const;

private:
  std::vector<ZoneRecord> rows_;
  std::unordered_map<std::string, int> index_;
};

struct ZoneTableResult {
  ZoneTable table;
  std::vector<std::string> warnings;
  std::vector<std::string> dropped_ids;  // zero-arterial zones, file order
};

// Parses the zones file (header zone_id,area_km2,crash,arterial_length_km,
// access_density,signal_density,road_density,betweenness,landuse in any
// column order). Zones without arterials are dropped with a warning, not an
// error. Anything malformed throws with the offending row or column named.
ZoneTableResult read_zone_table(std::istream& in);

// Inverse of read_zone_table for retained rows; values survive exactly.
void write_zone_table(std::ostream& out, const ZoneTable& table);

struct AdjacencyRecord {
  std::string zone_i;
  std::string zone_j;
  long long lanes = 0;
  int line = 0;  // 1-based file line, for error reporting
};

// Parses the adjacency file (header zone_i,zone_j,lanes).
std::vector<AdjacencyRecord> read_adjacency(std::istream& in);

void write_adjacency(std::ostream& out, const std::vector<AdjacencyRecord>& records);

struct WeightMatrixResult {
  WeightMatrix W;
  std::vector<std::string> warnings;   // one per island zone
  std::vector<std::string> island_ids;
};

// Builds the symmetric lane-count weight matrix over the table's zones.
// Symmetric duplicates with equal lane counts collapse to one edge;
// conflicting duplicates are errors, as are self-pairs and unknown ids.
WeightMatrixResult build_weight_matrix(const std::vector<AdjacencyRecord>& records,
                                       const ZoneTable& table);

// Indicator coding of a land-use class over the six non-base classes in
// ascending class order; all zeros when cls == base.
std::array<double, 6> encode_landuse(int cls, int base);

// Which columns go into the design matrix, and how.
struct CovariateSpec {
  std::vector<std::string> covariates;  // numeric ZoneRecord field names
  bool include_intercept = true;
  int landuse_base = 0;
  bool include_landuse = true;

  // Covariate set of the reference model: arterial length, access density,
  // signal density, betweenness, road density, plus land-use dummies.
  static CovariateSpec defaults();

  void validate() const;
};

struct DesignMatrix {
  Eigen::MatrixXd X;
  std::vector<std::string> column_names;
};

// Assembles the n x p design matrix: intercept, numeric covariates in spec
// order, land-use dummy block. Row order matches the table.
DesignMatrix design_matrix(const ZoneTable& table, const CovariateSpec& spec);

// Per-variable summary in zones-file schema order.
struct VariableStats {
  std::string name;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double sd = 0.0;
};

struct StatsReport {
  int n = 0;
  bool single_row = false;  // sd reported as 0 by convention
  std::vector<VariableStats> variables;
};

StatsReport descriptive_stats(const ZoneTable& table);

// Bundles table + weights + design into the sampler's input.
ModelData make_model_data(const ZoneTable& table, const WeightMatrix& W,
                          const CovariateSpec& spec);

// 17-significant-digit formatting used everywhere a double must survive a
// write/read round trip.
std::string format_double(double v);

}  // namespace nbcar

#endif  // NBCAR_DATA_HPP
