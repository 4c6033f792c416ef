// nbcar: zone-level crash frequency modeling with a negative binomial CAR
// model. Subcommands: fit, simulate, summarize, stats, check.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nbcar/data.hpp"
#include "nbcar/sampler.hpp"
#include "nbcar/synthetic.hpp"

namespace fs = std::filesystem;
using namespace nbcar;

namespace {

constexpr const char* kToolVersion = "nbcar 0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitSamplerAbort = 3;

// ---------------------------------------------------------------------------
// flat key = value config files

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: empty key at line " + std::to_string(line_no));
    if (kv.count(key))
      throw ConfigError("config: duplicate key '" + key + "' at line " + std::to_string(line_no));
    kv[key] = value;
  }
  return kv;
}

long long parse_ll(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs an integer, got '" + value + "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config: key '" + key + "' needs true/false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::string cur;
  for (char ch : value) {
    if (ch == ',') {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  const std::string last = trim(cur);
  if (!last.empty() || !items.empty()) items.push_back(last);
  return items;
}

// ---------------------------------------------------------------------------
// run configuration shared by fit/summarize/stats/check

struct RunConfig {
  SamplerSpec sampler;
  PriorSpec priors;
  CovariateSpec covariates = CovariateSpec::defaults();
  int chains = 1;

  void load(const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
      if (key == "iterations") sampler.iterations = static_cast<int>(parse_ll(key, value));
      else if (key == "burn_in") sampler.burn_in = static_cast<int>(parse_ll(key, value));
      else if (key == "thin") sampler.thin = static_cast<int>(parse_ll(key, value));
      else if (key == "seed") sampler.seed = static_cast<std::uint64_t>(parse_ll(key, value));
      else if (key == "target_acceptance") sampler.target_acceptance = parse_real(key, value);
      else if (key == "adapt") sampler.adapt = parse_bool(key, value);
      else if (key == "beta_precision") priors.beta_precision = parse_real(key, value);
      else if (key == "k_shape") priors.k_shape = parse_real(key, value);
      else if (key == "k_rate") priors.k_rate = parse_real(key, value);
      else if (key == "tau_shape") priors.tau_shape = parse_real(key, value);
      else if (key == "tau_rate") priors.tau_rate = parse_real(key, value);
      else if (key == "covariates") covariates.covariates = split_list(value);
      else if (key == "include_intercept") covariates.include_intercept = parse_bool(key, value);
      else if (key == "include_landuse") covariates.include_landuse = parse_bool(key, value);
      else if (key == "landuse_base") covariates.landuse_base = static_cast<int>(parse_ll(key, value));
      else if (key == "chains") chains = static_cast<int>(parse_ll(key, value));
      else throw ConfigError("config: unknown key '" + key + "'");
    }
    if (chains < 1) throw ConfigError("config: chains must be >= 1");
  }

  // canonical serialization, also the digest input
  std::string canonical() const {
    std::ostringstream os;
    os << "iterations=" << sampler.iterations << '\n'
       << "burn_in=" << sampler.burn_in << '\n'
       << "thin=" << sampler.thin << '\n'
       << "seed=" << sampler.seed << '\n'
       << "target_acceptance=" << format_double(sampler.target_acceptance) << '\n'
       << "adapt=" << (sampler.adapt ? "true" : "false") << '\n'
       << "beta_precision=" << format_double(priors.beta_precision) << '\n'
       << "k_shape=" << format_double(priors.k_shape) << '\n'
       << "k_rate=" << format_double(priors.k_rate) << '\n'
       << "tau_shape=" << format_double(priors.tau_shape) << '\n'
       << "tau_rate=" << format_double(priors.tau_rate) << '\n'
       << "covariates=";
    for (std::size_t i = 0; i < covariates.covariates.size(); ++i) {
      if (i) os << ',';
      os << covariates.covariates[i];
    }
    os << '\n'
       << "include_intercept=" << (covariates.include_intercept ? "true" : "false") << '\n'
       << "include_landuse=" << (covariates.include_landuse ? "true" : "false") << '\n'
       << "landuse_base=" << covariates.landuse_base << '\n'
       << "chains=" << chains << '\n';
    return os.str();
  }
};

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> provenance_header(std::uint64_t seed, const std::string& digest,
                                           const std::vector<std::string>& warnings) {
  std::vector<std::string> lines;
  lines.push_back(kToolVersion);
  lines.push_back("seed " + std::to_string(seed));
  lines.push_back("config " + digest);
  for (const std::string& w : warnings) lines.push_back("warning: " + w);
  return lines;
}

void write_comment_block(std::ostream& out, const std::vector<std::string>& lines) {
  for (const std::string& line : lines) out << "# " << line << '\n';
}

// leading '#' comment lines of a file, without the marker
std::vector<std::string> read_leading_comments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("# ", 0) == 0) lines.push_back(line.substr(2));
    else if (line.rfind("#", 0) == 0) lines.push_back(line.substr(1));
    else break;
  }
  return lines;
}

// ---------------------------------------------------------------------------
// shared ingestion: zones + adjacency -> model inputs

struct LoadedData {
  ZoneTable table;
  WeightMatrix W;
  std::vector<std::string> warnings;
};

LoadedData load_inputs(const std::string& zones_path, const std::string& adjacency_path) {
  std::ifstream zin(zones_path);
  if (!zin) throw ValidationError("zones: cannot open '" + zones_path + "'");
  ZoneTableResult zones = read_zone_table(zin);

  std::ifstream ain(adjacency_path);
  if (!ain) throw ValidationError("adjacency: cannot open '" + adjacency_path + "'");
  std::vector<AdjacencyRecord> records = read_adjacency(ain);

  LoadedData out;
  out.warnings = zones.warnings;

  // Records touching zones that were dropped for having no arterials are
  // skipped with a warning; genuinely unknown ids still fail below.
  if (!zones.dropped_ids.empty()) {
    const std::set<std::string> dropped(zones.dropped_ids.begin(), zones.dropped_ids.end());
    std::vector<AdjacencyRecord> kept;
    int skipped = 0;
    for (AdjacencyRecord& rec : records) {
      if (dropped.count(rec.zone_i) || dropped.count(rec.zone_j)) {
        ++skipped;
        continue;
      }
      kept.push_back(std::move(rec));
    }
    if (skipped > 0)
      out.warnings.push_back(std::to_string(skipped) +
                             " adjacency records referencing excluded zones ignored");
    records = std::move(kept);
  }

  WeightMatrixResult wm = build_weight_matrix(records, zones.table);
  for (const std::string& w : wm.warnings) out.warnings.push_back(w);
  out.table = std::move(zones.table);
  out.W = std::move(wm.W);
  return out;
}

void report_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
}

int fail_on_strict(bool strict, const std::vector<std::string>& warnings) {
  if (strict && !warnings.empty()) {
    std::cerr << "error: warnings present and --strict given\n";
    return kExitError;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// summary / diagnostics writers

bool is_phi_column(const std::string& name) { return name.rfind("phi_", 0) == 0; }

void write_summary_file(std::ostream& out, const std::vector<std::string>& comments,
                        const FitSummary& summary) {
  write_comment_block(out, comments);
  out << "parameter,mean,sd,q025,q975,significant\n";
  for (const ParamSummary& row : summary.rows) {
    if (is_phi_column(row.name)) continue;  // per-zone effects live in the draws file
    out << row.name << ',' << format_double(row.mean) << ',' << format_double(row.sd) << ','
        << format_double(row.q025) << ',' << format_double(row.q975) << ','
        << (row.significant ? "true" : "false") << '\n';
  }
}

void write_diagnostics_file(std::ostream& out, const std::vector<std::string>& comments,
                            const std::vector<ChainDraws>& chains) {
  write_comment_block(out, comments);
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (const auto& [block, rate] : chains[c].acceptance)
      out << "# acceptance chain " << c << ' ' << block << ' ' << format_double(rate) << '\n';
  out << "chain,parameter,ess,geweke_z\n";
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const ChainDraws& draws = chains[c];
    for (std::size_t j = 0; j < draws.names.size(); ++j) {
      std::string ess_text = "nan";
      std::string z_text = "nan";
      const Eigen::VectorXd col = draws.draws.col(static_cast<Eigen::Index>(j));
      try {
        ess_text = format_double(ess(col));
      } catch (const DiagnosticError&) {
      }
      try {
        z_text = format_double(geweke_z(col));
      } catch (const DiagnosticError&) {
      }
      out << c << ',' << draws.names[j] << ',' << ess_text << ',' << z_text << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// subcommand bodies

struct FitArgs {
  std::string zones_path;
  std::string adjacency_path;
  std::string config_path;
  std::string out_dir = ".";
  bool strict = false;
  std::optional<long long> seed, iterations, burn_in, thin, chains;
};

int run_fit(const FitArgs& args) {
  RunConfig config;
  if (!args.config_path.empty()) config.load(read_config_file(args.config_path));
  if (args.seed) config.sampler.seed = static_cast<std::uint64_t>(*args.seed);
  if (args.iterations) config.sampler.iterations = static_cast<int>(*args.iterations);
  if (args.burn_in) config.sampler.burn_in = static_cast<int>(*args.burn_in);
  if (args.thin) config.sampler.thin = static_cast<int>(*args.thin);
  if (args.chains) config.chains = static_cast<int>(*args.chains);
  config.sampler.validate();
  config.priors.validate();
  config.covariates.validate();

  const LoadedData loaded = load_inputs(args.zones_path, args.adjacency_path);
  report_warnings(loaded.warnings);
  if (const int rc = fail_on_strict(args.strict, loaded.warnings)) return rc;

  const ModelData data = make_model_data(loaded.table, loaded.W, config.covariates);

  std::vector<ChainDraws> chains;
  if (config.chains == 1) {
    chains.push_back(run_chain(config.sampler, data, config.priors));
  } else {
    chains = run_chains(config.sampler, config.chains, data, config.priors);
  }
  const ChainDraws combined = config.chains == 1 ? chains[0] : concat_draws(chains);
  const FitSummary summary = summarize(combined);

  // convergence concerns become in-file warnings, never a different exit
  // code without --strict
  std::vector<std::string> diag_warnings;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (std::size_t j = 0; j < chains[c].names.size(); ++j) {
      try {
        const double z = geweke_z(chains[c].draws.col(static_cast<Eigen::Index>(j)));
        if (std::fabs(z) >= 3.0) {
          std::ostringstream w;
          w << "convergence concern: |geweke z| = " << std::fabs(z) << " for "
            << chains[c].names[j] << " (chain " << c << ")";
          diag_warnings.push_back(w.str());
        }
      } catch (const DiagnosticError&) {
        // constant or short columns (fixed parameters, islands) have no score
      }
    }
  }
  report_warnings(diag_warnings);

  const std::string digest = fnv1a_hex(config.canonical());
  std::vector<std::string> comments =
      provenance_header(config.sampler.seed, digest, loaded.warnings);
  if (config.chains > 1)
    comments.push_back("chains " + std::to_string(config.chains) +
                       " (post-burn-in draws concatenated)");
  comments.push_back("CAR effects reported as sd_phi: the population standard deviation "
                     "of each draw's spatial effects");
  for (const std::string& w : diag_warnings) comments.push_back("warning: " + w);

  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  {
    std::ofstream out(dir / "summary.csv");
    write_summary_file(out, comments, summary);
  }
  {
    std::ofstream out(dir / "draws.csv");
    write_draws(out, combined, comments);
  }
  {
    std::ofstream out(dir / "diagnostics.csv");
    write_diagnostics_file(out, comments, chains);
  }
  return fail_on_strict(args.strict, diag_warnings);
}

struct SimulateArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<long long> seed, rows, cols;
};

int run_simulate(const SimulateArgs& args) {
  TruthSpec spec = TruthSpec::defaults();
  std::uint64_t seed = 0;
  if (!args.config_path.empty()) {
    const auto kv = read_config_file(args.config_path);
    for (const auto& [key, value] : kv) {
      if (key == "rows") spec.rows = static_cast<int>(parse_ll(key, value));
      else if (key == "cols") spec.cols = static_cast<int>(parse_ll(key, value));
      else if (key == "cells") spec.cells = static_cast<int>(parse_ll(key, value));
      else if (key == "zero_arterial") spec.zero_arterial = static_cast<int>(parse_ll(key, value));
      else if (key == "lanes_min") spec.lanes_min = static_cast<int>(parse_ll(key, value));
      else if (key == "lanes_max") spec.lanes_max = static_cast<int>(parse_ll(key, value));
      else if (key == "k_true") spec.k_true = parse_real(key, value);
      else if (key == "tau_true") spec.tau_true = parse_real(key, value);
      else if (key == "target_sd_phi") spec.target_sd_phi = parse_real(key, value);
      else if (key == "seed") seed = static_cast<std::uint64_t>(parse_ll(key, value));
      else if (key == "beta_true") {
        const auto items = split_list(value);
        spec.beta_true.resize(static_cast<Eigen::Index>(items.size()));
        for (std::size_t i = 0; i < items.size(); ++i)
          spec.beta_true[static_cast<Eigen::Index>(i)] = parse_real(key, items[i]);
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    }
  }
  if (args.seed) seed = static_cast<std::uint64_t>(*args.seed);
  if (args.rows) spec.rows = static_cast<int>(*args.rows);
  if (args.cols) spec.cols = static_cast<int>(*args.cols);
  if (args.rows || args.cols) {
    // explicit dims mean a plain whole lattice, no excluded cells
    spec.cells = spec.rows * spec.cols;
    spec.zero_arterial = 0;
  }
  spec.validate();

  const SyntheticDataset ds = generate_dataset(spec, seed);
  report_warnings(ds.warnings);

  std::ostringstream canon;
  canon << "rows=" << spec.rows << "\ncols=" << spec.cols << "\ncells=" << spec.cells
        << "\nzero_arterial=" << spec.zero_arterial << "\nlanes=" << spec.lanes_min << ".."
        << spec.lanes_max << "\nk_true=" << format_double(spec.k_true)
        << "\ntau=" << format_double(ds.tau) << "\nseed=" << seed << '\n';
  const std::vector<std::string> comments =
      provenance_header(seed, fnv1a_hex(canon.str()), ds.warnings);

  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  {
    std::ofstream out(dir / "zones.csv");
    write_comment_block(out, comments);
    write_zone_table(out, ds.zones);
  }
  {
    std::ofstream out(dir / "adjacency.csv");
    write_comment_block(out, comments);
    write_adjacency(out, ds.adjacency);
  }
  {
    std::ofstream out(dir / "truth.csv");
    write_comment_block(out, comments);
    write_truth(out, ds.truth);
  }
  return kExitOk;
}

int run_summarize(const std::string& draws_path, const std::string& out_path) {
  std::ifstream in(draws_path);
  if (!in) throw ValidationError("draws: cannot open '" + draws_path + "'");
  const std::vector<std::string> comments = read_leading_comments(draws_path);
  const ChainDraws draws = read_draws(in);
  const FitSummary summary = summarize(draws);
  if (out_path.empty() || out_path == "-") {
    write_summary_file(std::cout, comments, summary);
  } else {
    std::ofstream out(out_path);
    if (!out) throw ValidationError("summary: cannot open '" + out_path + "' for writing");
    write_summary_file(out, comments, summary);
  }
  return kExitOk;
}

int run_stats(const std::string& zones_path, const std::string& out_path) {
  std::ifstream in(zones_path);
  if (!in) throw ValidationError("zones: cannot open '" + zones_path + "'");
  const ZoneTableResult zones = read_zone_table(in);
  report_warnings(zones.warnings);
  const StatsReport report = descriptive_stats(zones.table);

  std::vector<std::string> comments = provenance_header(0, fnv1a_hex("stats"), zones.warnings);
  comments.push_back("zones " + std::to_string(report.n));
  if (report.single_row) comments.push_back("single-row table: sd reported as 0 by convention");

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty() && out_path != "-") {
    file.open(out_path);
    if (!file) throw ValidationError("stats: cannot open '" + out_path + "' for writing");
    out = &file;
  }
  write_comment_block(*out, comments);
  *out << "variable,mean,min,max,sd\n";
  for (const VariableStats& v : report.variables)
    *out << v.name << ',' << format_double(v.mean) << ',' << format_double(v.min) << ','
         << format_double(v.max) << ',' << format_double(v.sd) << '\n';
  return kExitOk;
}

int run_check(const std::string& zones_path, const std::string& adjacency_path, bool strict) {
  const LoadedData loaded = load_inputs(zones_path, adjacency_path);
  std::cout << "zones: " << loaded.table.size() << '\n';
  std::cout << "edges: " << loaded.W.edges().size() << '\n';
  std::cout << "islands: " << (loaded.table.size() - loaded.W.non_island_count()) << '\n';
  std::cout << "components: " << loaded.W.connected_components() << '\n';
  for (const std::string& w : loaded.warnings) std::cout << "warning: " << w << '\n';
  if (loaded.warnings.empty()) std::cout << "no warnings\n";
  return fail_on_strict(strict, loaded.warnings);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian negative binomial CAR model for zone-level crash counts"};
  app.require_subcommand(1);

  FitArgs fit_args;
  long long seed_flag = 0, iter_flag = 0, burn_flag = 0, thin_flag = 0, chains_flag = 0;

  CLI::App* fit = app.add_subcommand("fit", "fit the model to zones + adjacency files");
  fit->add_option("--zones", fit_args.zones_path, "zones csv")->required();
  fit->add_option("--adjacency", fit_args.adjacency_path, "adjacency csv")->required();
  fit->add_option("--config", fit_args.config_path, "key = value run configuration");
  fit->add_option("--out-dir", fit_args.out_dir, "directory for summary/draws/diagnostics");
  fit->add_option("--seed", seed_flag, "RNG seed (overrides config)");
  fit->add_option("--iterations", iter_flag, "MCMC iterations (overrides config)");
  fit->add_option("--burn-in", burn_flag, "burn-in iterations (overrides config)");
  fit->add_option("--thin", thin_flag, "thinning interval (overrides config)");
  fit->add_option("--chains", chains_flag, "independent chains (overrides config)");
  fit->add_flag("--strict", fit_args.strict, "treat warnings as errors");

  SimulateArgs sim_args;
  long long sim_seed = 0, sim_rows = 0, sim_cols = 0;
  CLI::App* simulate = app.add_subcommand("simulate", "write a synthetic zones/adjacency/truth set");
  simulate->add_option("--config", sim_args.config_path, "key = value truth configuration");
  simulate->add_option("--out-dir", sim_args.out_dir, "output directory");
  simulate->add_option("--seed", sim_seed, "RNG seed (overrides config)");
  simulate->add_option("--rows", sim_rows, "lattice rows");
  simulate->add_option("--cols", sim_cols, "lattice cols");

  std::string draws_path, out_path;
  CLI::App* summarize_cmd = app.add_subcommand("summarize", "recompute the summary from a draws file");
  summarize_cmd->add_option("--draws", draws_path, "draws csv")->required();
  summarize_cmd->add_option("--out", out_path, "output file (default stdout)");

  std::string stats_zones, stats_out;
  CLI::App* stats = app.add_subcommand("stats", "descriptive statistics of a zones file");
  stats->add_option("--zones", stats_zones, "zones csv")->required();
  stats->add_option("--out", stats_out, "output file (default stdout)");

  std::string check_zones, check_adjacency;
  bool check_strict = false;
  CLI::App* check = app.add_subcommand("check", "validate inputs without fitting");
  check->add_option("--zones", check_zones, "zones csv")->required();
  check->add_option("--adjacency", check_adjacency, "adjacency csv")->required();
  check->add_flag("--strict", check_strict, "treat warnings as errors");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) {
      if (fit->count("--seed")) fit_args.seed = seed_flag;
      if (fit->count("--iterations")) fit_args.iterations = iter_flag;
      if (fit->count("--burn-in")) fit_args.burn_in = burn_flag;
      if (fit->count("--thin")) fit_args.thin = thin_flag;
      if (fit->count("--chains")) fit_args.chains = chains_flag;
      return run_fit(fit_args);
    }
    if (simulate->parsed()) {
      if (simulate->count("--seed")) sim_args.seed = sim_seed;
      if (simulate->count("--rows")) sim_args.rows = sim_rows;
      if (simulate->count("--cols")) sim_args.cols = sim_cols;
      return run_simulate(sim_args);
    }
    if (summarize_cmd->parsed()) return run_summarize(draws_path, out_path);
    if (stats->parsed()) return run_stats(stats_zones, stats_out);
    if (check->parsed()) return run_check(check_zones, check_adjacency, check_strict);
  } catch (const SamplerAbort& e) {
    std::cerr << "sampler abort: " << e.what() << '\n';
    return kExitSamplerAbort;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
