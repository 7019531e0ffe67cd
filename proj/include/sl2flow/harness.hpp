#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sl2flow/stats.hpp"

namespace sl2flow {

/// Parameters of every command. JSON keys equal the member names.
struct RunConfig {
  std::uint64_t seed = 20260101;
  int workers = 1;
  std::string out = ".";
  double dt = 1e-3;
  double eps = 0.5;

  // sl2-sim, scalar-sim
  double tau_end = 2.0;
  std::size_t n_paths = 10000;
  int n_report = 20;
  bool export_path = false;
  double kappa_sym = 0.25;
  double kappa_skew = 0.5;

  // field-sample, couple-check, corrector-run
  double torus_side = 804.247719318987;  // 256 pi
  int grid_n = 512;
  double L = 7.38905609893065;  // e^2
  std::size_t n_realizations = 1000;
  int shells_per_efold = 32;

  // pde-run and the duality check
  double T = 10.0;
  double pde_dt = 0.05;
  double particle_dt = 0.01;
  std::size_t n_particles = 10000;
  double pde_torus_side = 100.530964914873;  // 32 pi
  int pde_grid_n = 128;
  int oversample = 4;
  std::vector<double> x = {2.0, 0.0};

  // accept: subset of criteria to run (empty: all)
  std::vector<int> criteria;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Applies the keys of a JSON object to `config`; unknown keys and wrong
/// types throw ConfigError.
void apply_config_json(RunConfig& config, const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  double seconds = 0.0;
  std::vector<MomentReport> reports;
};

/// Runs the acceptance criteria (all, or config.criteria). Progress lines
/// go to `log` when non-null.
std::vector<CriterionResult> run_acceptance(const RunConfig& config,
                                            std::ostream* log = nullptr);

/// JSON array of MomentReport records, each tagged with its criterion.
std::string acceptance_report_json(const std::vector<CriterionResult>& results);

/// One line per criterion: "criterion <id> <PASS|FAIL> <title> (<s> s)".
std::string criterion_line(const CriterionResult& r);

// Command drivers; each writes CSV into config.out and returns the exit
// status (0, or 1 when a reported check fails).
int command_sl2_sim(const RunConfig& config, std::ostream& log);
int command_scalar_sim(const RunConfig& config, std::ostream& log);
int command_field_sample(const RunConfig& config, std::ostream& log);
int command_couple_check(const RunConfig& config, std::ostream& log);
int command_corrector_run(const RunConfig& config, std::ostream& log);
int command_pde_run(const RunConfig& config, std::ostream& log);
int command_accept(const RunConfig& config, std::ostream& log);

}  // namespace sl2flow
