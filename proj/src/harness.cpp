#include "sl2flow/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "sl2flow/corrector.hpp"
#include "sl2flow/drift.hpp"
#include "sl2flow/errors.hpp"
#include "sl2flow/field.hpp"
#include "sl2flow/parallel.hpp"
#include "sl2flow/rng.hpp"
#include "sl2flow/scalar.hpp"
#include "sl2flow/sl2.hpp"

namespace sl2flow {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

template <class T>
void read_key(const json& j, const char* key, T& out) {
  try {
    out = j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ConfigError(std::string(name) + " must be a positive number");
  };
  positive(dt, "dt");
  if (!(eps >= 0.0)) throw ConfigError("eps must be >= 0");
  positive(tau_end, "tau_end");
  positive(torus_side, "torus_side");
  positive(L, "L");
  if (L < 1.0) throw ConfigError("L must be >= 1");
  positive(T, "T");
  positive(pde_dt, "pde_dt");
  positive(particle_dt, "particle_dt");
  positive(pde_torus_side, "pde_torus_side");
  if (workers < 0) throw ConfigError("workers must be >= 0");
  if (n_paths < 2) throw ConfigError("n_paths must be >= 2");
  if (n_realizations < 2) throw ConfigError("n_realizations must be >= 2");
  if (n_particles < 2) throw ConfigError("n_particles must be >= 2");
  if (n_report < 1) throw ConfigError("n_report must be >= 1");
  if (shells_per_efold < 1) throw ConfigError("shells_per_efold must be >= 1");
  if (oversample < 1) throw ConfigError("oversample must be >= 1");
  if (kappa_sym < 0.0 || kappa_skew < 0.0) throw ConfigError("kappas must be >= 0");
  if (x.size() != 2) throw ConfigError("x must have two components");
  for (int c : criteria)
    if (c < 1 || c > 12) throw ConfigError("criteria must lie in 1..12");
}

void apply_config_json(RunConfig& c, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    const char* k = key.c_str();
    if (key == "seed") read_key(v, k, c.seed);
    else if (key == "workers") read_key(v, k, c.workers);
    else if (key == "out") read_key(v, k, c.out);
    else if (key == "dt") read_key(v, k, c.dt);
    else if (key == "eps") read_key(v, k, c.eps);
    else if (key == "tau_end") read_key(v, k, c.tau_end);
    else if (key == "n_paths") read_key(v, k, c.n_paths);
    else if (key == "n_report") read_key(v, k, c.n_report);
    else if (key == "export_path") read_key(v, k, c.export_path);
    else if (key == "kappa_sym") read_key(v, k, c.kappa_sym);
    else if (key == "kappa_skew") read_key(v, k, c.kappa_skew);
    else if (key == "torus_side") read_key(v, k, c.torus_side);
    else if (key == "grid_n") read_key(v, k, c.grid_n);
    else if (key == "L") read_key(v, k, c.L);
    else if (key == "n_realizations") read_key(v, k, c.n_realizations);
    else if (key == "shells_per_efold") read_key(v, k, c.shells_per_efold);
    else if (key == "T") read_key(v, k, c.T);
    else if (key == "pde_dt") read_key(v, k, c.pde_dt);
    else if (key == "particle_dt") read_key(v, k, c.particle_dt);
    else if (key == "n_particles") read_key(v, k, c.n_particles);
    else if (key == "pde_torus_side") read_key(v, k, c.pde_torus_side);
    else if (key == "pde_grid_n") read_key(v, k, c.pde_grid_n);
    else if (key == "oversample") read_key(v, k, c.oversample);
    else if (key == "x") read_key(v, k, c.x);
    else if (key == "criteria") read_key(v, k, c.criteria);
    else throw ConfigError("unknown config key '" + key + "'");
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c;
  apply_config_json(c, ss.str());
  return c;
}

namespace {

MomentReport exact_check(std::string name, std::size_t n, double value, double reference,
                         double tol, std::string source) {
  MomentReport r;
  r.name = std::move(name);
  r.n_samples = n;
  r.mean = value;
  r.analytic_reference = reference;
  r.reference_source = std::move(source);
  r.pass = std::abs(value - reference) <= tol;
  return r;
}

MomentReport stat_check(std::string name, std::span<const double> samples,
                        double reference, std::string source, double z_max = 3.0) {
  auto r = mc_mean(std::move(name), samples);
  r.compare_to(reference, std::move(source), z_max);
  return r;
}

MomentReport covariance_check(std::string name, std::span<const double> a,
                              std::span<const double> b, double reference,
                              std::string source, double z_max) {
  const auto e = product_moment(a, b);
  MomentReport r;
  r.name = std::move(name);
  r.n_samples = a.size();
  r.mean = e.value;
  r.std_error = e.std_error;
  r.compare_to(reference, std::move(source), z_max);
  return r;
}

MomentReport diagnostic(std::string name, std::span<const double> samples,
                        std::optional<double> reference = std::nullopt) {
  auto r = mc_mean(std::move(name), samples);
  r.reference_source = "diagnostic (non-gating)";
  if (reference) {
    r.analytic_reference = *reference;
    if (r.std_error > 0.0) r.z_score = (r.mean - *reference) / r.std_error;
  }
  r.pass = true;
  return r;
}

int workers_of(const RunConfig& c) { return c.workers == 0 ? default_workers() : c.workers; }

CovarianceSpec covariance_of(const RunConfig& c) {
  auto cov = CovarianceSpec::from_kappas(c.kappa_sym, c.kappa_skew);
  cov.validate();
  return cov;
}

bool wanted(const RunConfig& c, int id) {
  return c.criteria.empty() ||
         std::find(c.criteria.begin(), c.criteria.end(), id) != c.criteria.end();
}

// Stream families of the acceptance suite.
enum Family : std::uint64_t {
  kMatrixPaths = 1,
  kDetPath,
  kSymmetricG,
  kScalarPaths,
  kGbmSamples,
  kMassSamples,
  kTriples,
  kFields,
  kDualityField,
  kDualityParticles,
  kDiagFields,
  kDiagParticles,
};

std::uint64_t family_seed(const RunConfig& c, Family f) { return derive_seed(c.seed, f); }

struct MatrixSample {
  double F2[3];
  double R1 = 0.0;
  double R2 = 0.0;
};

struct FieldSample {
  AlgebraVector B_e;
  AlgebraVector dB;
  double F2_e = 0.0;
  double F2_e2 = 0.0;
};

struct TripleCounts {
  int bessel = 0;
  int gbm = 0;
  int twice_r = 0;
  int at_one = 0;
};

class Acceptance {
 public:
  Acceptance(const RunConfig& c, std::ostream* log) : c_(c), log_(log) {}

  std::vector<CriterionResult> run() {
    const std::pair<int, const char*> titles[] = {
        {1, "determinant preservation"},
        {2, "normalization E|F|^2 = 2 e^tau"},
        {3, "second moment of R"},
        {4, "trace identity"},
        {5, "law equivalence of R (KS)"},
        {6, "GBM moments and moment domination"},
        {7, "mass concentration"},
        {8, "pathwise comparisons and strict positivity"},
        {9, "coupling covariance"},
        {10, "proxy-corrector law identification"},
        {11, "PDE-particle duality"},
        {12, "non-gating diagnostics present"},
    };
    std::vector<CriterionResult> out;
    for (const auto& [id, title] : titles) {
      if (!wanted(c_, id)) continue;
      CriterionResult r;
      r.id = id;
      r.title = title;
      const auto t0 = std::chrono::steady_clock::now();
      r.reports = dispatch(id);
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      r.pass = !r.reports.empty();
      for (const auto& m : r.reports) r.pass = r.pass && m.pass;
      if (log_) *log_ << criterion_line(r) << std::endl;
      out.push_back(std::move(r));
    }
    return out;
  }

 private:
  std::vector<MomentReport> dispatch(int id) {
    switch (id) {
      case 1: return c1();
      case 2: return c2();
      case 3: return c3();
      case 4: return c4();
      case 5: return c5();
      case 6: return c6();
      case 7: return c7();
      case 8: return c8();
      case 9: return c9();
      case 10: return c10();
      case 11: return c11();
      default: return c12();
    }
  }

  // One batch of 1e5 matrix paths to tau = 2 serves criteria 2, 3, 5, 6, 7.
  const std::vector<MatrixSample>& matrix_samples() {
    if (!matrix_.empty()) return matrix_;
    const auto cov = covariance_of(c_);
    const double dt = 1e-3;
    const std::uint64_t seed = family_seed(c_, kMatrixPaths);
    matrix_ = map_parallel(100000, workers_of(c_), [&](std::size_t i) {
      MatrixSample s{};
      integrate_F(0.0, 2.0, dt, cov, derive_seed(seed, i), [&](double tau, const Sl2Matrix& F) {
        const double n2 = F.matrix().norm2();
        if (std::abs(tau - 0.5) < 1e-9) s.F2[0] = n2;
        if (std::abs(tau - 1.0) < 1e-9) {
          s.F2[1] = n2;
          s.R1 = 0.5 * n2;
        }
        if (std::abs(tau - 2.0) < 1e-9) {
          s.F2[2] = n2;
          s.R2 = 0.5 * n2;
        }
      });
      return s;
    });
    return matrix_;
  }

  std::vector<double> column(double (*get)(const MatrixSample&)) {
    const auto& m = matrix_samples();
    std::vector<double> v(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) v[i] = get(m[i]);
    return v;
  }

  std::vector<MomentReport> c1() {
    const auto cov = covariance_of(c_);
    double worst = 0.0;
    std::size_t n = 0;
    integrate_F(0.0, 2.0, 1e-3, cov, family_seed(c_, kDetPath),
                [&](double, const Sl2Matrix& F) {
                  worst = std::max(worst, std::abs(F.det() - 1.0));
                  ++n;
                });
    return {exact_check("max |det F - 1| over a tau=2 path, dt=1e-3", n, worst, 0.0, 1e-12,
                        "deterministic invariant, tolerance 1e-12")};
  }

  std::vector<MomentReport> c2() {
    const double taus[3] = {0.5, 1.0, 2.0};
    std::vector<MomentReport> out;
    for (int k = 0; k < 3; ++k) {
      std::vector<double> v;
      v.reserve(matrix_samples().size());
      for (const auto& s : matrix_samples()) v.push_back(s.F2[k]);
      const double ref = 2.0 * std::exp(taus[k]);
      std::ostringstream name;
      name << "E|F|^2 at tau=" << taus[k] << ", dt=1e-3";
      auto r = stat_check(name.str(), v, ref, "analytic 2 e^tau; also |rel. bias| <= 2%");
      r.pass = r.pass && std::abs(r.mean / ref - 1.0) <= 0.02;
      out.push_back(r);
    }
    // The MC bias (~1e-6 relative) is far below the MC error, so the bias
    // trend is checked on the exact mean of the discrete scheme.
    const auto cov = covariance_of(c_);
    auto scheme_bias = [&](double dt) {
      const double steps = std::round(2.0 / dt);
      return 2.0 * std::pow(scheme_norm_growth(dt, cov), steps) / (2.0 * std::exp(2.0)) - 1.0;
    };
    const double b1 = scheme_bias(1e-3);
    const double b2 = scheme_bias(5e-4);
    MomentReport r;
    r.name = "exact scheme bias of E|F|^2 at tau=2: dt=5e-4 vs dt=1e-3";
    r.n_samples = 2;
    r.mean = b2;
    r.analytic_reference = b1;
    r.reference_source = "quadrature of the one-step growth factor; pass iff |bias(dt/2)| < |bias(dt)|";
    r.pass = std::abs(b2) < std::abs(b1);
    out.push_back(r);
    return out;
  }

  std::vector<MomentReport> c3() {
    std::vector<double> v;
    for (const auto& s : matrix_samples()) v.push_back(s.R1 * s.R1);
    return {stat_check("E R^2 at tau=1", v, (2.0 * std::exp(3.0) + 1.0) / 3.0,
                       "moment ODE y' = 3y - 1: (2 e^{3 tau} + 1)/3")};
  }

  std::vector<MomentReport> c4() {
    auto rng = seed_stream(family_seed(c_, kSymmetricG), 0);
    NormalSampler normal;
    double worst = 0.0;
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = normal(rng), b = normal(rng), d = normal(rng);
      worst = std::max(worst, std::abs(check_trace_identity({a, b, b, d})));
    }
    return {exact_check("max trace-identity residual over 1e4 symmetric G", n, worst, 0.0,
                        1e-12, "deterministic identity, tolerance 1e-12")};
  }

  std::vector<MomentReport> c5() {
    const std::size_t n = 10000;
    const std::uint64_t seed = family_seed(c_, kScalarPaths);
    const auto scalar = map_parallel(n, workers_of(c_), [&](std::size_t i) {
      return simulate_R_scalar(1.0, 1e-3, derive_seed(seed, i)).values.back();
    });
    std::vector<double> matrix(n);
    for (std::size_t i = 0; i < n; ++i) matrix[i] = matrix_samples()[i].R1;
    const auto ks = ks_two_sample(scalar, matrix);
    MomentReport r;
    r.name = "two-sample KS p-value, scalar R vs matrix R at tau=1 (1e4 each)";
    r.n_samples = 2 * n;
    r.mean = ks.p_value;
    r.analytic_reference = 0.01;
    r.reference_source = "pass iff p > 0.01";
    r.pass = ks.p_value > 0.01;
    auto a = mc_mean("E R at tau=1, scalar Euler", scalar);
    a.compare_to(std::exp(1.0), "analytic e^tau");
    return {r, a};
  }

  std::vector<MomentReport> c6() {
    std::vector<MomentReport> out;
    for (double p : {1.0, 2.0, 3.0})
      for (double tau : {0.5, 1.0}) {
        const auto q = gbm_moment_quadrature(p, tau);
        const double ref = gbm_moment(p, tau);
        std::ostringstream name;
        name << "quadrature E S^" << p << " at tau=" << tau << ", relative error";
        out.push_back(exact_check(name.str(), 1, q.value / ref - 1.0, 0.0, 1e-10,
                                  "analytic e^{p(p+1) tau/2}, tolerance 1e-10"));
      }
    const std::uint64_t seed = family_seed(c_, kGbmSamples);
    const auto s2 = map_parallel(1000000, workers_of(c_), [&](std::size_t i) {
      auto rng = seed_stream(seed, i);
      NormalSampler normal;
      const double s = gbm_exact(1.0, normal(rng));
      return s * s;
    });
    out.push_back(stat_check("MC E S^2 at tau=1 (exact sampling, 1e6)", s2, gbm_moment(2.0, 1.0),
                             "analytic e^{p(p+1) tau/2}"));
    for (double p : {2.0, 3.0}) {
      std::vector<double> v;
      for (const auto& s : matrix_samples()) v.push_back(std::pow(s.R1, p));
      auto r = mc_mean("E R^" + std::to_string(static_cast<int>(p)) + " at tau=1 <= E S^p + 3 SE",
                       v);
      const double ref = gbm_moment(p, 1.0);
      r.analytic_reference = ref;
      r.z_score = (r.mean - ref) / r.std_error;
      r.reference_source = "analytic E S^p; one-sided bound";
      r.pass = r.mean <= ref + 3.0 * r.std_error;
      out.push_back(r);
    }
    return out;
  }

  std::vector<MomentReport> c7() {
    std::vector<MomentReport> out;
    for (double tau : {1.0, 4.0}) {
      const auto q = mass_concentration_quadrature(tau);
      out.push_back(exact_check("quadrature mass fraction above (E S)^{3/2} at tau=" +
                                    std::to_string(static_cast<int>(tau)),
                                1, q.value, 0.5, 1e-10, "analytic 1/2, tolerance 1e-10"));
      const std::uint64_t seed = derive_seed(family_seed(c_, kMassSamples), tau == 1.0 ? 1 : 4);
      const double threshold = std::exp(1.5 * tau);
      const double mean = std::exp(tau);
      const auto v = map_parallel(1000000, workers_of(c_), [&](std::size_t i) {
        auto rng = seed_stream(seed, i);
        NormalSampler normal;
        const double s = gbm_exact(tau, std::sqrt(tau) * normal(rng));
        return s >= threshold ? s / mean : 0.0;
      });
      out.push_back(stat_check("MC mass fraction at tau=" + std::to_string(static_cast<int>(tau)),
                               v, 0.5, "analytic 1/2"));
    }
    const double meanR = std::exp(2.0);
    const double threshold = 0.5 * std::pow(meanR, 1.5);
    std::vector<double> v;
    for (const auto& s : matrix_samples()) v.push_back(s.R2 >= threshold ? s.R2 / meanR : 0.0);
    auto r = mc_mean("matrix-R mass fraction above (E R)^{3/2}/2 at tau=2", v);
    r.analytic_reference = 0.25;
    r.z_score = (r.mean - 0.25) / r.std_error;
    r.reference_source = "lower bound 1/4; pass iff estimate >= 0.25 - 3 SE";
    r.pass = r.mean >= 0.25 - 3.0 * r.std_error;
    out.push_back(r);
    return out;
  }

  std::vector<MomentReport> c8() {
    const double dt = 1e-4;
    const double slack = 10.0 * dt;
    const std::uint64_t seed = family_seed(c_, kTriples);
    const std::size_t n = 10000;
    const auto counts = map_parallel(n, workers_of(c_), [&](std::size_t i) {
      const auto t = simulate_comparison_triple(2.0, dt, derive_seed(seed, i));
      TripleCounts c;
      for (std::size_t k = 0; k < t.x.values.size(); ++k) {
        const double st = t.s_tilde.values[k];
        const double s = t.s.values[k];
        const double R = R_of_S(st);
        if (std::log(st) < t.x.values[k] - slack) ++c.bessel;
        if (st < s * (1.0 - slack)) ++c.gbm;
        if (2.0 * R < s * (1.0 - slack)) ++c.twice_r;
        if (t.x.tau_grid[k] >= 0.1 && R <= 1.0) ++c.at_one;
      }
      return c;
    });
    TripleCounts total;
    for (const auto& c : counts) {
      total.bessel += c.bessel;
      total.gbm += c.gbm;
      total.twice_r += c.twice_r;
      total.at_one += c.at_one;
    }
    const char* src = "pathwise comparison; pass iff zero violations";
    return {exact_check("violations of ln S~ >= X - 10 dt (1e4 triples, tau=2, dt=1e-4)", n,
                        total.bessel, 0.0, 0.0, src),
            exact_check("violations of S~ >= S (1 - 10 dt)", n, total.gbm, 0.0, 0.0, src),
            exact_check("violations of 2R >= S (1 - 10 dt)", n, total.twice_r, 0.0, 0.0, src),
            exact_check("R-path states equal to 1 at tau >= 0.1", n, total.at_one, 0.0, 0.0,
                        "strict positivity; pass iff none")};
  }

  // Shared by criteria 9 and 10: eps = 0.5, band down to 1/e^2.
  const std::vector<FieldSample>& field_samples() {
    if (!fields_.empty()) return fields_;
    const std::uint64_t seed = family_seed(c_, kFields);
    const double L2 = std::exp(2.0);
    const std::vector<double> grid{0.0, 1.0, 2.0};
    fields_ = map_parallel(10000, workers_of(c_), [&](std::size_t i) {
      const auto f = sample_field(0.5, L2, c_.torus_side, c_.grid_n, derive_seed(seed, i));
      const auto B = coupled_B_path(f, grid);
      FieldSample s;
      s.B_e = B.values[1];
      s.dB = B.values[2] - B.values[1];
      s.F2_e = run_corrector(f, std::exp(1.0), 32, false).F.norm2();
      s.F2_e2 = run_corrector(f, L2, 32, false).F.norm2();
      return s;
    });
    return fields_;
  }

  std::vector<MomentReport> c9() {
    const auto& fs = field_samples();
    const std::size_t n = fs.size();
    std::array<std::vector<double>, 3> B, dB;
    for (int a = 0; a < 3; ++a) {
      B[a].resize(n);
      dB[a].resize(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
      B[0][i] = fs[i].B_e.a1;
      B[1][i] = fs[i].B_e.a2;
      B[2][i] = fs[i].B_e.a3;
      dB[0][i] = fs[i].dB.a1;
      dB[1][i] = fs[i].dB.a2;
      dB[2][i] = fs[i].dB.a3;
    }
    const auto ct = circle_tensor();
    std::vector<MomentReport> out;
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) {
        std::ostringstream name;
        name << "Cov(B_e)[" << a + 1 << "," << b + 1 << "]";
        out.push_back(covariance_check(name.str(), B[a], B[b], ct.per_unit_lnL[a][b],
                                       "circle quadrature x ln L (= diag(1/4,1/4,1/2)); 4 SE",
                                       4.0));
      }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        std::ostringstream name;
        name << "Cov(B_e[" << a + 1 << "], B_e2 - B_e[" << b + 1 << "])";
        out.push_back(covariance_check(name.str(), B[a], dB[b], 0.0,
                                       "independent increments; 4 SE", 4.0));
      }
    const auto canonical = check_postulates(covariance_of(c_));
    const auto quad = check_postulates(std::span<const WeightedMatrix>(ct.measure));
    const auto quad_signed = check_postulates(std::span<const WeightedMatrix>(ct.signed_measure));
    const char* src = "algebraic identity, tolerance 1e-12";
    out.push_back(exact_check("configured covariance |sum w E^2|", 0, canonical.square, 0.0, 1e-12, src));
    out.push_back(exact_check("configured covariance |sum w E E^T - id|", 0, canonical.gram, 0.0, 1e-12, src));
    out.push_back(exact_check("quadrature covariance |sum w E^2|", 0, quad.square, 0.0, 1e-12, src));
    out.push_back(exact_check("quadrature covariance |sum w E E^T - id|", 0, quad.gram, 0.0, 1e-12, src));
    out.push_back(exact_check("signed quadrature form |sum w E^2|", 0, quad_signed.square, 0.0, 1e-12, src));
    out.push_back(exact_check("signed quadrature form |sum w E E^T - id|", 0, quad_signed.gram, 0.0, 1e-12, src));
    return out;
  }

  std::vector<MomentReport> c10() {
    const auto& fs = field_samples();
    std::vector<double> a, b;
    for (const auto& s : fs) {
      a.push_back(s.F2_e);
      b.push_back(s.F2_e2);
    }
    std::vector<MomentReport> out;
    for (int k = 1; k <= 2; ++k) {
      const double ref = 2.0 * std::sqrt(1.0 + 0.25 * k);  // 2 lambda(L^2 - 1), ln L = k
      auto r = mc_mean("E|F_L|^2 at L=e^" + std::to_string(k) + ", eps=0.5, 32 shells/e-fold",
                       k == 1 ? a : b);
      r.analytic_reference = ref;
      r.z_score = (r.mean - ref) / r.std_error;
      r.reference_source = "2 lambda(L^2 - 1); pass iff within 5%";
      r.pass = std::abs(r.mean / ref - 1.0) <= 0.05;
      out.push_back(r);
    }
    return out;
  }

  std::vector<MomentReport> c11() {
    const double side = c_.pde_torus_side;
    const int n = c_.pde_grid_n;
    const double T = 10.0;
    const auto f = sample_field(0.3, 0.0, side, n, family_seed(c_, kDualityField));
    PdeOptions opt;
    opt.dt = c_.pde_dt;
    opt.output_times = {T};
    const auto series = solve_phi_pde(f, T, opt);
    const auto& phi = series.back().phi;
    const BicubicField b(realize_field(f, c_.oversample * n));
    const double h = side / n;
    const Point starts[4] = {{0.0, 0.0}, {32 * h, 0.0}, {0.0, 64 * h}, {80 * h, 96 * h}};
    const std::uint64_t seed = family_seed(c_, kDualityParticles);
    std::vector<MomentReport> out;
    for (int s = 0; s < 4; ++s) {
      const auto x0 = starts[s];
      const auto ends = map_parallel(c_.n_particles, workers_of(c_), [&](std::size_t i) {
        return particle_endpoint(b, x0, T, c_.particle_dt,
                                 derive_seed(seed, static_cast<std::uint64_t>(s) << 32 | i));
      });
      const double p[2] = {phi[0].value_at(x0[0], x0[1]), phi[1].value_at(x0[0], x0[1])};
      const double budget = 0.02 * std::hypot(p[0], p[1]);
      for (int j = 0; j < 2; ++j) {
        std::vector<double> d(ends.size());
        for (std::size_t i = 0; i < ends.size(); ++i) d[i] = ends[i][j] - x0[j];
        std::ostringstream name;
        name << "E[X_t - x]_" << j + 1 << " vs phi_" << j + 1 << "(x,t), start " << s
             << ", t=10";
        auto r = mc_mean(name.str(), d);
        r.analytic_reference = p[j];
        r.z_score = (r.mean - p[j]) / r.std_error;
        r.reference_source = "corrector PDE; pass iff |diff| <= 3 SE + 2% |phi|";
        r.pass = std::abs(r.mean - p[j]) <= 3.0 * r.std_error + budget;
        out.push_back(r);
      }
    }
    return out;
  }

  // Reduced desk configuration; values are reported, not gated.
  std::vector<MomentReport> c12() {
    const double side = 32.0 * kPi;
    const int n = 64;
    const double T = 64.0;
    const std::size_t R = 8;
    const std::uint64_t seed = family_seed(c_, kDiagFields);
    struct Diag {
      double residual, stat2, stat4;
    };
    const auto d = map_parallel(R, workers_of(c_), [&](std::size_t i) {
      PdeOptions opt;
      opt.dt = 0.05;
      const auto f3 = sample_field(0.3, 0.0, side, n, derive_seed(seed, 2 * i));
      const auto s3 = solve_phi_pde(f3, T, opt);
      const auto f5 = sample_field(0.5, 0.0, side, n, derive_seed(seed, 2 * i + 1));
      const auto s5 = solve_phi_pde(f5, T, opt);
      return Diag{flow_residual(f3, s3, {2.0, 0.0}), increment_statistic(s3, {2.0, 0.0}),
                  increment_statistic(s5, {4.0, 0.0})};
    });
    std::vector<double> res, st2, st4;
    for (const auto& x : d) {
      res.push_back(x.residual);
      st2.push_back(x.stat2);
      st4.push_back(x.stat4);
    }
    std::vector<MomentReport> out;
    out.push_back(diagnostic("flow residual, eps=0.3, |x|=2, T=64 (8 fields)", res));
    out.push_back(diagnostic("increment statistic, eps=0.3, |x|=2, T=64", st2));
    const double growth = std::max(1.0, lambda_of(T, 0.5) / lambda_of(16.0, 0.5));
    out.push_back(diagnostic("increment statistic, eps=0.5, |x|=4, T=64", st4, growth));
    const auto im = intermittency_moment(st4, 2.0, 4.0, T, 0.5);
    MomentReport r;
    r.name = "intermittency moment p=2, eps=0.5, |x|=4, T=64";
    r.n_samples = st4.size();
    r.mean = im.moment;
    r.std_error = im.std_error;
    r.analytic_reference = im.reference;
    r.reference_source = "diagnostic (non-gating); ratio " + std::to_string(im.ratio);
    r.pass = true;
    out.push_back(r);

    const auto f = sample_field(0.5, 0.0, side, n, derive_seed(seed, 1000));
    const BicubicField b(realize_field(f, 4 * n));
    const double t = 100.0;
    const std::uint64_t pseed = family_seed(c_, kDiagParticles);
    const auto msd = map_parallel(2000, workers_of(c_), [&](std::size_t i) {
      const auto x = particle_endpoint(b, {0.0, 0.0}, t, 0.05, derive_seed(pseed, i));
      return (x[0] * x[0] + x[1] * x[1]) / (4.0 * t);
    });
    out.push_back(diagnostic("enhancement E|X_t - X_0|^2/(4t), eps=0.5, t=100", msd,
                             lambda_of(t, 0.5)));
    for (auto& m : out) m.pass = std::isfinite(m.mean);
    return out;
  }

  const RunConfig& c_;
  std::ostream* log_;
  std::vector<MatrixSample> matrix_;
  std::vector<FieldSample> fields_;
};

json report_json(const MomentReport& r, int criterion) {
  json j;
  j["criterion"] = criterion;
  j["name"] = r.name;
  j["n_samples"] = r.n_samples;
  j["mean"] = r.mean;
  j["std_error"] = r.std_error;
  j["analytic_reference"] = r.analytic_reference ? json(*r.analytic_reference) : json(nullptr);
  j["z_score"] = (r.z_score && std::isfinite(*r.z_score)) ? json(*r.z_score) : json(nullptr);
  j["pass"] = r.pass;
  j["reference_source"] = r.reference_source;
  return j;
}

std::filesystem::path out_file(const RunConfig& c, const std::string& name) {
  std::filesystem::path dir(c.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + c.out);
  return dir / name;
}

std::ofstream open_csv(const RunConfig& c, const std::string& name) {
  const auto path = out_file(c, name);
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << std::setprecision(12);
  return os;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const RunConfig& config, std::ostream* log) {
  config.validate();
  return Acceptance(config, log).run();
}

std::string acceptance_report_json(const std::vector<CriterionResult>& results) {
  json arr = json::array();
  for (const auto& c : results)
    for (const auto& r : c.reports) arr.push_back(report_json(r, c.id));
  return arr.dump(2);
}

std::string criterion_line(const CriterionResult& r) {
  std::ostringstream os;
  os << "criterion " << r.id << ' ' << (r.pass ? "PASS" : "FAIL") << ' ' << r.title << " ("
     << std::fixed << std::setprecision(1) << r.seconds << " s)";
  return os.str();
}

int command_sl2_sim(const RunConfig& c, std::ostream& log) {
  c.validate();
  const auto cov = covariance_of(c);
  const auto steps = static_cast<std::size_t>(std::llround(c.tau_end / c.dt));
  if (steps < 1 || std::abs(static_cast<double>(steps) * c.dt - c.tau_end) > 1e-9 * c.tau_end)
    throw ConfigError("sl2-sim: tau_end must be a multiple of dt");
  const std::size_t every = std::max<std::size_t>(1, steps / static_cast<std::size_t>(c.n_report));
  std::vector<double> taus;
  for (std::size_t k = 0; k <= steps; k += every) taus.push_back(static_cast<double>(k) * c.dt);
  if (std::abs(taus.back() - c.tau_end) > 1e-12) taus.push_back(c.tau_end);

  const auto samples = map_parallel(c.n_paths, workers_of(c), [&](std::size_t i) {
    std::vector<double> f2;
    f2.reserve(taus.size());
    std::size_t next = 0;
    integrate_F(0.0, c.tau_end, c.dt, cov, derive_seed(c.seed, i),
                [&](double tau, const Sl2Matrix& F) {
                  if (next < taus.size() && tau >= taus[next] - 1e-9 * c.dt) {
                    f2.push_back(F.matrix().norm2());
                    ++next;
                  }
                });
    return f2;
  });

  auto os = open_csv(c, "sl2_sim.csv");
  os << "tau,mean_R,se_R,mean_F2,se_F2,ref_2exp_tau,z\n";
  double last_z = 0.0;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    RunningStats f2;
    for (const auto& s : samples) f2.push(s[k]);
    const double ref = 2.0 * std::exp(taus[k]);
    last_z = f2.std_error() > 0.0 ? (f2.mean() - ref) / f2.std_error() : 0.0;
    os << taus[k] << ',' << 0.5 * f2.mean() << ',' << 0.5 * f2.std_error() << ',' << f2.mean()
       << ',' << f2.std_error() << ',' << ref << ',' << last_z << '\n';
  }
  if (c.export_path) {
    auto ps = open_csv(c, "sl2_path.csv");
    ps << std::setprecision(17) << "tau,f11,f12,f21,f22,det,R\n";
    integrate_F(0.0, c.tau_end, c.dt, cov, derive_seed(c.seed, 0),
                [&](double tau, const Sl2Matrix& F) {
                  const auto& m = F.matrix();
                  ps << tau << ',' << m.a << ',' << m.b << ',' << m.c << ',' << m.d << ','
                     << F.det() << ',' << frobenius_R(F) << '\n';
                });
  }
  log << "sl2-sim: " << c.n_paths << " paths, terminal z = " << last_z << '\n';
  return std::abs(last_z) <= 3.0 ? 0 : 1;
}

int command_scalar_sim(const RunConfig& c, std::ostream& log) {
  c.validate();
  const auto probe = simulate_R_scalar(c.tau_end, c.dt, 0);
  const std::size_t steps = probe.values.size() - 1;
  const std::size_t every = std::max<std::size_t>(1, steps / static_cast<std::size_t>(c.n_report));
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k <= steps; k += every) idx.push_back(k);
  if (idx.back() != steps) idx.push_back(steps);

  struct Row {
    std::vector<double> r, strat, s;
  };
  const auto samples = map_parallel(c.n_paths, workers_of(c), [&](std::size_t i) {
    const std::uint64_t s = derive_seed(c.seed, i);
    const auto r = simulate_R_scalar(c.tau_end, c.dt, s);
    const auto st = simulate_R_stratonovich(c.tau_end, c.dt, s);
    Row row;
    double w = 0.0;
    std::size_t next = 0;
    for (std::size_t k = 0; k <= steps; ++k) {
      if (k > 0) w += r.driver_increments[k - 1];
      if (next < idx.size() && idx[next] == k) {
        row.r.push_back(r.values[k]);
        row.strat.push_back(st.values[k]);
        row.s.push_back(gbm_exact(r.tau_grid[k], w));
        ++next;
      }
    }
    return row;
  });

  auto os = open_csv(c, "scalar_sim.csv");
  os << "tau,mean_R,se_R,mean_R_strat,se_R_strat,mean_S,se_S,ref_exp_tau,z_R\n";
  double last_z = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    RunningStats r, st, s;
    for (const auto& row : samples) {
      r.push(row.r[k]);
      st.push(row.strat[k]);
      s.push(row.s[k]);
    }
    const double tau = probe.tau_grid[idx[k]];
    const double ref = std::exp(tau);
    last_z = r.std_error() > 0.0 ? (r.mean() - ref) / r.std_error() : 0.0;
    os << tau << ',' << r.mean() << ',' << r.std_error() << ',' << st.mean() << ','
       << st.std_error() << ',' << s.mean() << ',' << s.std_error() << ',' << ref << ','
       << last_z << '\n';
  }
  log << "scalar-sim: " << c.n_paths << " paths, terminal z(R) = " << last_z << '\n';
  return std::abs(last_z) <= 3.0 ? 0 : 1;
}

int command_field_sample(const RunConfig& c, std::ostream& log) {
  c.validate();
  const auto f = sample_field(c.eps, c.L, c.torus_side, c.grid_n, c.seed, workers_of(c));
  {
    const auto path = out_file(c, "field.txt");
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    write_field_dump(os, f);
  }
  const auto real = realize_field(f);
  double grid_ms = 0.0;
  for (std::size_t k = 0; k < real.b1.size(); ++k)
    grid_ms += real.b1[k] * real.b1[k] + real.b2[k] * real.b2[k];
  grid_ms /= static_cast<double>(real.b1.size());
  double parseval = 0.0;
  for (const auto& m : f.modes) parseval += 2.0 * (std::norm(m.b1) + std::norm(m.b2));
  const double div = divergence_residual(f);
  auto os = open_csv(c, "field_summary.csv");
  os << "modes,divergence_residual,grid_mean_b2,parseval_b2\n";
  os << f.modes.size() << ',' << div << ',' << grid_ms << ',' << parseval << '\n';
  log << "field-sample: " << f.modes.size() << " modes, divergence residual " << div << '\n';
  return div == 0.0 ? 0 : 1;
}

int command_couple_check(const RunConfig& c, std::ostream& log) {
  c.validate();
  if (!(c.eps > 0.0)) throw ConfigError("couple-check: eps must be > 0");
  const double lnL = std::log(c.L);
  const std::vector<double> grid{0.0, 0.5 * lnL, lnL};
  const auto paths = map_parallel(c.n_realizations, workers_of(c), [&](std::size_t i) {
    const auto f = sample_field(c.eps, c.L, c.torus_side, c.grid_n, derive_seed(c.seed, i));
    return coupled_B_path(f, grid).values;
  });
  const auto ct = circle_tensor();
  auto os = open_csv(c, "couple_check.csv");
  os << "entry,lnL,estimate,se,reference,z\n";
  bool pass = true;
  auto comp = [](const AlgebraVector& v, int a) { return a == 0 ? v.a1 : a == 1 ? v.a2 : v.a3; };
  for (std::size_t g = 1; g < grid.size(); ++g)
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) {
        std::vector<double> x, y;
        for (const auto& p : paths) {
          x.push_back(comp(p[g], a));
          y.push_back(comp(p[g], b));
        }
        const auto e = product_moment(x, y);
        const double ref = grid[g] * ct.per_unit_lnL[a][b];
        const double z = e.std_error > 0.0 ? (e.value - ref) / e.std_error : 0.0;
        pass = pass && std::abs(z) <= 4.0;
        os << "B" << a + 1 << b + 1 << ',' << grid[g] << ',' << e.value << ',' << e.std_error
           << ',' << ref << ',' << z << '\n';
      }
  log << "couple-check: " << c.n_realizations << " realizations, "
      << (pass ? "all entries within 4 SE" : "some entries beyond 4 SE") << '\n';
  return pass ? 0 : 1;
}

int command_corrector_run(const RunConfig& c, std::ostream& log) {
  c.validate();
  if (!(c.eps > 0.0)) throw ConfigError("corrector-run: eps must be > 0");
  const auto grid = shell_grid(c.L, c.shells_per_efold);
  const auto norms = map_parallel(c.n_realizations, workers_of(c), [&](std::size_t i) {
    const auto f = sample_field(c.eps, c.L, c.torus_side, c.grid_n, derive_seed(c.seed, i));
    auto state = initial_corrector_state(f, false);
    std::vector<double> out{state.F.norm2()};
    for (std::size_t k = 1; k < grid.size(); ++k) {
      state = advance_corrector(std::move(state), f, grid[k]);
      out.push_back(state.F.norm2());
    }
    return out;
  });
  auto os = open_csv(c, "corrector_run.csv");
  os << "L,lnL,mean_F2,se_F2,ref_2lambda,rel_err\n";
  double rel = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    RunningStats s;
    for (const auto& v : norms) s.push(v[k]);
    const double ref = 2.0 * lambda_of(grid[k] * grid[k] - 1.0, c.eps);
    rel = s.mean() / ref - 1.0;
    os << grid[k] << ',' << std::log(grid[k]) << ',' << s.mean() << ',' << s.std_error() << ','
       << ref << ',' << rel << '\n';
  }
  log << "corrector-run: terminal relative error " << rel << '\n';
  return std::abs(rel) <= 0.05 ? 0 : 1;
}

int command_pde_run(const RunConfig& c, std::ostream& log) {
  c.validate();
  const auto f = sample_field(c.eps, 0.0, c.pde_torus_side, c.pde_grid_n, c.seed);
  PdeOptions opt;
  opt.dt = c.pde_dt;
  const auto series = solve_phi_pde(f, c.T, opt);
  const Point x{c.x[0], c.x[1]};
  auto os = open_csv(c, "pde_run.csv");
  os << "t,phi1_x,phi2_x,phi1_0,phi2_0,mean_phi1,mean_phi2\n";
  for (const auto& s : series)
    os << s.t << ',' << s.phi[0].value_at(x[0], x[1]) << ',' << s.phi[1].value_at(x[0], x[1])
       << ',' << s.phi[0].value_at_origin() << ',' << s.phi[1].value_at_origin() << ','
       << s.phi[0].mean() << ',' << s.phi[1].mean() << '\n';
  const double stat = increment_statistic(series, x);
  auto ss = open_csv(c, "pde_summary.csv");
  ss << "increment_statistic,flow_residual,lambda_T\n";
  const double residual = c.eps > 0.0 ? flow_residual(f, series, x, c.shells_per_efold) : 0.0;
  ss << stat << ',' << residual << ',' << lambda_of(c.T, c.eps) << '\n';
  log << "pde-run: increment statistic " << stat << ", residual " << residual << '\n';
  return 0;
}

int command_accept(const RunConfig& c, std::ostream& log) {
  const auto results = run_acceptance(c, &log);
  const auto path = out_file(c, "acceptance_report.json");
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << acceptance_report_json(results) << '\n';
  bool pass = true;
  for (const auto& r : results) pass = pass && r.pass;
  log << (pass ? "acceptance: all criteria pass" : "acceptance: FAILED") << " (report "
      << path.string() << ")\n";
  return pass ? 0 : 1;
}

}  // namespace sl2flow
