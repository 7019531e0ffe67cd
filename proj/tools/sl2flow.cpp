#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sl2flow/errors.hpp"
#include "sl2flow/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments for the SL(2) diffusion and its drift-diffusion coupling"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<double> dt;
  std::optional<double> eps;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed (u64)");
  app.add_option("--workers", workers, "worker threads (0: all)");
  app.add_option("--out", out, "output directory");
  app.add_option("--dt", dt, "time step");
  app.add_option("--eps", eps, "drift amplitude epsilon");

  using Command = std::function<int(const sl2flow::RunConfig&, std::ostream&)>;
  const std::map<std::string, std::pair<std::string, Command>> commands = {
      {"sl2-sim", {"simulate dF = F dB; CSV of E R and E|F|^2", sl2flow::command_sl2_sim}},
      {"scalar-sim", {"simulate the scalar R, S processes; CSV of means", sl2flow::command_scalar_sim}},
      {"field-sample", {"sample one drift field; write the spectral dump", sl2flow::command_field_sample}},
      {"couple-check", {"covariance of the coupled B path", sl2flow::command_couple_check}},
      {"corrector-run", {"proxy-corrector recursion; CSV of E|F_L|^2", sl2flow::command_corrector_run}},
      {"pde-run", {"solve the corrector PDE for one field", sl2flow::command_pde_run}},
      {"accept", {"run the acceptance criteria; write the JSON report", sl2flow::command_accept}},
  };
  for (const auto& [name, entry] : commands) app.add_subcommand(name, entry.first);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    sl2flow::RunConfig config;
    if (!config_path.empty()) config = sl2flow::load_config(config_path);
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    if (out) config.out = *out;
    if (dt) config.dt = *dt;
    if (eps) config.eps = *eps;
    config.validate();
    for (const auto* sub : app.get_subcommands())
      return commands.at(sub->get_name()).second(config, std::cout);
  } catch (const sl2flow::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
