// Subcommand driver: transform, simulate, validate, limit.
#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "affine_lab/config.hpp"
#include "affine_lab/format.hpp"
#include "affine_lab/parallel.hpp"
#include "affine_lab/rng.hpp"
#include "affine_lab/sde.hpp"
#include "affine_lab/transform.hpp"
#include "affine_lab/validate.hpp"

namespace affine_lab {

/// Exit codes: 0 all rows pass, 1 some row failed, 2 rejected input or run error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitError = 2;

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"transform", "simulate", "validate", "limit"};
  return names;
}

/// Command-line overrides applied on top of the configuration file.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  unsigned workers = 0;  // 0: AFFINE_LAB_WORKERS, else available parallelism
};

namespace detail {

inline nlohmann::ordered_json run_metadata(std::string_view command, const RunConfig& c) {
  nlohmann::ordered_json m;
  m["command"] = command;
  m["seed"] = c.mc.seed;
  m["dt"] = c.grid.dt;
  m["eps"] = c.mc.eps;
  m["u_bound"] = c.mc.u_bound;
  m["rng"] = kRngName;
  m["artifact_version"] = kArtifactVersion;
  RunConfig digested = c;
  digested.output.directory.clear();  // where artifacts land does not change them
  m["config_digest"] = hex64(fnv1a(serialize_config(digested)));
  return m;
}

inline void write_csv_metadata(std::ostream& os, const nlohmann::ordered_json& meta) {
  for (auto it = meta.begin(); it != meta.end(); ++it) {
    os << "# " << it.key() << '=';
    if (it->is_string())
      os << it->get<std::string>();
    else if (it->is_number_float())
      os << fmt_num(it->get<double>());
    else
      os << it->dump();
    os << '\n';
  }
}

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }
  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    f << content;
    if (!f) throw std::runtime_error("write failed: " + (dir_ / name).string());
    written_.push_back(name);
  }
  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> written_;
};

inline McSettings mc_settings(const RunConfig& c, unsigned workers) {
  McSettings mc;
  mc.n_paths = c.mc.n_paths;
  mc.seed = c.mc.seed;
  mc.dt = c.grid.dt;
  mc.eps = c.mc.eps;
  mc.u_bound = c.mc.u_bound;
  mc.workers = workers;
  mc.n_calibration = c.mc.n_paths;
  return mc;
}

inline GeneratorModel generator_model(SimModel m) {
  switch (m) {
    case SimModel::Affine: return GeneratorModel::Affine;
    case SimModel::Cbi: return GeneratorModel::Cbi;
    case SimModel::Catalytic: return GeneratorModel::Catalytic;
  }
  return GeneratorModel::Affine;
}

inline std::string reports_json(std::string_view command, const RunConfig& c,
                                const std::vector<ExperimentReport>& reports) {
  nlohmann::ordered_json j;
  j["metadata"] = run_metadata(command, c);
  bool all = true;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    all = all && r.pass();
    arr.push_back(r.to_json());
  }
  j["pass"] = all;
  j["reports"] = std::move(arr);
  return j.dump(2) + "\n";
}

/// Prints tables and the first failing row; returns the exit code.
inline int finish_reports(const std::vector<ExperimentReport>& reports, std::ostream& out,
                          std::ostream& err) {
  for (const auto& r : reports) r.print_table(out);
  for (const auto& r : reports) {
    if (const CheckRow* row = r.first_failure()) {
      err << "FAIL " << r.name << ": " << row->quantity << " (predicted " << row->predicted.real()
          << ", observed " << row->observed.real() << ", tolerance " << row->tolerance << ")\n";
      return kExitCheckFailed;
    }
  }
  return kExitOk;
}

inline int run_transform(const RunConfig& c, const AdmissibleParams& p, OutputDir& dir,
                         std::ostream& out) {
  const TimeGrid grid{c.grid.t_max, c.grid.dt};
  std::vector<double> ts(grid.steps() + 1);
  for (std::size_t k = 0; k < ts.size(); ++k) ts[k] = grid.time(k);
  const auto meta = run_metadata("transform", c);
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < c.transform.u_list.size(); ++i) {
    const UPoint& u = c.transform.u_list[i];
    const TransformSolution s = solve_transform(p, u, ts, c.transform.tol);
    if (c.output.wants("csv")) {
      std::ostringstream os;
      write_csv_metadata(os, meta);
      os << "# u1=" << fmt_num(u.u1.real()) << ',' << fmt_num(u.u1.imag())
         << "\n# u2=" << fmt_num(u.u2.real()) << ',' << fmt_num(u.u2.imag()) << '\n';
      write_transform_csv(os, s);
      dir.write("transform_u" + std::to_string(i) + ".csv", os.str());
    }
    summary.push_back({{"u1", {u.u1.real(), u.u1.imag()}},
                       {"u2", {u.u2.real(), u.u2.imag()}},
                       {"t", s.t_grid.back()},
                       {"psi1", {s.psi1.back().real(), s.psi1.back().imag()}},
                       {"psi2", {s.psi2.back().real(), s.psi2.back().imag()}},
                       {"phi", {s.phi.back().real(), s.phi.back().imag()}},
                       {"steps_taken", s.steps_taken}});
    out << "u" << i << ": psi1(T)=" << s.psi1.back() << " phi(T)=" << s.phi.back() << '\n';
  }
  if (c.output.wants("json")) {
    nlohmann::ordered_json j;
    j["metadata"] = meta;
    j["solutions"] = std::move(summary);
    dir.write("transform.json", j.dump(2) + "\n");
  }
  return kExitOk;
}

inline int run_simulate(const RunConfig& c, const AdmissibleParams& p, unsigned workers,
                        OutputDir& dir, std::ostream& out) {
  const TimeGrid grid{c.grid.t_max, c.grid.dt};
  auto paths = parallel_map<PathBundle>(c.mc.n_paths, workers, [&](std::size_t i) {
    return detail::with_retry(
        p.m(), p.mu(), grid, substream_seed(c.mc.seed, i), c.mc.u_bound, c.mc.eps,
        [&](const NoiseSystem& ns) -> std::optional<PathBundle> {
          PathBundle b;
          switch (c.simulate.model) {
            case SimModel::Affine: b = simulate_affine(p, c.state.x0, c.state.z0, ns); break;
            case SimModel::Cbi:
              b = simulate_generalized_cbi(cbi_spec_from_affine(p), c.state.x0, ns);
              break;
            case SimModel::Catalytic:
              b = simulate_catalytic(p, c.state.x0, c.state.z0, c.state.l, ns);
              break;
          }
          if (b.aborted()) return std::nullopt;
          return b;
        });
  });
  const auto meta = run_metadata("simulate", c);
  if (c.output.wants("csv")) {
    std::ostringstream os;
    write_csv_metadata(os, meta);
    os << "# model=" << sim_model_name(c.simulate.model) << '\n';
    write_paths_csv(os, paths);
    dir.write("paths.csv", os.str());
  }
  if (c.output.wants("json")) {
    nlohmann::ordered_json j;
    j["metadata"] = meta;
    j["model"] = sim_model_name(c.simulate.model);
    j["n_paths"] = paths.size();
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (const auto& b : paths)
      per.push_back({{"u_bound", b.u_bound}, {"clamp_count", b.clamp_count}});
    j["paths"] = std::move(per);
    dir.write("simulate.json", j.dump(2) + "\n");
  }
  out << "simulated " << paths.size() << " paths (" << sim_model_name(c.simulate.model) << ", "
      << grid.steps() << " steps)\n";
  return kExitOk;
}

inline int run_validate(const RunConfig& c, const AdmissibleParams& p, unsigned workers,
                        OutputDir& dir, std::ostream& out, std::ostream& err) {
  const McSettings mc = mc_settings(c, workers);
  const auto& u_list = c.transform.u_list;
  std::vector<ExperimentReport> reports;
  for (const std::string& check : c.validate.checks) {
    if (check == "semigroup") {
      reports.push_back(sc_semigroup_check(p, 0.5 * c.grid.t_max, c.grid.t_max, u_list,
                                           c.transform.tol, {c.state.x0, c.state.z0}));
    } else if (check == "affine_formula") {
      reports.push_back(check_affine_formula(p, c.state.x0, c.state.z0, c.validate.t_list, u_list,
                                             mc, c.transform.tol));
    } else if (check == "moments") {
      reports.push_back(check_moments(p, c.state.x0, c.state.z0, c.validate.t_list, mc));
    } else if (check == "generator") {
      for (SimModel m : c.validate.models)
        for (const Point& s : c.validate.states)
          reports.push_back(check_generator(p, s, kGeneratorCatalog, c.grid.dt, generator_model(m),
                                            mc, c.state.l));
    } else if (check == "uniqueness") {
      reports.push_back(
          uniqueness_experiment(p, c.state.x0, c.validate.x0_b, c.grid.t_max, mc));
    }
  }
  if (c.output.wants("json")) dir.write("validate_report.json", reports_json("validate", c, reports));
  return finish_reports(reports, out, err);
}

inline int run_limit(const RunConfig& c, const AdmissibleParams& p, unsigned workers,
                     OutputDir& dir, std::ostream& out, std::ostream& err) {
  const McSettings mc = mc_settings(c, workers);
  std::optional<ReactantSplit> split;
  if (c.limit.pair) split = c.limit.split ? *c.limit.split : ReactantSplit::canonical(p);
  FluctuationOptions opt;
  opt.t_max = c.grid.t_max;
  opt.x0 = c.state.x0;
  opt.init = {c.limit.z_plus0, c.limit.z_minus0};
  opt.expect_inverse_theta = c.limit.expect_inverse_theta;
  std::vector<ExperimentReport> reports{
      fluctuation_experiment(p, split, c.limit.theta_ladder, opt, mc)};
  const auto meta = run_metadata("limit", c);
  if (c.output.wants("csv")) {
    std::ostringstream os;
    write_csv_metadata(os, meta);
    os << "theta,e_theta,stderr\n";
    const auto& rows = reports.front().rows;
    for (std::size_t j = 0; j < c.limit.theta_ladder.size(); ++j)
      os << fmt_num(c.limit.theta_ladder[j]) << ',' << fmt_num(rows[j].observed.real()) << ','
         << fmt_num(rows[j].std_error) << '\n';
    dir.write("limit_errors.csv", os.str());
  }
  if (c.output.wants("json")) dir.write("limit_report.json", reports_json("limit", c, reports));
  return finish_reports(reports, out, err);
}

}  // namespace detail

/// Runs one subcommand on a parsed configuration. Never throws; errors are
/// reported on `err` and mapped to kExitError.
inline int run_command(std::string_view command, RunConfig config, const RunOverrides& ov,
                       std::ostream& out, std::ostream& err) {
  try {
    if (std::find(subcommands().begin(), subcommands().end(), command) == subcommands().end())
      throw ConfigError("unknown subcommand \"" + std::string(command) + "\"");
    if (ov.seed) config.mc.seed = *ov.seed;
    if (ov.out_dir) config.output.directory = *ov.out_dir;
    check_config(config);
    const AdmissibleParams p = AdmissibleParams::from_record(config.params);
    if (command == "limit" && !(p.beta22() < 0.0))
      throw ConfigError("$.params.beta22: limit requires admissible parameters with beta22 < 0");
    const unsigned workers = resolve_workers(ov.workers);
    detail::OutputDir dir(config.output.directory);
    if (command == "transform") return detail::run_transform(config, p, dir, out);
    if (command == "simulate") return detail::run_simulate(config, p, workers, dir, out);
    if (command == "validate") return detail::run_validate(config, p, workers, dir, out, err);
    return detail::run_limit(config, p, workers, dir, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

/// Reads and parses the configuration file, then runs the subcommand.
inline int run_file(std::string_view command, const std::string& config_path,
                    const RunOverrides& ov, std::ostream& out, std::ostream& err) {
  std::ifstream f(config_path, std::ios::binary);
  if (!f) {
    err << "error: cannot read config " << config_path << '\n';
    return kExitError;
  }
  std::stringstream buf;
  buf << f.rdbuf();
  RunConfig cfg;
  try {
    cfg = parse_config(buf.str());
  } catch (const std::exception& e) {
    err << "error: " << config_path << ": " << e.what() << '\n';
    return kExitError;
  }
  return run_command(command, std::move(cfg), ov, out, err);
}

}  // namespace affine_lab
