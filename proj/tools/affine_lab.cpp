#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "affine_lab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"affine_lab: transforms, simulation and validation of two-factor affine processes"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  unsigned workers = 0;
  for (const std::string& name : affine_lab::subcommands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "override mc.seed");
    sub->add_option("--out", out_dir, "override output.directory");
    sub->add_option("--workers", workers, "worker threads (default: AFFINE_LAB_WORKERS, else all cores)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : affine_lab::kExitError;
  }

  CLI::App* sub = app.get_subcommands().front();
  affine_lab::RunOverrides ov;
  if (sub->count("--seed")) ov.seed = seed;
  if (sub->count("--out")) ov.out_dir = out_dir;
  ov.workers = workers;
  return affine_lab::run_file(sub->get_name(), config_path, ov, std::cout, std::cerr);
}
