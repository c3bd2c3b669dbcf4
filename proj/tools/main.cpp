#include "cli/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace cgeo::cli;
  Options opt;
  std::uint64_t seed = 0;

  CLI::App app{"Conformal geodesics: traces, hearts, sizes and no-spiral evidence"};
  app.add_option("command", opt.command, "trace | heart | verify | expmap | fscan | size | spiral")
      ->required();
  app.add_option("--config", opt.config_path, "JSON run configuration")->required();
  app.add_option("--out", opt.out_dir, "output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "64-bit seed, overrides the config");
  app.add_option("--format", opt.formats, "csv | json | svg, repeatable")
      ->take_all()
      ->allow_extra_args(false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }
  if (*seed_opt) opt.seed = seed;
  return run(opt, std::cout, std::cerr);
}
