// Command-line front end for the simulator. Exit codes are listed in docs/formats.md.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tsync/tsync.hpp"

namespace {

enum Exit : int { ok = 0, usage = 1, config_error = 2, runtime_error = 3, io_error = 4 };

int exit_code_for(const tsync::SyncError& e) {
  switch (e.code()) {
    case tsync::Errc::invalid_config: return config_error;
    case tsync::Errc::io_error: return io_error;
    default: return runtime_error;
  }
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scheme;
  std::optional<double> duration_s;
  std::optional<std::string> out_dir;
  bool trace{false};
};

tsync::ExperimentConfig load_with_overrides(const std::string& path, const Overrides& o) {
  auto cfg = tsync::load_config(path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.scheme) cfg.scheme = *tsync::parse_scheme(*o.scheme);
  if (o.duration_s) cfg.duration_s = *o.duration_s;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.trace) cfg.trace = true;
  tsync::validate_config(cfg);
  return cfg;
}

int run_single(const std::string& config_path, const Overrides& o, bool quiet) {
  const auto cfg = load_with_overrides(config_path, o);
  const auto result = tsync::run_experiment(cfg);
  if (!quiet) {
    std::cout << tsync::summary_table(result.summary);
    if (!cfg.out_dir.empty()) std::cout << "artifacts written to " << cfg.out_dir << "\n";
  }
  return ok;
}

int run_compare(const std::string& config_a, const std::string& config_b, std::vector<std::uint64_t> seeds,
                std::size_t num_seeds, const std::optional<std::string>& out_dir, unsigned workers, bool quiet) {
  auto a = tsync::load_config(config_a);
  auto b = config_b.empty() ? a : tsync::load_config(config_b);
  if (config_b.empty()) {
    a.scheme = tsync::Scheme::proposed;
    b.scheme = tsync::Scheme::baseline;
  }
  if (seeds.empty())
    for (std::size_t i = 0; i < num_seeds; ++i) seeds.push_back(a.seed + i);
  const auto cmp = tsync::compare(a, b, seeds, workers);
  const std::string dir = out_dir.value_or(a.out_dir);
  if (!dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw tsync::SyncError(tsync::Errc::io_error, "cannot create '" + dir + "': " + ec.message());
    tsync::write_file(std::filesystem::path(dir) / "compare.csv", tsync::comparison_csv(cmp));
  }
  if (!quiet) std::cout << tsync::comparison_table(cmp);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event simulator for beacon-syntonized, piggybacked WSN time synchronization"};
  app.set_version_flag("--version", "tsync_sim 1.0");

  std::string config_path;
  Overrides o;
  bool quiet = false;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--seed", o.seed, "override the master seed");
  app.add_option("--scheme", o.scheme, "override the scheme")->check(CLI::IsMember({"proposed", "baseline"}));
  app.add_option("--duration", o.duration_s, "override the run length in seconds")->check(CLI::NonNegativeNumber);
  app.add_option("--out-dir", o.out_dir, "output directory (overrides output.dir)");
  app.add_flag("--trace", o.trace, "also write trace.csv and trace.bin");
  app.add_flag("--quiet,-q", quiet, "print nothing on success");

  auto* cmp = app.add_subcommand("compare", "paired-seed comparison of the two schemes");
  std::string cmp_a, cmp_b;
  std::vector<std::uint64_t> cmp_seeds;
  std::size_t cmp_num = 10;
  std::optional<std::string> cmp_out;
  unsigned cmp_workers = std::max(1u, std::thread::hardware_concurrency());
  bool cmp_quiet = false;
  cmp->add_option("--config", cmp_a, "config for scheme A (without --config-b, run both schemes on it)")->required();
  cmp->add_option("--config-b", cmp_b, "config for scheme B; must differ from A only in scheme");
  cmp->add_option("--seeds", cmp_seeds, "explicit seed list")->delimiter(',');
  cmp->add_option("--num-seeds", cmp_num, "consecutive seeds from the config seed, when --seeds is absent")
      ->check(CLI::PositiveNumber);
  cmp->add_option("--out-dir", cmp_out, "directory for compare.csv");
  cmp->add_option("--workers", cmp_workers, "parallel runs")->check(CLI::PositiveNumber);
  cmp->add_flag("--quiet,-q", cmp_quiet, "print nothing on success");

  try {
    app.parse(argc, argv);
    if (!*cmp && config_path.empty()) throw CLI::RequiredError("--config");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return usage;
  }

  try {
    if (*cmp) return run_compare(cmp_a, cmp_b, cmp_seeds, cmp_num, cmp_out, cmp_workers, cmp_quiet);
    return run_single(config_path, o, quiet);
  } catch (const tsync::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const tsync::SyncError& e) {
    std::cerr << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return runtime_error;
  }
}
