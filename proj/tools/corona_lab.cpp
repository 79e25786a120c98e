#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "corona/lab.hpp"

namespace {

int env_threads() {
  const char* v = std::getenv("CORONA_LAB_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw corona::ConfigError("CORONA_LAB_THREADS must be a positive integer");
  return static_cast<int>(n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse-geometry experiment runner"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string out_dir = ".";
  int threads = 0;
  for (const auto& name : corona::lab_subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  try {
    if (threads == 0) threads = env_threads();
    if (threads > 0) corona::set_thread_count(threads);

    corona::Json config;
    {
      std::ifstream in(config_path);
      try {
        config = corona::Json::parse(in);
      } catch (const corona::Json::parse_error& e) {
        throw corona::ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
    }
    const auto result = corona::run_experiment(subcommand, config);
    corona::write_outputs(result, subcommand, config, out_dir);
    for (const auto& f : result.failures) std::cerr << "FAIL: " << f << "\n";
    if (result.exit_code != 0) std::cerr << result.summary.dump(2) << "\n";
    return result.exit_code;
  } catch (const corona::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const corona::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
