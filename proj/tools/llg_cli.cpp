#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "llg/llg.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<unsigned long> seed;
  std::string resume;
};

void add_common(CLI::App* sub, Common& c, bool resume) {
  sub->add_option("-c,--config", c.config, "run configuration file (defaults apply when omitted)");
  sub->add_option("-o,--out", c.out, "output directory, overrides output.dir");
  sub->add_option("--seed", c.seed, "random seed, overrides scenario.seed");
  if (resume) sub->add_option("--resume", c.resume, "continue from a field checkpoint (its .json sidecar holds t)");
}

llg::RunConfig configure(const Common& c) {
  llg::RunConfig cfg = c.config.empty() ? llg::parse_config("", "defaults") : llg::load_config(c.config);
  if (!c.out.empty()) llg::set_config_value(cfg, "output.dir", c.out);
  if (c.seed) llg::set_config_value(cfg, "scenario.seed", std::to_string(*c.seed));
  llg::validate(cfg);
  return cfg;
}

std::optional<std::string> resume_of(const Common& c) {
  if (c.resume.empty()) return std::nullopt;
  return c.resume;
}

void print_status(const llg::cli::RunReport& r) {
  const auto& s = r.summary;
  if (r.exit_code == 0) {
    std::cout << s["command"].get<std::string>() << ": ok\n";
  } else {
    std::cerr << s["command"].get<std::string>() << ": " << s["error"]["kind"].get<std::string>() << ": "
              << s["error"]["message"].get<std::string>() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Landau-Lifshitz-Gilbert solver, moving-frame analysis and norm monitoring"};
  app.require_subcommand(1);
  Common common;

  auto* llg_cmd = app.add_subcommand("run-llg", "evolve initial data and monitor norms");
  add_common(llg_cmd, common, true);
  auto* frames_cmd = app.add_subcommand("run-frames", "extract frame, connection and derived field");
  add_common(frames_cmd, common, true);
  auto* picard_cmd = app.add_subcommand("run-picard", "Picard solve of the derived-field equation");
  add_common(picard_cmd, common, true);
  auto* monitor_cmd = app.add_subcommand("monitor", "recompute monitor reports from a norms CSV");
  add_common(monitor_cmd, common, true);
  auto* gen_cmd = app.add_subcommand("gen-config", "print the reference configuration");
  std::string gen_out;
  gen_cmd->add_option("-o,--out", gen_out, "write DIR/reference.cfg instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : llg::cli::kConfigError;
  }

  try {
    if (gen_cmd->parsed()) {
      if (gen_out.empty()) {
        std::cout << llg::reference_config();
        return 0;
      }
      std::filesystem::create_directories(gen_out);
      std::ofstream os(std::filesystem::path(gen_out) / "reference.cfg");
      if (!os) throw llg::Error(llg::ErrorKind::Io, "cannot write reference.cfg in " + gen_out);
      os << llg::reference_config();
      return 0;
    }
    llg::RunConfig cfg = configure(common);
    llg::cli::RunReport report;
    if (llg_cmd->parsed())
      report = llg::cli::run_llg(cfg, resume_of(common));
    else if (frames_cmd->parsed())
      report = llg::cli::run_frames(cfg, resume_of(common));
    else if (picard_cmd->parsed())
      report = llg::cli::run_picard(cfg, resume_of(common));
    else
      report = llg::cli::run_monitor(cfg, resume_of(common));
    print_status(report);
    return report.exit_code;
  } catch (const llg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return llg::cli::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
