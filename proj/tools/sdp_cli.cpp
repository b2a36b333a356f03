#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "sdp/harness/commands.hpp"

namespace {

int eval_threads() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* cap = std::getenv("SDP_THREADS")) {
    const int v = std::atoi(cap);
    if (v < 1) throw sdp::UsageError("SDP_THREADS must be a positive integer");
    n = std::min(n, v);
  }
  return n;
}

struct Common {
  std::string config;
  std::string seeds;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value run configuration (defaults apply when omitted)");
  cmd->add_option("--seed", c.seeds, "comma-separated seed list, overrides the config");
  cmd->add_option("--out", c.out, "output directory, overrides the config");
}

sdp::harness::RunConfig resolve(const Common& c) {
  sdp::harness::RunConfig cfg;
  if (!c.config.empty()) cfg = sdp::harness::load_config(c.config);
  if (!c.seeds.empty()) sdp::harness::set_value(cfg, "seeds", c.seeds);
  if (!c.out.empty()) sdp::harness::set_value(cfg, "out_dir", c.out);
  sdp::harness::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shortcut diffusion policy desk lab"};
  app.require_subcommand(1);
  Common common;
  std::vector<std::string> report_files;

  auto* gen = app.add_subcommand("gen-data", "write expert demonstrations for every configured task");
  auto* train = app.add_subcommand("train", "train one model per seed and engine");
  auto* eval = app.add_subcommand("eval", "evaluate checkpoints over tasks, engines, step counts and seeds");
  auto* bench = app.add_subcommand("bench", "measure sampling latency for both engines");
  auto* report = app.add_subcommand("report", "render metrics files as a markdown summary");
  for (auto* cmd : {gen, train, eval, bench, report}) add_common(cmd, common);
  report->add_option("files", report_files, "metrics.tsv / confusion.tsv files (default: <out>/metrics.tsv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const sdp::harness::RunConfig cfg = resolve(common);
    if (*gen) {
      sdp::harness::cmd_gen_data(cfg, std::cout);
    } else if (*train) {
      sdp::harness::cmd_train(cfg, std::cout);
    } else if (*eval) {
      sdp::harness::cmd_eval(cfg, std::cout, eval_threads());
    } else if (*bench) {
      sdp::harness::cmd_bench(cfg, std::cout);
    } else if (*report) {
      if (report_files.empty()) {
        const auto dir = std::filesystem::path(cfg.out_dir);
        report_files.push_back((dir / "metrics.tsv").string());
        if (std::filesystem::exists(dir / "confusion.tsv")) report_files.push_back((dir / "confusion.tsv").string());
      }
      sdp::harness::cmd_report(report_files, cfg.out_dir, std::cout);
    }
  } catch (const sdp::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const sdp::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const sdp::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
