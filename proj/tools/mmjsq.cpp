// mmjsq: heavy-traffic analysis and simulation of Markov-modulated JSQ systems.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mmjsq/error.hpp"
#include "mmjsq/experiments.hpp"
#include "mmjsq/model_file.hpp"
#include "mmjsq/report.hpp"
#include "mmjsq/sim.hpp"
#include "mmjsq/verify.hpp"

namespace fs = std::filesystem;
using namespace mmjsq;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitParse = 2;
constexpr int kExitModel = 3;

struct SimFlags {
  double arrivals = 1e7;
  std::size_t runs = 10;
  std::uint64_t seed = 1;
  double burn_in = 0.1;
  std::size_t pmf_cap = 100;
  std::vector<double> laplace_s{1.0};
  std::size_t threads = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--arrivals", arrivals, "Arrivals per run (e.g. 1e7)");
    cmd->add_option("--runs", runs, "Independent replications");
    cmd->add_option("--seed", seed, "Base seed; run r uses seed + r");
    cmd->add_option("--burn-in", burn_in, "Fraction of arrivals discarded before measuring");
    cmd->add_option("--pmf-cap", pmf_cap, "Largest queue length with its own PMF bin");
    cmd->add_option("--laplace-s", laplace_s, "Evaluation points of the empirical Laplace transform")->delimiter(',');
    cmd->add_option("--threads", threads, "Worker threads (default: MMJSQ_THREADS or hardware concurrency)");
  }

  SimConfig config() const {
    if (!(arrivals >= 1.0) || arrivals != std::floor(arrivals) || arrivals > 1.8e19)
      throw Error(ErrorCode::InvalidConfig, "--arrivals must be a positive integer");
    SimConfig c;
    c.num_arrivals = static_cast<std::uint64_t>(arrivals);
    c.burn_in_fraction = burn_in;
    c.pmf_cap = pmf_cap;
    c.laplace_s_values = laplace_s;
    c.seed = seed;
    return c;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

template <typename Writer>
void write_with(const fs::path& path, Writer w) {
  std::ostringstream os;
  w(os);
  write_text(path, os.str());
}

std::vector<fs::path> model_files_in(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov-modulated JSQ: heavy-traffic predictions and simulation"};
  app.require_subcommand(1);

  std::string model_path;
  std::optional<double> rho;
  std::optional<double> alpha_scale;
  auto add_model = [&](CLI::App* cmd) {
    cmd->add_option("model", model_path, "Model JSON file")->required();
    cmd->add_option("--rho", rho, "Target mean load (overrides the file)");
    cmd->add_option("--alpha-scale", alpha_scale, "Multiply all modulation rates (overrides the file)");
  };

  auto* analyze = app.add_subcommand("analyze", "Stationary law, SSC report and heavy-traffic prediction");
  add_model(analyze);
  std::vector<double> s_values{1.0};
  std::string out_file;
  analyze->add_option("--s", s_values, "Evaluation points of the limiting Laplace transform")->delimiter(',');
  analyze->add_option("--out", out_file, "Write the JSON report here instead of stdout");

  auto* simulate_cmd = app.add_subcommand("simulate", "Replicated simulation");
  add_model(simulate_cmd);
  SimFlags sim_flags;
  sim_flags.add_to(simulate_cmd);
  std::string out_dir = ".";
  simulate_cmd->add_option("--out-dir", out_dir, "Directory for aggregate.json and runs.csv");

  auto* sweep_cmd = app.add_subcommand("sweep", "Load or modulation-rate sweep");
  add_model(sweep_cmd);
  SimFlags sweep_flags;
  sweep_flags.add_to(sweep_cmd);
  std::string kind = "load";
  std::vector<double> grid;
  sweep_cmd->add_option("--kind", kind, "load or alpha")->check(CLI::IsMember({"load", "alpha"}));
  sweep_cmd->add_option("--grid", grid, "Grid values (comma separated)")->delimiter(',')->required();
  sweep_cmd->add_option("--out-dir", out_dir, "Directory for sweep CSV/JSON files");

  auto* verify_cmd = app.add_subcommand("verify", "Run the invariant suites");
  std::string suite = "quick";
  std::vector<std::string> verify_models;
  std::string models_dir;
  std::uint64_t verify_seed = 20240601;
  verify_cmd->add_option("--suite", suite, "quick or full")->check(CLI::IsMember({"quick", "full"}));
  verify_cmd->add_option("--model", verify_models, "Model files to include");
  verify_cmd->add_option("--models-dir", models_dir, "Include every *.json in this directory");
  verify_cmd->add_option("--seed", verify_seed, "Base seed");

  CLI11_PARSE(app, argc, argv);

  try {
    auto load = [&]() {
      ModelFile f = load_model_file(model_path);
      if (alpha_scale) f.alpha_scale = alpha_scale;
      return f;
    };

    if (*analyze) {
      const ModelFile f = load();
      const MmJsqModel model = build_model(f, rho);
      const std::string text = analysis_report(f, model, s_values).dump(2) + "\n";
      if (out_file.empty())
        std::cout << text;
      else
        write_text(out_file, text);
      return 0;
    }

    if (*simulate_cmd) {
      const ModelFile f = load();
      const MmJsqModel model = build_model(f, rho);
      const SimConfig cfg = sim_flags.config();
      const Replication rep = replicate(model, cfg, sim_flags.runs, sim_flags.threads);
      nlohmann::json doc;
      doc["rng"] = kRngName;
      doc["seed"] = cfg.seed;
      doc["seed_derivation"] = "run r uses seed + r";
      doc["num_arrivals"] = cfg.num_arrivals;
      doc["burn_in_fraction"] = cfg.burn_in_fraction;
      doc["rho"] = derived_rates(model).rho;
      doc["aggregate"] = to_json(rep.aggregate);
      const fs::path dir(out_dir);
      write_text(dir / "aggregate.json", doc.dump(2) + "\n");
      write_with(dir / "runs.csv", [&](std::ostream& os) { write_runs_csv(os, rep.runs); });
      for (std::size_t j = 0; j < rep.aggregate.mean_q.size(); ++j) {
        const Estimate& e = rep.aggregate.mean_q[j];
        std::cout << "server " << j << ": E[q] = " << format_double(e.mean) << " +- " << format_double(e.half_width)
                  << "\n";
      }
      return 0;
    }

    if (*sweep_cmd) {
      const ModelFile f = load();
      SweepSpec spec{build_model(f, rho)};
      spec.kind = kind == "alpha" ? SweepKind::Alpha : SweepKind::Load;
      spec.grid = grid;
      spec.sim = sweep_flags.config();
      spec.num_runs = sweep_flags.runs;
      spec.threads = sweep_flags.threads;
      const SweepResult res = run_sweep(spec);
      const fs::path dir(out_dir);
      write_with(dir / ("sweep_" + kind + ".csv"), [&](std::ostream& os) { write_sweep_csv(os, res); });
      write_with(dir / ("sweep_" + kind + "_pmf.csv"), [&](std::ostream& os) { write_sweep_pmf_csv(os, res); });
      write_text(dir / ("sweep_" + kind + "_summary.json"), sweep_summary(res).dump(2) + "\n");
      return 0;
    }

    if (*verify_cmd) {
      VerifyOptions opt;
      opt.suite = suite == "full" ? VerifySuite::Full : VerifySuite::Quick;
      opt.seed = verify_seed;
      if (!models_dir.empty()) opt.model_files = model_files_in(models_dir);
      for (const auto& m : verify_models) opt.model_files.emplace_back(m);
      const auto results = run_verify(opt, std::cout);
      std::size_t failed = 0;
      for (const auto& r : results) failed += r.passed ? 0 : 1;
      std::cout << results.size() - failed << "/" << results.size() << " checks passed\n";
      return failed == 0 ? 0 : kExitCheckFailed;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitParse;
    }
    if (e.code() == ErrorCode::UnstableModel || e.code() == ErrorCode::InvalidConfig)
      std::cerr << "error: " << e.what() << "\n";
    else
      std::cerr << "error: InvalidModel: " << e.what() << "\n";
    return kExitModel;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitModel;
  }
  return 0;
}
