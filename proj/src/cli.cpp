#include "r2vpo/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "r2vpo/checkpoint.hpp"
#include "r2vpo/checks.hpp"
#include "r2vpo/config.hpp"
#include "r2vpo/divergence.hpp"
#include "r2vpo/errors.hpp"
#include "r2vpo/format.hpp"
#include "r2vpo/trainer.hpp"

#ifndef R2VPO_VERSION
#define R2VPO_VERSION "unknown"
#endif

namespace r2vpo {

namespace {

namespace fs = std::filesystem;

struct TrainArgs {
  std::string algo;
  std::string env;
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "run";
  std::string preset;
};

struct EvalArgs {
  std::string checkpoint;
  int episodes = 10;
};

struct DivergenceArgs {
  std::string out = "divergence";
  std::size_t pairs = 50;
  std::size_t support = checks::kDiscreteSupport;
  std::uint64_t seed = 0;
};

struct GradcheckArgs {
  int nets = 100;
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
};

struct BoundArgs {
  int trials = 1000;
  std::uint64_t seed = 0;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

TrainerConfig resolve_config(const TrainArgs& a) {
  std::string text;
  std::string source = "<flags>";
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw ConfigError("config", "cannot open config file " + a.config);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    source = a.config;
  }
  if (!a.preset.empty()) text += "\npreset=" + a.preset + "\n";
  TrainerConfig cfg = parse_config(text, source);
  if (!a.algo.empty()) set_config_value(cfg, "algo", a.algo);
  set_config_value(cfg, "env", a.env);
  if (a.seed) set_config_value(cfg, "seed", std::to_string(*a.seed));
  cfg.validate();
  return cfg;
}

// Metadata as comments followed by the resolved config, so the manifest
// itself loads back as a config file.
void write_manifest(const TrainerConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "manifest.txt");
  if (!out) throw std::runtime_error("cannot write " + (out_dir / "manifest.txt").string());
  out << "# r2vpo run manifest\n"
      << "# version: " << R2VPO_VERSION << '\n'
      << "# started: " << utc_timestamp() << '\n'
      << "# out_dir: " << fs::absolute(out_dir).string() << '\n'
      << "# seed: " << cfg.seed << '\n'
      << dump_config(cfg);
}

int run_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainerConfig cfg;
  try {
    cfg = resolve_config(a);
  } catch (const ConfigError& e) {
    err << "error: invalid config (key '" << e.key() << "'): " << e.what() << '\n';
    return 2;
  }
  const fs::path dir(a.out);
  write_manifest(cfg, dir);
  const auto series = Trainer(cfg).run(dir);
  const auto& last = series.back();
  out << "algo=" << to_string(cfg.algo) << " env=" << envs::to_string(cfg.env) << " seed=" << cfg.seed
      << " iterations=" << last.iteration << " env_steps=" << last.env_steps
      << " final_eval_return=" << format_double(last.mean_eval_return) << '\n';
  return 0;
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  const Checkpoint c = load_checkpoint(a.checkpoint);
  const double ret = evaluate_policy(c.policy, c.obs_stats, envs::EnvConfig::defaults(c.env), a.episodes, c.seed);
  out << "env=" << envs::to_string(c.env) << " iteration=" << c.iteration << " episodes=" << a.episodes
      << " mean_return=" << format_double(ret) << '\n';
  return 0;
}

int run_verify_divergence(const DivergenceArgs& a, std::ostream& out) {
  const fs::path dir(a.out);
  fs::create_directories(dir);
  const std::vector<double> scales = checks::gaussian_sweep_scales();
  bool ok = true;
  for (auto kind : divergence::kAllKinds) {
    const divergence::DivergenceGenerator gen{kind};
    const auto rows = divergence::approximation_error_sweep(gen, divergence::GaussianMeanShift{}, scales);
    const fs::path path = dir / ("divergence_" + std::string(gen.name()) + ".csv");
    std::ofstream csv(path);
    if (!csv) throw std::runtime_error("cannot write " + path.string());
    csv << divergence::sweep_csv(gen, rows);
    const auto c = checks::check_agreement(gen, rows);
    ok = ok && c.passed;
    out << (c.passed ? "PASS" : "FAIL") << " gaussian " << gen.name() << " rows=" << c.rows_checked
        << " worst_relative_error=" << format_double(c.worst_relative_error)
        << " at_ratio_variance=" << format_double(c.worst_ratio_variance) << '\n';
  }
  for (const auto& r : checks::discrete_family_check(a.seed, a.pairs, a.support)) {
    const divergence::DivergenceGenerator gen{r.kind};
    const bool passed = r.failing_pairs == 0;
    ok = ok && passed;
    out << (passed ? "PASS" : "FAIL") << " discrete " << gen.name() << " pairs=" << r.pairs
        << " failing_pairs=" << r.failing_pairs << " worst_relative_error=" << format_double(r.worst_relative_error)
        << " at_ratio_variance=" << format_double(r.worst_ratio_variance) << '\n';
  }
  return ok ? 0 : 1;
}

int run_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  const auto r = checks::gradcheck_suite(a.seed, a.nets);
  const bool ok = r.passed(a.tolerance);
  out << (ok ? "PASS" : "FAIL") << " gradcheck nets=" << r.nets
      << " max_relative_error=" << format_double(r.max_relative_error) << " worst_net=" << r.worst_net
      << " max_absolute_error_below_floor=" << format_double(r.max_absolute_error)
      << " tolerance=" << format_double(a.tolerance) << '\n';
  return ok ? 0 : 1;
}

int run_check_bound(const BoundArgs& a, std::ostream& out) {
  const auto r = checks::clip_bound_trials(a.seed, a.trials);
  out << (r.violations == 0 ? "PASS" : "FAIL") << " check-bound trials=" << r.trials
      << " violations=" << r.violations << " max_gap_over_bound=" << format_double(r.max_gap_over_bound) << '\n';
  if (r.violations > 0) out << kClipReportCsvHeader << '\n' << r.first_violation << '\n';
  return r.violations == 0 ? 0 : 1;
}

}  // namespace

int parse_and_run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ratio-variance regularized policy optimization"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a policy and write metrics, manifest and checkpoint");
  train_cmd->add_option("--algo", train.algo, "Algorithm")
      ->check(CLI::IsMember({"r2vpo-on", "r2vpo-off", "ppo", "grpo-ch"}));
  train_cmd->add_option("--env", train.env, "Environment")
      ->required()
      ->check(CLI::IsMember({"pendulum", "cartpole-sparse", "reacher-sparse"}));
  train_cmd->add_option("--seed", train.seed, "Run seed");
  train_cmd->add_option("--config", train.config, "key=value config file")->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out, "Output directory")->capture_default_str();
  train_cmd->add_option("--preset", train.preset, "Base preset")->check(CLI::IsMember({"desk", "paper"}));

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint with deterministic actions");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--episodes", eval.episodes, "Episodes")->capture_default_str()->check(CLI::PositiveNumber);

  DivergenceArgs div;
  auto* div_cmd = app.add_subcommand("verify-divergence", "Compare f-divergences with the ratio-variance approximation");
  div_cmd->add_option("--out", div.out, "Directory for the sweep CSVs")->capture_default_str();
  div_cmd->add_option("--pairs", div.pairs, "Random discrete pairs")->capture_default_str();
  div_cmd->add_option("--support", div.support, "Discrete support size")->capture_default_str()->check(CLI::Range(2, 1 << 20));
  div_cmd->add_option("--seed", div.seed, "Seed for the discrete pairs")->capture_default_str();

  GradcheckArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Check the policy gradient against finite differences");
  grad_cmd->add_option("--nets", grad.nets, "Random networks")->capture_default_str()->check(CLI::PositiveNumber);
  grad_cmd->add_option("--seed", grad.seed, "Seed")->capture_default_str();
  grad_cmd->add_option("--tolerance", grad.tolerance, "Maximum relative error")->capture_default_str();

  BoundArgs bound;
  auto* bound_cmd = app.add_subcommand("check-bound", "Randomized trials of the clip-error variance bound");
  bound_cmd->add_option("--trials", bound.trials, "Trials")->capture_default_str()->check(CLI::PositiveNumber);
  bound_cmd->add_option("--seed", bound.seed, "Seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failed = &app;
    for (auto* sub : {train_cmd, eval_cmd, div_cmd, grad_cmd, bound_cmd}) {
      if (sub->parsed()) failed = sub;
    }
    err << failed->help();
    return 2;
  }

  try {
    if (train_cmd->parsed()) return run_train(train, out, err);
    if (eval_cmd->parsed()) return run_eval(eval, out);
    if (div_cmd->parsed()) return run_verify_divergence(div, out);
    if (grad_cmd->parsed()) return run_gradcheck(grad, out);
    if (bound_cmd->parsed()) return run_check_bound(bound, out);
  } catch (const ConfigError& e) {
    err << "error: invalid config (key '" << e.key() << "'): " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace r2vpo
