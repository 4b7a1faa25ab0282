#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "r2vpo/checkpoint.hpp"
#include "r2vpo/cli.hpp"
#include "r2vpo/config.hpp"
#include "r2vpo/errors.hpp"

using namespace r2vpo;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "r2vpo");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = parse_and_run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("r2vpo_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string config_error_key(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("paper preset values") {
    const TrainerConfig c = parse_config("preset=paper\n");
    CHECK(c.rollout_length == 30);
    CHECK(c.parallel_envs == 2048);
    CHECK(c.epochs == 16);
    CHECK(c.batch_size == 1024);
    CHECK(c.learning_rate == 1e-3);
    CHECK(c.max_grad_norm == 2.0);
    CHECK(c.policy_hidden == std::vector<int>(5, 256));
    CHECK(c.value_hidden == std::vector<int>(5, 256));
    CHECK(c.adv.gamma == 0.995);
    CHECK(c.adv.reward_scale == 10.0);
    CHECK(c.observation_normalization);
    CHECK(c.dual_mode == DualMode::kFixed);
    CHECK(c.lambda0 == 0.06);
  }

  TEST_CASE("empty config yields the desk defaults") {
    CHECK(parse_config("") == preset_config("desk"));
    CHECK(parse_config("# only a comment\n\n") == TrainerConfig{});
  }

  TEST_CASE("later keys override the preset regardless of order") {
    const TrainerConfig c = parse_config("epochs=3\npreset=paper\n");
    CHECK(c.epochs == 3);
    CHECK(c.parallel_envs == 2048);
  }

  TEST_CASE("invalid values name their key") {
    CHECK(config_error_key("gamma=1.5") == "gamma");
    CHECK(config_error_key("epochs=0") == "epochs");
    CHECK(config_error_key("learning_rate=abc") == "learning_rate");
    CHECK(config_error_key("no_such_key=1") == "no_such_key");
    CHECK(config_error_key("preset=huge") == "preset");
    CHECK(config_error_key("lambda=-1") == "lambda");
    CHECK(config_error_key("epochs=4") == "<none>");
  }

  TEST_CASE("errors carry the line number") {
    try {
      parse_config("epochs=4\n\nbatch_size=abc\n", "run.cfg");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("run.cfg:3") != std::string::npos);
    }
  }

  TEST_CASE("dump and parse round trip") {
    TrainerConfig c = preset_config("paper");
    c.algo = Algo::kR2vpoOff;
    c.env = envs::EnvKind::kCartpoleSwingUpSparse;
    c.seed = 17;
    c.learning_rate = 3.0e-4 / 7.0;
    c.policy_hidden = {5, 9};
    c.dual_mode = DualMode::kAdaptive;
    c.delta = 0.0123;
    c.replay.capacity_iterations = 8;
    CHECK(parse_config(dump_config(c)) == c);
    CHECK(parse_config(dump_config(TrainerConfig{})) == TrainerConfig{});
  }

  TEST_CASE("algo and env names round trip") {
    for (Algo a : {Algo::kR2vpoOn, Algo::kR2vpoOff, Algo::kPpoClip, Algo::kGrpoClipHigher}) {
      CHECK(parse_algo(to_string(a)) == a);
    }
    CHECK_THROWS(parse_algo("sac"));
  }

  TEST_CASE("usage errors exit with code 2") {
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"train", "--algo", "ppo"}).code == 2);
    CHECK(run_cli({"train", "--env", "pendulum", "--bogus"}).code == 2);
    CHECK(run_cli({"train", "--env", "mars"}).code == 2);
    CHECK(run_cli({"train", "--algo", "sac", "--env", "pendulum"}).code == 2);
    CHECK(run_cli({"frobnicate"}).code == 2);
  }

  TEST_CASE("an invalid config file exits 2 and names the key") {
    const fs::path dir = scratch("badcfg");
    std::ofstream(dir / "bad.cfg") << "epochs=4\ngamma=1.5\n";
    const auto r = run_cli({"train", "--env", "pendulum", "--config", (dir / "bad.cfg").string(), "--out",
                            (dir / "run").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("gamma") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "run" / "metrics.csv"));
    fs::remove_all(dir);
  }

  TEST_CASE("check-bound passes") {
    const auto r = run_cli({"check-bound", "--trials", "1000"});
    CHECK(r.code == 0);
    CHECK(r.out.find("PASS") != std::string::npos);
  }

  TEST_CASE("gradcheck passes") {
    const auto r = run_cli({"gradcheck", "--nets", "10"});
    CHECK(r.code == 0);
    CHECK(r.out.find("PASS") != std::string::npos);
  }

  TEST_CASE("verify-divergence writes one sweep per generator") {
    const fs::path dir = scratch("div");
    const auto r = run_cli({"verify-divergence", "--out", dir.string(), "--pairs", "0"});
    CHECK(r.code == 0);
    int csvs = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".csv") {
        ++csvs;
        std::ifstream in(e.path());
        std::string header;
        std::getline(in, header);
        CHECK(header.find("ratio_variance") != std::string::npos);
      }
    }
    CHECK(csvs == 6);
    fs::remove_all(dir);
  }

  TEST_CASE("train writes its artifacts and eval reads the checkpoint") {
    const fs::path dir = scratch("train");
    std::ofstream(dir / "small.cfg") << "parallel_envs=4\nrollout_length=8\nbatch_size=16\nepochs=1\n"
                                        "policy_hidden=8\nvalue_hidden=8\ntotal_env_steps=64\n"
                                        "eval_every=1\neval_episodes=1\n";
    const fs::path out = dir / "run";
    const auto r = run_cli({"train", "--algo", "r2vpo-on", "--env", "reacher-sparse", "--seed", "3", "--config",
                            (dir / "small.cfg").string(), "--out", out.string()});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(out / "manifest.txt"));
    CHECK(fs::exists(out / "metrics.csv"));
    CHECK(fs::exists(out / "checkpoint.txt"));
    const TrainerConfig manifest = load_config(out / "manifest.txt");
    CHECK(manifest.seed == 3);
    CHECK(manifest.env == envs::EnvKind::kPointReacherSparse);
    CHECK(manifest.total_env_steps == 64);
    CHECK(load_checkpoint(out / "checkpoint.txt").iteration == 2);

    const auto e = run_cli({"eval", "--checkpoint", (out / "checkpoint.txt").string(), "--episodes", "2"});
    CHECK(e.code == 0);
    CHECK_FALSE(e.out.empty());
    CHECK(run_cli({"eval", "--checkpoint", (dir / "absent.txt").string()}).code != 0);
    fs::remove_all(dir);
  }
}
