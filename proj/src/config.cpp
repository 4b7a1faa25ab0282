#include "r2vpo/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "r2vpo/errors.hpp"
#include "r2vpo/format.hpp"

namespace r2vpo {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError(std::string(key), "invalid value '" + std::string(value) + "' for key '" + std::string(key) +
                                          "' (expected " + std::string(expected) + ")");
}

double parse_double(std::string_view key, std::string_view value) {
  const std::string s(value);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) bad_value(key, value, "a number");
  return v;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view value) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value, "an integer");
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true|false");
}

std::vector<int> parse_int_list(std::string_view key, std::string_view value) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    const auto comma = value.find(',', pos);
    const auto item = trim(value.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    out.push_back(parse_int<int>(key, item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

template <typename T>
T wrap_parse(std::string_view key, std::string_view value, T (*parse)(std::string_view)) {
  try {
    return parse(value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(key), e.what());
  }
}

}  // namespace

Algo parse_algo(std::string_view name) {
  if (name == "r2vpo-on") return Algo::kR2vpoOn;
  if (name == "r2vpo-off") return Algo::kR2vpoOff;
  if (name == "ppo") return Algo::kPpoClip;
  if (name == "grpo-ch") return Algo::kGrpoClipHigher;
  throw std::invalid_argument("unknown algo '" + std::string(name) + "' (expected r2vpo-on|r2vpo-off|ppo|grpo-ch)");
}

std::string_view to_string(Algo algo) {
  switch (algo) {
    case Algo::kR2vpoOn: return "r2vpo-on";
    case Algo::kR2vpoOff: return "r2vpo-off";
    case Algo::kPpoClip: return "ppo";
    case Algo::kGrpoClipHigher: return "grpo-ch";
  }
  return "unknown";
}

ClipConfig TrainerConfig::clip_config() const {
  if (algo == Algo::kGrpoClipHigher) return {clip_eps_low, clip_eps_high};
  return {clip_eps, clip_eps};
}

void TrainerConfig::validate() const {
  auto positive = [](const char* key, double v) {
    if (!(v > 0.0)) throw ConfigError(key, std::string(key) + " must be positive");
  };
  if (preset != "desk" && preset != "paper") throw ConfigError("preset", "preset must be desk or paper");
  positive("rollout_length", rollout_length);
  positive("parallel_envs", parallel_envs);
  positive("epochs", epochs);
  positive("batch_size", batch_size);
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate", "learning_rate must be >= 0");
  positive("max_grad_norm", max_grad_norm);
  positive("total_env_steps", static_cast<double>(total_env_steps));
  positive("eval_every", eval_every);
  positive("eval_episodes", eval_episodes);
  positive("gradient_shards", gradient_shards);
  positive("value_coef", value_coef);
  if (!(entropy_coef >= 0.0)) throw ConfigError("entropy_coef", "entropy_coef must be >= 0");
  if (policy_hidden.empty() || value_hidden.empty()) throw ConfigError("policy_hidden", "hidden layer lists must be non-empty");
  for (int h : policy_hidden) positive("policy_hidden", h);
  for (int h : value_hidden) positive("value_hidden", h);
  if (!(init_log_std >= -5.0 && init_log_std <= 2.0)) throw ConfigError("init_log_std", "init_log_std must lie in [-5, 2]");
  adv.validate();
  if (!(lambda0 >= 0.0)) throw ConfigError("lambda", "lambda must be >= 0");
  if (!(delta >= 0.0)) throw ConfigError("delta", "delta must be >= 0");
  positive("eta_lambda", eta_lambda);
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("clip_eps", "clip_eps must lie in (0, 1)");
  clip_config().validate();
  replay.validate();
}

bool TrainerConfig::operator==(const TrainerConfig& o) const {
  return dump_config(*this) == dump_config(o);
}

TrainerConfig preset_config(std::string_view preset) {
  TrainerConfig cfg;
  if (preset == "desk") return cfg;
  if (preset == "paper") {
    cfg.preset = "paper";
    cfg.rollout_length = 30;
    cfg.parallel_envs = 2048;
    cfg.epochs = 16;
    cfg.batch_size = 1024;
    cfg.learning_rate = 1e-3;
    cfg.max_grad_norm = 2.0;
    cfg.policy_hidden = {256, 256, 256, 256, 256};
    cfg.value_hidden = {256, 256, 256, 256, 256};
    cfg.adv.gamma = 0.995;
    cfg.adv.reward_scale = 10.0;
    cfg.observation_normalization = true;
    cfg.dual_mode = DualMode::kFixed;
    cfg.lambda0 = 0.06;
    return cfg;
  }
  throw ConfigError("preset", "unknown preset '" + std::string(preset) + "' (expected desk|paper)");
}

void set_config_value(TrainerConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "preset") {
    if (value != "desk" && value != "paper") bad_value(key, value, "desk|paper");
    cfg.preset = std::string(value);
  } else if (key == "algo") {
    cfg.algo = wrap_parse<Algo>(key, value, parse_algo);
  } else if (key == "env") {
    cfg.env = wrap_parse<envs::EnvKind>(key, value, envs::parse_env_kind);
  } else if (key == "seed") {
    cfg.seed = parse_int<std::uint64_t>(key, value);
  } else if (key == "rollout_length") {
    cfg.rollout_length = parse_int<int>(key, value);
  } else if (key == "parallel_envs") {
    cfg.parallel_envs = parse_int<int>(key, value);
  } else if (key == "epochs") {
    cfg.epochs = parse_int<int>(key, value);
  } else if (key == "batch_size") {
    cfg.batch_size = parse_int<int>(key, value);
  } else if (key == "learning_rate") {
    cfg.learning_rate = parse_double(key, value);
  } else if (key == "max_grad_norm") {
    cfg.max_grad_norm = parse_double(key, value);
  } else if (key == "total_env_steps") {
    cfg.total_env_steps = parse_int<long>(key, value);
  } else if (key == "eval_every") {
    cfg.eval_every = parse_int<int>(key, value);
  } else if (key == "eval_episodes") {
    cfg.eval_episodes = parse_int<int>(key, value);
  } else if (key == "policy_hidden") {
    cfg.policy_hidden = parse_int_list(key, value);
  } else if (key == "value_hidden") {
    cfg.value_hidden = parse_int_list(key, value);
  } else if (key == "init_log_std") {
    cfg.init_log_std = parse_double(key, value);
  } else if (key == "entropy_coef") {
    cfg.entropy_coef = parse_double(key, value);
  } else if (key == "value_coef") {
    cfg.value_coef = parse_double(key, value);
  } else if (key == "observation_normalization") {
    cfg.observation_normalization = parse_bool(key, value);
  } else if (key == "gradient_shards") {
    cfg.gradient_shards = parse_int<int>(key, value);
  } else if (key == "gamma") {
    cfg.adv.gamma = parse_double(key, value);
  } else if (key == "lambda_gae") {
    cfg.adv.lambda_gae = parse_double(key, value);
  } else if (key == "reward_scale") {
    cfg.adv.reward_scale = parse_double(key, value);
  } else if (key == "normalize_advantages") {
    cfg.adv.normalize_advantages = parse_bool(key, value);
  } else if (key == "group_size") {
    cfg.adv.group_size = parse_int<int>(key, value);
  } else if (key == "group_std_epsilon") {
    cfg.adv.group_std_epsilon = parse_double(key, value);
  } else if (key == "dual_mode") {
    cfg.dual_mode = wrap_parse<DualMode>(key, value, parse_dual_mode);
  } else if (key == "lambda") {
    cfg.lambda0 = parse_double(key, value);
  } else if (key == "delta") {
    cfg.delta = parse_double(key, value);
  } else if (key == "eta_lambda") {
    cfg.eta_lambda = parse_double(key, value);
  } else if (key == "clip_eps") {
    cfg.clip_eps = parse_double(key, value);
  } else if (key == "clip_eps_low") {
    cfg.clip_eps_low = parse_double(key, value);
  } else if (key == "clip_eps_high") {
    cfg.clip_eps_high = parse_double(key, value);
  } else if (key == "use_replay") {
    cfg.use_replay = parse_bool(key, value);
  } else if (key == "replay_capacity") {
    cfg.replay.capacity_iterations = parse_int<int>(key, value);
  } else if (key == "utd_ratio") {
    cfg.replay.utd_ratio = parse_int<int>(key, value);
  } else {
    throw ConfigError(std::string(key), "unknown config key '" + std::string(key) + "'");
  }
}

TrainerConfig parse_config(std::string_view text, std::string_view source) {
  struct Entry {
    int line;
    std::string key;
    std::string value;
  };
  std::vector<Entry> entries;
  std::string preset = "desk";
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = std::string(source) + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError("", where + "expected key=value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", where + "empty key");
    if (key == "preset") preset = std::string(value);
    entries.push_back({line_no, std::string(key), std::string(value)});
  }
  TrainerConfig cfg;
  try {
    cfg = preset_config(preset);
  } catch (const ConfigError& e) {
    throw ConfigError("preset", std::string(source) + ": " + e.what());
  }
  for (const auto& e : entries) {
    try {
      set_config_value(cfg, e.key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(err.key(), std::string(source) + ":" + std::to_string(e.line) + ": " + err.what());
    }
  }
  cfg.validate();
  return cfg;
}

TrainerConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string dump_config(const TrainerConfig& cfg) {
  std::ostringstream out;
  out << "preset=" << cfg.preset << '\n'
      << "algo=" << to_string(cfg.algo) << '\n'
      << "env=" << envs::to_string(cfg.env) << '\n'
      << "seed=" << cfg.seed << '\n'
      << "rollout_length=" << cfg.rollout_length << '\n'
      << "parallel_envs=" << cfg.parallel_envs << '\n'
      << "epochs=" << cfg.epochs << '\n'
      << "batch_size=" << cfg.batch_size << '\n'
      << "learning_rate=" << format_double(cfg.learning_rate) << '\n'
      << "max_grad_norm=" << format_double(cfg.max_grad_norm) << '\n'
      << "total_env_steps=" << cfg.total_env_steps << '\n'
      << "eval_every=" << cfg.eval_every << '\n'
      << "eval_episodes=" << cfg.eval_episodes << '\n'
      << "policy_hidden=" << join(cfg.policy_hidden) << '\n'
      << "value_hidden=" << join(cfg.value_hidden) << '\n'
      << "init_log_std=" << format_double(cfg.init_log_std) << '\n'
      << "entropy_coef=" << format_double(cfg.entropy_coef) << '\n'
      << "value_coef=" << format_double(cfg.value_coef) << '\n'
      << "observation_normalization=" << (cfg.observation_normalization ? "true" : "false") << '\n'
      << "gradient_shards=" << cfg.gradient_shards << '\n'
      << "gamma=" << format_double(cfg.adv.gamma) << '\n'
      << "lambda_gae=" << format_double(cfg.adv.lambda_gae) << '\n'
      << "reward_scale=" << format_double(cfg.adv.reward_scale) << '\n'
      << "normalize_advantages=" << (cfg.adv.normalize_advantages ? "true" : "false") << '\n'
      << "group_size=" << cfg.adv.group_size << '\n'
      << "group_std_epsilon=" << format_double(cfg.adv.group_std_epsilon) << '\n'
      << "dual_mode=" << to_string(cfg.dual_mode) << '\n'
      << "lambda=" << format_double(cfg.lambda0) << '\n'
      << "delta=" << format_double(cfg.delta) << '\n'
      << "eta_lambda=" << format_double(cfg.eta_lambda) << '\n'
      << "clip_eps=" << format_double(cfg.clip_eps) << '\n'
      << "clip_eps_low=" << format_double(cfg.clip_eps_low) << '\n'
      << "clip_eps_high=" << format_double(cfg.clip_eps_high) << '\n'
      << "use_replay=" << (cfg.use_replay ? "true" : "false") << '\n'
      << "replay_capacity=" << cfg.replay.capacity_iterations << '\n'
      << "utd_ratio=" << cfg.replay.utd_ratio << '\n';
  return out.str();
}

}  // namespace r2vpo
