#include "r2vpo/checkpoint.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace r2vpo {

namespace {

constexpr int kVersion = 1;

void write_reals(std::ostream& out, const char* tag, const Eigen::VectorXd& v) {
  out << tag << ' ' << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << std::hexfloat << v[i] << std::defaultfloat;
  out << '\n';
}

void write_ints(std::ostream& out, const char* tag, const std::vector<int>& v) {
  out << tag << ' ' << v.size();
  for (int x : v) out << ' ' << x;
  out << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::istringstream line(const std::string& expected_tag) {
    std::string text;
    if (!std::getline(in_, text)) fail("missing record '" + expected_tag + "'");
    ++line_no_;
    std::istringstream ls(text);
    std::string tag;
    ls >> tag;
    if (tag != expected_tag) fail("expected '" + expected_tag + "', found '" + tag + "'");
    return ls;
  }

  double real(std::istringstream& ls) {
    std::string tok;
    if (!(ls >> tok)) fail("truncated record");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) fail("bad number '" + tok + "'");
    return v;
  }

  template <typename Int>
  Int integer(std::istringstream& ls) {
    Int v{};
    if (!(ls >> v)) fail("bad integer");
    return v;
  }

  Eigen::VectorXd reals(const std::string& tag) {
    auto ls = line(tag);
    const auto n = integer<Eigen::Index>(ls);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = real(ls);
    return v;
  }

  std::vector<int> ints(const std::string& tag) {
    auto ls = line(tag);
    const auto n = integer<std::size_t>(ls);
    std::vector<int> v(n);
    for (auto& x : v) x = integer<int>(ls);
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("checkpoint line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out << "r2vpo-checkpoint " << kVersion << '\n';
    out << "env " << envs::to_string(c.env) << '\n';
    out << "seed " << c.seed << '\n';
    out << "iteration " << c.iteration << '\n';
    out << "env_steps " << c.env_steps << '\n';
    write_ints(out, "policy_layers", c.policy.mean_net().layer_sizes());
    write_reals(out, "policy_params", c.policy.mean_net().params());
    write_reals(out, "log_std", c.policy.log_std());
    write_ints(out, "value_layers", c.value_net.layer_sizes());
    write_reals(out, "value_params", c.value_net.params());
    out << "obs_count " << std::hexfloat << c.obs_stats.count() << std::defaultfloat << '\n';
    write_reals(out, "obs_mean", c.obs_stats.mean());
    write_reals(out, "obs_m2", c.obs_stats.m2());
    out << "rng " << c.rng_state << '\n';
    if (!out) throw std::runtime_error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  Reader r(in);
  Checkpoint c;
  {
    auto ls = r.line("r2vpo-checkpoint");
    const int version = r.integer<int>(ls);
    if (version != kVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
  }
  {
    auto ls = r.line("env");
    std::string name;
    ls >> name;
    c.env = envs::parse_env_kind(name);
  }
  {
    auto ls = r.line("seed");
    c.seed = r.integer<std::uint64_t>(ls);
  }
  {
    auto ls = r.line("iteration");
    c.iteration = r.integer<long>(ls);
  }
  {
    auto ls = r.line("env_steps");
    c.env_steps = r.integer<long>(ls);
  }
  Mlp mean_net(r.ints("policy_layers"));
  mean_net.assign(r.reals("policy_params"));
  c.policy = GaussianPolicy(std::move(mean_net), r.reals("log_std"));
  c.value_net = Mlp(r.ints("value_layers"));
  c.value_net.assign(r.reals("value_params"));
  double count = 0.0;
  {
    auto ls = r.line("obs_count");
    count = r.real(ls);
  }
  Eigen::VectorXd mean = r.reals("obs_mean");
  Eigen::VectorXd m2 = r.reals("obs_m2");
  c.obs_stats = RunningStats(static_cast<int>(mean.size()));
  c.obs_stats.restore(count, std::move(mean), std::move(m2));
  {
    auto ls = r.line("rng");
    std::getline(ls, c.rng_state);
    if (!c.rng_state.empty() && c.rng_state.front() == ' ') c.rng_state.erase(0, 1);
  }
  return c;
}

}  // namespace r2vpo
