#include "silp/config.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

extern char** environ;

namespace silp {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& ctx, const std::string& msg) {
  throw std::invalid_argument("config " + ctx + ": " + msg);
}

// Tracks which keys of an object were consumed so leftovers (misspellings)
// can be rejected.
class Fields {
 public:
  Fields(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
    if (!j.is_object()) bad(ctx_, "expected a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    try {
      it->get_to(out);
    } catch (const json::exception& e) {
      bad(ctx_, std::string("key '") + key + "': " + e.what());
    }
  }

  // Sub-document, nullptr when absent.
  const json* sub(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) bad(ctx_, "unknown key '" + it.key() + "'");
  }

  const std::string& ctx() const { return ctx_; }

 private:
  const json& j_;
  std::string ctx_;
  std::set<std::string> seen_;
};

std::vector<double> std_vec(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd eigen_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

json aabb_to_json(const Aabb& b) {
  return json::array({b.min.x(), b.min.y(), b.max.x(), b.max.y()});
}

Aabb aabb_from_json(const json& j, const std::string& ctx) {
  std::vector<double> v;
  try {
    j.get_to(v);
  } catch (const json::exception& e) {
    bad(ctx, e.what());
  }
  if (v.size() != 4) bad(ctx, "expected [xmin, ymin, xmax, ymax]");
  return Aabb{{v[0], v[1]}, {v[2], v[3]}};
}

template <typename Enum>
Enum enum_from(const json& j, Enum (*parse)(const std::string&),
               const std::string& ctx) {
  std::string s;
  try {
    j.get_to(s);
  } catch (const json::exception& e) {
    bad(ctx, e.what());
  }
  try {
    return parse(s);
  } catch (const std::invalid_argument& e) {
    bad(ctx, e.what());
  }
}

}  // namespace

// --- EnvConfig ---------------------------------------------------------------

json to_json(const EnvConfig& c) {
  return json{
      {"link_lengths", std_vec(c.arm.link_lengths)},
      {"joint_limits",
       json::array({std_vec(c.arm.joint_lo), std_vec(c.arm.joint_hi)})},
      {"workspace", aabb_to_json(c.workspace)},
      {"obstacle_region", aabb_to_json(c.obstacle_region)},
      {"obstacle_width", c.obstacle_width},
      {"obstacle_height", c.obstacle_height},
      {"err", c.err},
      {"max_steps", c.max_steps},
      {"inflate", c.inflate},
      {"step_size", c.step_size},
      {"collision_mode", to_int(c.collision_mode)},
  };
}

EnvConfig env_from_json(const json& j) {
  EnvConfig c;
  Fields f(j, "env");

  std::vector<double> links = std_vec(c.arm.link_lengths);
  f.get("link_lengths", links);
  if (links.empty()) bad(f.ctx(), "link_lengths must be non-empty");
  c.arm.link_lengths = eigen_vec(links);

  if (const json* jl = f.sub("joint_limits")) {
    std::vector<std::vector<double>> lim;
    try {
      jl->get_to(lim);
    } catch (const json::exception& e) {
      bad(f.ctx(), std::string("key 'joint_limits': ") + e.what());
    }
    if (lim.size() != 2 || lim[0].size() != links.size() ||
        lim[1].size() != links.size())
      bad(f.ctx(), "joint_limits must be [lo, hi] arrays matching link count");
    c.arm.joint_lo = eigen_vec(lim[0]);
    c.arm.joint_hi = eigen_vec(lim[1]);
  } else if (c.arm.joint_lo.size() != static_cast<Eigen::Index>(links.size())) {
    // Default limits resized to the configured link count.
    const auto n = static_cast<Eigen::Index>(links.size());
    c.arm.joint_lo = Eigen::VectorXd::Constant(n, -EIGEN_PI);
    c.arm.joint_hi = Eigen::VectorXd::Constant(n, EIGEN_PI);
  }

  if (const json* jw = f.sub("workspace"))
    c.workspace = aabb_from_json(*jw, f.ctx() + ".workspace");
  if (const json* jo = f.sub("obstacle_region"))
    c.obstacle_region = aabb_from_json(*jo, f.ctx() + ".obstacle_region");

  f.get("obstacle_width", c.obstacle_width);
  f.get("obstacle_height", c.obstacle_height);
  f.get("err", c.err);
  f.get("max_steps", c.max_steps);
  f.get("inflate", c.inflate);
  f.get("step_size", c.step_size);

  if (const json* jm = f.sub("collision_mode")) {
    int mode = 0;
    try {
      jm->get_to(mode);
      c.collision_mode = collision_mode_from_int(mode);
    } catch (const json::exception& e) {
      bad(f.ctx(), std::string("key 'collision_mode': ") + e.what());
    } catch (const std::invalid_argument& e) {
      bad(f.ctx(), e.what());
    }
  }

  f.finish();
  return c;
}

// --- LearnerConfig -----------------------------------------------------------

json to_json(const LearnerConfig& c) {
  return json{
      {"hidden", c.hidden},
      {"gamma", c.gamma},
      {"tau", c.tau},
      {"actor_lr", c.actor_lr},
      {"critic_lr", c.critic_lr},
      {"alpha_lr", c.alpha_lr},
      {"init_alpha", c.init_alpha},
      {"auto_alpha", c.auto_alpha},
      {"ddpg_noise", c.ddpg_noise},
      {"lambda1", c.lambda1},
      {"lambda2", c.lambda2},
      {"batch_policy", c.batch_policy},
      {"batch_demo", c.batch_demo},
      {"k_return", c.k_return},
      {"filter", to_string(c.filter)},
      {"bc_sum", c.bc_sum},
      {"truncate_lookahead", c.truncate_lookahead},
  };
}

LearnerConfig learner_from_json(const json& j) {
  LearnerConfig c;
  Fields f(j, "learner");
  f.get("hidden", c.hidden);
  f.get("gamma", c.gamma);
  f.get("tau", c.tau);
  f.get("actor_lr", c.actor_lr);
  f.get("critic_lr", c.critic_lr);
  f.get("alpha_lr", c.alpha_lr);
  f.get("init_alpha", c.init_alpha);
  f.get("auto_alpha", c.auto_alpha);
  f.get("ddpg_noise", c.ddpg_noise);
  f.get("lambda1", c.lambda1);
  f.get("lambda2", c.lambda2);
  f.get("batch_policy", c.batch_policy);
  f.get("batch_demo", c.batch_demo);
  f.get("k_return", c.k_return);
  if (const json* jf = f.sub("filter"))
    c.filter = enum_from(*jf, filter_from_string, f.ctx() + ".filter");
  f.get("bc_sum", c.bc_sum);
  f.get("truncate_lookahead", c.truncate_lookahead);
  f.finish();
  return c;
}

// --- TrainerConfig -----------------------------------------------------------

json to_json(const TrainerConfig& c) {
  return json{
      {"algo", to_string(c.algo)},
      {"mode", to_string(c.mode)},
      {"env", to_json(c.env)},
      {"learner", to_json(c.learner)},
      {"gp",
       json{{"enabled", c.gp_enabled},
            {"signal_var", c.gp.signal_var},
            {"lengthscale", c.gp.lengthscale},
            {"noise_var", c.gp.noise_var},
            {"candidates", c.gp_candidates}}},
      {"plan",
       json{{"distance", c.plan_distance},
            {"pair_mode", to_string(c.pair_mode)},
            {"n_pairs", c.n_plan_pairs}}},
      {"epochs", c.epochs},
      {"episodes_per_epoch", c.episodes_per_epoch},
      {"updates_per_epoch", c.updates_per_epoch},
      {"replay_capacity", c.replay_capacity},
      {"demo_capacity", c.demo_capacity},
  };
}

TrainerConfig trainer_from_json(const json& j) {
  TrainerConfig c;
  Fields f(j, "trainer");
  if (const json* ja = f.sub("algo"))
    c.algo = enum_from(*ja, algo_from_string, f.ctx() + ".algo");
  if (const json* jm = f.sub("mode"))
    c.mode = enum_from(*jm, mode_from_string, f.ctx() + ".mode");
  if (const json* je = f.sub("env")) c.env = env_from_json(*je);
  if (const json* jl = f.sub("learner")) c.learner = learner_from_json(*jl);
  if (const json* jg = f.sub("gp")) {
    Fields g(*jg, "trainer.gp");
    g.get("enabled", c.gp_enabled);
    g.get("signal_var", c.gp.signal_var);
    g.get("lengthscale", c.gp.lengthscale);
    g.get("noise_var", c.gp.noise_var);
    g.get("candidates", c.gp_candidates);
    g.finish();
  }
  if (const json* jp = f.sub("plan")) {
    Fields p(*jp, "trainer.plan");
    p.get("distance", c.plan_distance);
    if (const json* jpm = p.sub("pair_mode"))
      c.pair_mode =
          enum_from(*jpm, pair_mode_from_string, "trainer.plan.pair_mode");
    p.get("n_pairs", c.n_plan_pairs);
    p.finish();
  }
  f.get("epochs", c.epochs);
  f.get("episodes_per_epoch", c.episodes_per_epoch);
  f.get("updates_per_epoch", c.updates_per_epoch);
  f.get("replay_capacity", c.replay_capacity);
  f.get("demo_capacity", c.demo_capacity);
  f.finish();
  return c;
}

// --- ExperimentConfig --------------------------------------------------------

void ExperimentConfig::validate() const {
  if (name.empty()) throw std::invalid_argument("experiment name is empty");
  if (seeds.empty()) throw std::invalid_argument("seed list is empty");
  if (eval_episodes < 0)
    throw std::invalid_argument("eval_episodes must be >= 0");
  trainer.validate();
}

json to_json(const ExperimentConfig& c) {
  return json{
      {"name", c.name},
      {"trainer", to_json(c.trainer)},
      {"seeds", c.seeds},
      {"eval_episodes", c.eval_episodes},
      {"out_dir", c.out_dir},
  };
}

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig c;
  Fields f(j, "experiment");
  f.get("name", c.name);
  if (const json* jt = f.sub("trainer")) c.trainer = trainer_from_json(*jt);
  f.get("seeds", c.seeds);
  f.get("eval_episodes", c.eval_episodes);
  f.get("out_dir", c.out_dir);
  f.finish();
  return c;
}

// --- environment-variable overrides ------------------------------------------

int apply_env_overrides(json& doc, const std::string& prefix) {
  std::vector<std::pair<std::string, std::string>> vars;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string name = entry.substr(0, eq);
    if (name.rfind(prefix, 0) != 0) continue;
    vars.emplace_back(name, entry.substr(eq + 1));
  }
  std::sort(vars.begin(), vars.end());  // deterministic application order

  for (const auto& [name, value] : vars) {
    const std::string path = name.substr(prefix.size());
    json* node = &doc;
    std::size_t pos = 0;
    while (true) {
      const auto sep = path.find("__", pos);
      const std::string key =
          path.substr(pos, sep == std::string::npos ? sep : sep - pos);
      if (!node->is_object() || !node->contains(key))
        throw std::invalid_argument("override " + name +
                                    ": unknown config path segment '" + key +
                                    "'");
      node = &(*node)[key];
      if (sep == std::string::npos) break;
      pos = sep + 2;
    }
    json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
    *node = parsed.is_discarded() ? json(value) : parsed;
  }
  return static_cast<int>(vars.size());
}

ExperimentConfig load_experiment(const std::string& path,
                                 bool with_env_overrides) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  // Expand to the canonical document first so override paths resolve against
  // the complete schema, not just the keys the file happens to set.
  json canonical = to_json(experiment_from_json(j));
  if (with_env_overrides) apply_env_overrides(canonical);
  ExperimentConfig c = experiment_from_json(canonical);
  c.validate();
  return c;
}

}  // namespace silp
