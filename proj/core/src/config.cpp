#include "entroplan/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "entroplan/rng.hpp"

namespace entroplan {

namespace {

// Keys from the wider reference schema accepted here but not used.
const std::set<std::string>& inert_keys() {
  static const std::set<std::string> keys = {
      "logdir", "traindir", "evaldir", "offline_traindir", "offline_evaldir",
      "deterministic_run", "parallel", "eval_every", "eval_episode_num",
      "log_every", "reset_every", "device", "compile", "precision", "debug",
      "size", "grayscale", "action_repeat", "envs", "pretrain", "opt",
      "grad_heads", "act", "norm", "weight_decay", "dyn_rec_depth",
      "dyn_mean_act", "dyn_std_act", "dyn_min_std", "expl_behavior",
      "expl_until", "expl_extr_scale", "expl_intr_scale", "disag_target",
      "disag_log", "disag_models", "disag_offset", "disag_layers",
      "disag_units", "disag_action_cond", "imag_gradient",
      "imag_gradient_mix", "eval_state_mean", "video_pred_log",
      "num_meta_action_lwr", "step",
  };
  return keys;
}

// Section headers whose indented bodies are stored namespaced and inert.
const std::set<std::string>& section_keys() {
  static const std::set<std::string> keys = {
      "encoder", "decoder", "actor", "critic", "value", "Q", "reward_head",
      "entropy_head", "cont_head", "dmc_vision", "crafter",
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '\'' && s.back() == '\'') ||
                        (s.front() == '"' && s.back() == '"')))
    return s.substr(1, s.size() - 2);
  return s;
}

bool parse_bool(const std::string& key, const std::string& v) {
  std::string lower = v;
  std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
  if (lower == "true" || lower == "1" || lower == "yes") return true;
  if (lower == "false" || lower == "0" || lower == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" +
                    v + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" +
                      v + "'");
  }
}

int64_t parse_int(const std::string& key, const std::string& v) {
  const double d = parse_double(key, v);
  if (std::abs(d - std::round(d)) > 1e-9)
    throw ConfigError("config key '" + key + "': expected an integer, got '" +
                      v + "'");
  return static_cast<int64_t>(std::llround(d));
}

}  // namespace

void Config::set(const std::string& key, const std::string& raw_value) {
  const std::string value = strip_quotes(trim(raw_value));
  const auto as_int = [&] { return parse_int(key, value); };
  const auto as_dbl = [&] { return parse_double(key, value); };
  const auto as_bool = [&] { return parse_bool(key, value); };

  if (key == "use_plan") use_plan = as_bool();
  else if (key == "seed") seed = static_cast<uint64_t>(as_int());
  else if (key == "steps") steps = as_int();
  else if (key == "prefill") prefill = as_int();
  else if (key == "checkpoint_every") checkpoint_every = as_int();
  else if (key == "task") task = value;
  else if (key == "time_limit") time_limit = static_cast<int>(as_int());
  else if (key == "maze_width") maze_width = static_cast<int>(as_int());
  else if (key == "maze_height") maze_height = static_cast<int>(as_int());
  else if (key == "porosity") porosity = as_dbl();
  else if (key == "blur") blur = static_cast<int>(as_int());
  else if (key == "prox_radius") prox_radius = as_dbl();
  else if (key == "prox_mul") prox_mul = as_dbl();
  else if (key == "goal_count") goal_count = static_cast<int>(as_int());
  else if (key == "reward_scale") reward_scale = as_dbl();
  else if (key == "dyn_deter") dyn_deter = static_cast<int>(as_int());
  else if (key == "dyn_hidden") dyn_hidden = static_cast<int>(as_int());
  else if (key == "dyn_stoch") dyn_stoch = static_cast<int>(as_int());
  else if (key == "dyn_discrete") dyn_discrete = static_cast<int>(as_int());
  else if (key == "units") units = static_cast<int>(as_int());
  else if (key == "unimix_ratio") unimix_ratio = as_dbl();
  else if (key == "dyn_scale") dyn_scale = as_dbl();
  else if (key == "rep_scale") rep_scale = as_dbl();
  else if (key == "kl_free") kl_free = as_dbl();
  else if (key == "initial") initial = value;
  else if (key == "model_lr") model_lr = as_dbl();
  else if (key == "opt_eps") opt_eps = as_dbl();
  else if (key == "grad_clip") grad_clip = as_dbl();
  else if (key == "batch_size") batch_size = static_cast<int>(as_int());
  else if (key == "batch_length") batch_length = static_cast<int>(as_int());
  else if (key == "train_ratio") train_ratio = as_int();
  else if (key == "dataset_size") dataset_size = as_int();
  else if (key == "discount") discount = as_dbl();
  else if (key == "discount_lambda") discount_lambda = as_dbl();
  else if (key == "imag_horizon") imag_horizon = static_cast<int>(as_int());
  else if (key == "imag_starts") imag_starts = static_cast<int>(as_int());
  else if (key == "actor_lr") actor_lr = as_dbl();
  else if (key == "critic_lr") critic_lr = as_dbl();
  else if (key == "actor_eps") actor_eps = as_dbl();
  else if (key == "actor_grad_clip") actor_grad_clip = as_dbl();
  else if (key == "actor_entropy") actor_entropy = as_dbl();
  else if (key == "slow_target_fraction") slow_target_fraction = as_dbl();
  else if (key == "reward_EMA") reward_EMA = as_bool();
  else if (key == "expl_epsilon") expl_epsilon = as_dbl();
  else if (key == "plan_max_horizon")
    plan_max_horizon = static_cast<int>(as_int());
  else if (key == "plan_choices") plan_choices = static_cast<int>(as_int());
  else if (key == "plan_aggregate") plan_aggregate = value;
  else if (key == "ent_multiplier") ent_multiplier = as_dbl();
  else if (key == "rew_multiplier") rew_multiplier = as_dbl();
  else if (key == "plan_train_every")
    plan_train_every = static_cast<int>(as_int());
  else if (key == "sub_batch_size")
    sub_batch_size = static_cast<int>(as_int());
  else if (key == "num_epochs") num_epochs = static_cast<int>(as_int());
  else if (key == "buffer_size") buffer_size = as_int();
  else if (key == "clip_epsilon") clip_epsilon = as_dbl();
  else if (key == "gamma") gamma = as_dbl();
  else if (key == "lmbda") lmbda = as_dbl();
  else if (key == "entropy_eps") entropy_eps = as_dbl();
  else if (key == "num_cells") num_cells = static_cast<int>(as_int());
  else if (key == "lr") lr = as_dbl();
  else if (key == "seq_length") seq_length = static_cast<int>(as_int());
  else if (key == "buffer_minimum") buffer_minimum = as_int();
  else if (key == "meta_action_quant")
    meta_action_quant = static_cast<int>(as_int());
  else if (inert_keys().count(key) || section_keys().count(key) ||
           key.find('.') != std::string::npos) {
    const std::string section = key.substr(0, key.find('.'));
    if (key.find('.') != std::string::npos && !section_keys().count(section))
      throw ConfigError("unknown config key: " + key);
    inert[key] = raw_value;
  } else {
    throw ConfigError("unknown config key: " + key);
  }
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like key=value: " + assignment);
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

Config Config::from_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  while (std::getline(in, line)) {
    const bool indented =
        !line.empty() && (line[0] == ' ' || line[0] == '\t');
    // strip comments
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;

    if (indented) {
      if (section.empty())
        throw ConfigError("indented line outside a section: " + stripped);
      const auto colon = stripped.find(':');
      const std::string sub =
          colon == std::string::npos ? stripped : trim(stripped.substr(0, colon));
      const std::string val =
          colon == std::string::npos ? "" : stripped.substr(colon + 1);
      cfg.inert[section + "." + sub] = val;
      continue;
    }

    const auto colon = stripped.find(':');
    if (colon == std::string::npos)
      throw ConfigError("expected 'key: value', got: " + stripped);
    const std::string key = trim(stripped.substr(0, colon));
    const std::string value = trim(stripped.substr(colon + 1));
    if (value.empty()) {
      if (!section_keys().count(key))
        throw ConfigError("unknown config key: " + key);
      section = key;
      cfg.inert[key] = "";
      continue;
    }
    section = section_keys().count(key) ? key : "";
    cfg.set(key, value);
  }
  cfg.validate();
  return cfg;
}

Config Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

void Config::validate() const {
  // `task` is validated by the environment factory at run time so configs
  // written for other task suites still parse.
  if (initial != "learned")
    throw ConfigError("initial supports only 'learned'");
  if (plan_aggregate != "sum" && plan_aggregate != "mean")
    throw ConfigError("plan_aggregate must be sum or mean");
  if (porosity < 0.0 || porosity > 1.0)
    throw ConfigError("porosity must lie in [0, 1]");
  if (maze_width < 2 || maze_height < 2)
    throw ConfigError("maze must be at least 2x2");
  if (goal_count != 3) throw ConfigError("goal_count must be 3");
  if (batch_size < 1 || batch_length < 1)
    throw ConfigError("batch_size and batch_length must be positive");
  if (dyn_stoch < 1 || dyn_discrete < 2)
    throw ConfigError("latent shape needs dyn_stoch >= 1, dyn_discrete >= 2");
  if (unimix_ratio <= 0.0 || unimix_ratio >= 1.0)
    throw ConfigError("unimix_ratio must lie in (0, 1)");
  if (meta_action_quant < 2)
    throw ConfigError("meta_action_quant must be at least 2");
  if (plan_max_horizon < 1 || plan_choices < 1)
    throw ConfigError("planner needs positive horizon and choices");
  if (seq_length < 1) throw ConfigError("seq_length must be positive");
  if (buffer_minimum > buffer_size)
    throw ConfigError("buffer_minimum cannot exceed buffer_size");
  if (prefill < batch_length)
    throw ConfigError("prefill must cover at least one batch_length");
}

std::string Config::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "use_plan: " << (use_plan ? "True" : "False") << '\n'
      << "seed: " << seed << '\n'
      << "steps: " << steps << '\n'
      << "prefill: " << prefill << '\n'
      << "checkpoint_every: " << checkpoint_every << '\n'
      << "task: " << task << '\n'
      << "time_limit: " << time_limit << '\n'
      << "maze_width: " << maze_width << '\n'
      << "maze_height: " << maze_height << '\n'
      << "porosity: " << porosity << '\n'
      << "blur: " << blur << '\n'
      << "prox_radius: " << prox_radius << '\n'
      << "prox_mul: " << prox_mul << '\n'
      << "goal_count: " << goal_count << '\n'
      << "reward_scale: " << reward_scale << '\n'
      << "dyn_deter: " << dyn_deter << '\n'
      << "dyn_hidden: " << dyn_hidden << '\n'
      << "dyn_stoch: " << dyn_stoch << '\n'
      << "dyn_discrete: " << dyn_discrete << '\n'
      << "units: " << units << '\n'
      << "unimix_ratio: " << unimix_ratio << '\n'
      << "dyn_scale: " << dyn_scale << '\n'
      << "rep_scale: " << rep_scale << '\n'
      << "kl_free: " << kl_free << '\n'
      << "initial: " << initial << '\n'
      << "model_lr: " << model_lr << '\n'
      << "opt_eps: " << opt_eps << '\n'
      << "grad_clip: " << grad_clip << '\n'
      << "batch_size: " << batch_size << '\n'
      << "batch_length: " << batch_length << '\n'
      << "train_ratio: " << train_ratio << '\n'
      << "dataset_size: " << dataset_size << '\n'
      << "discount: " << discount << '\n'
      << "discount_lambda: " << discount_lambda << '\n'
      << "imag_horizon: " << imag_horizon << '\n'
      << "imag_starts: " << imag_starts << '\n'
      << "actor_lr: " << actor_lr << '\n'
      << "critic_lr: " << critic_lr << '\n'
      << "actor_eps: " << actor_eps << '\n'
      << "actor_grad_clip: " << actor_grad_clip << '\n'
      << "actor_entropy: " << actor_entropy << '\n'
      << "slow_target_fraction: " << slow_target_fraction << '\n'
      << "reward_EMA: " << (reward_EMA ? "True" : "False") << '\n'
      << "expl_epsilon: " << expl_epsilon << '\n'
      << "plan_max_horizon: " << plan_max_horizon << '\n'
      << "plan_choices: " << plan_choices << '\n'
      << "plan_aggregate: " << plan_aggregate << '\n'
      << "ent_multiplier: " << ent_multiplier << '\n'
      << "rew_multiplier: " << rew_multiplier << '\n'
      << "plan_train_every: " << plan_train_every << '\n'
      << "sub_batch_size: " << sub_batch_size << '\n'
      << "num_epochs: " << num_epochs << '\n'
      << "buffer_size: " << buffer_size << '\n'
      << "clip_epsilon: " << clip_epsilon << '\n'
      << "gamma: " << gamma << '\n'
      << "lmbda: " << lmbda << '\n'
      << "entropy_eps: " << entropy_eps << '\n'
      << "num_cells: " << num_cells << '\n'
      << "lr: " << lr << '\n'
      << "seq_length: " << seq_length << '\n'
      << "buffer_minimum: " << buffer_minimum << '\n'
      << "meta_action_quant: " << meta_action_quant << '\n';
  return out.str();
}

uint64_t Config::hash() const { return fnv1a64(to_text()); }

std::string Config::run_id() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash()));
  return task + "-s" + std::to_string(seed) + "-" + std::string(buf).substr(0, 8);
}

}  // namespace entroplan
