#include "deephedge/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>

#include "deephedge/baselines.hpp"
#include "deephedge/errors.hpp"

namespace deephedge::config {

namespace {

double parse_double(const std::string& key, const std::string& text) {
  if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, text));
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    throw ConfigError(fmt::format("{}: '{}' is not an integer", key, text));
  }
  return v;
}

std::uint64_t parse_seed(const std::string& key, const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || text[0] == '-' || end != text.c_str() + text.size() || errno == ERANGE) {
    throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, text));
  }
  return v;
}

int parse_int32(const std::string& key, const std::string& text) {
  const long long v = parse_int(key, text);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError(fmt::format("{}: {} out of range", key, text));
  }
  return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, text));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    auto item = text.substr(start, end - start);
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first != std::string::npos) out.push_back(item.substr(first, last - first + 1));
    start = end + 1;
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += items[i];
  }
  return out;
}

std::string format_decay(const market::DecayRate& d) {
  return d.is_infinite() ? "inf" : format_number(d.rate());
}

market::DecayRate parse_decay(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (std::isnan(v) || v < 0.0) throw ConfigError(fmt::format("{} must be >= 0 or inf", key));
  return market::DecayRate::per_step(v);
}

std::vector<int> parse_hidden(const std::string& key, const std::string& text) {
  std::vector<int> hidden;
  for (const auto& item : split_list(text)) hidden.push_back(parse_int32(key, item));
  return hidden;
}

std::string format_hidden(const std::vector<int>& hidden) {
  std::string out;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(hidden[i]);
  }
  return out;
}

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define DH_NUM(KEY, EXPR)                                                      \
  Field {                                                                      \
    KEY, [](const RunConfig& c) { return format_number(c.EXPR); },             \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_double(KEY, v); } \
  }
#define DH_INT(KEY, EXPR)                                                      \
  Field {                                                                      \
    KEY, [](const RunConfig& c) { return std::to_string(c.EXPR); },            \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_int32(KEY, v); } \
  }
#define DH_BOOL(KEY, EXPR)                                                     \
  Field {                                                                      \
    KEY, [](const RunConfig& c) { return std::string(c.EXPR ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_bool(KEY, v); } \
  }
#define DH_LIST(KEY, EXPR)                                                     \
  Field {                                                                      \
    KEY, [](const RunConfig& c) { return join_list(c.EXPR); },                 \
        [](RunConfig& c, const std::string& v) { c.EXPR = split_list(v); }     \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"run.seed", [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, const std::string& v) { c.seed = parse_seed("run.seed", v); }},
      Field{"run.out_dir", [](const RunConfig& c) { return c.out_dir; },
            [](RunConfig& c, const std::string& v) { c.out_dir = v; }},

      DH_NUM("market.mu_annual", train.market.mu),
      DH_NUM("market.sigma_annual", train.market.sigma),
      DH_NUM("market.s0", train.market.s0),
      DH_NUM("market.dt_years", train.market.dt),
      DH_NUM("market.r_per_step", train.market.r),
      DH_NUM("market.alpha", train.market.alpha),
      DH_NUM("market.beta", train.market.beta),
      Field{"market.lambda_a_per_step",
            [](const RunConfig& c) { return format_decay(c.train.market.lambda_a); },
            [](RunConfig& c, const std::string& v) {
              c.train.market.lambda_a = parse_decay("market.lambda_a_per_step", v);
            }},
      Field{"market.lambda_b_per_step",
            [](const RunConfig& c) { return format_decay(c.train.market.lambda_b); },
            [](RunConfig& c, const std::string& v) {
              c.train.market.lambda_b = parse_decay("market.lambda_b_per_step", v);
            }},
      DH_NUM("market.a0_shares", train.market.a0),
      DH_NUM("market.b0_shares", train.market.b0),

      DH_NUM("option.strike", train.option.strike),
      DH_INT("option.horizon_steps", train.option.horizon),
      Field{"option.premium",
            [](const RunConfig& c) {
              return c.premium_auto && c.train.option.premium == 0.0
                         ? std::string("auto")
                         : format_number(c.train.option.premium);
            },
            [](RunConfig& c, const std::string& v) {
              if (v == "auto") {
                c.premium_auto = true;
                c.train.option.premium = 0.0;
              } else {
                c.premium_auto = false;
                c.train.option.premium = parse_double("option.premium", v);
              }
            }},

      DH_INT("train.batch_size", train.batch_size),
      DH_INT("train.iterations", train.iterations),
      DH_NUM("train.lr", train.lr),
      DH_NUM("train.lr_decay_factor", train.lr_decay),
      DH_INT("train.lr_decay_every", train.lr_decay_every),
      Field{"train.hidden_layers", [](const RunConfig& c) { return format_hidden(c.train.hidden); },
            [](RunConfig& c, const std::string& v) {
              c.train.hidden = parse_hidden("train.hidden_layers", v);
            }},
      Field{"train.activation",
            [](const RunConfig& c) { return std::string(nn::to_string(c.train.activation)); },
            [](RunConfig& c, const std::string& v) { c.train.activation = nn::parse_activation(v); }},
      DH_NUM("train.clip_shares", train.clip.bound),
      DH_BOOL("train.fixed_sample", train.fixed_sample),
      DH_BOOL("train.record_wall_time", train.record_wall_time),
      DH_INT("train.checkpoint_every", checkpoint_every),

      Field{"evaluate.checkpoint", [](const RunConfig& c) { return c.evaluate.checkpoint; },
            [](RunConfig& c, const std::string& v) { c.evaluate.checkpoint = v; }},
      DH_INT("evaluate.n_paths", evaluate.n_paths),
      DH_INT("evaluate.keep_episodes", evaluate.keep_episodes),
      Field{"evaluate.market_source", [](const RunConfig& c) { return c.evaluate.market_source; },
            [](RunConfig& c, const std::string& v) {
              if (v != "checkpoint" && v != "config") {
                throw ConfigError("evaluate.market_source must be 'checkpoint' or 'config'");
              }
              c.evaluate.market_source = v;
            }},

      DH_LIST("policy_surface.checkpoints", policy_surface.checkpoints),
      DH_INT("policy_surface.t_step", policy_surface.t_step),
      DH_NUM("policy_surface.x_prev_shares", policy_surface.x_prev_shares),
      DH_NUM("policy_surface.s_min", policy_surface.s_min),
      DH_NUM("policy_surface.s_max", policy_surface.s_max),
      DH_INT("policy_surface.s_points", policy_surface.s_points),
      DH_INT("policy_surface.v_levels", policy_surface.v_levels),
      DH_NUM("policy_surface.v_min_fraction", policy_surface.v_min_fraction),
      DH_NUM("policy_surface.v_max_fraction", policy_surface.v_max_fraction),

      DH_LIST("path_comparison.checkpoints", path_comparison.checkpoints),
      DH_INT("path_comparison.test_paths", path_comparison.test_paths),

      DH_LIST("constant_price.checkpoints", constant_price.checkpoints),
      DH_NUM("constant_price.price", constant_price.price),
      DH_INT("constant_price.window_last_t", constant_price.window_last_t),

      DH_LIST("pin_risk.checkpoints", pin_risk.checkpoints),
      DH_INT("pin_risk.tail_steps", pin_risk.tail_steps),
  };
  return table;
}

#undef DH_NUM
#undef DH_INT
#undef DH_BOOL
#undef DH_LIST

bool is_training_key(const std::string& key) {
  return key == "run.seed" || key.rfind("market.", 0) == 0 || key.rfind("option.", 0) == 0 ||
         key.rfind("train.", 0) == 0;
}

}  // namespace

std::string format_number(double v) { return fmt::format("{}", v); }

void RunConfig::resolve() {
  train.seed = seed;
  if (premium_auto && train.option.premium == 0.0) {
    train.market.validate();
    train.option.validate();
    train.option.premium = baselines::default_premium(train.option, train.market);
  }
}

RunConfig default_config() {
  RunConfig cfg;
  cfg.resolve();
  return cfg;
}

FlatConfig read_flat(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("malformed config: {}", e.message()));
  }
  FlatConfig flat;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) {
      throw ConfigError(fmt::format("config key '{}' outside of any section", section));
    }
    for (const auto& [key, value] : body) flat[section + "." + key] = value.data();
  }
  return flat;
}

FlatConfig read_flat_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  return read_flat(in);
}

RunConfig from_flat(const FlatConfig& flat) {
  RunConfig cfg;
  std::set<std::string> seen;
  for (const auto& f : fields()) {
    const auto it = flat.find(f.key);
    if (it == flat.end()) continue;
    f.set(cfg, it->second);
    seen.insert(f.key);
  }
  for (const auto& [key, value] : flat) {
    if (key.rfind("manifest.", 0) == 0) continue;
    if (!seen.count(key)) throw ConfigError(fmt::format("unknown config key '{}'", key));
  }
  if (cfg.checkpoint_every < 1) throw ConfigError("train.checkpoint_every must be >= 1");
  cfg.resolve();
  cfg.train.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) { return from_flat(read_flat_file(path)); }

FlatConfig to_flat(const RunConfig& cfg) {
  FlatConfig flat;
  for (const auto& f : fields()) flat[f.key] = f.get(cfg);
  return flat;
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  std::string section;
  for (const auto& f : fields()) {
    const std::string key = f.key;
    const auto dot = key.find('.');
    const auto sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = " << f.get(cfg) << '\n';
  }
}

std::vector<std::pair<std::string, std::string>> training_metadata(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> meta;
  for (const auto& f : fields()) {
    if (is_training_key(f.key)) meta.emplace_back(f.key, f.get(cfg));
  }
  return meta;
}

RunConfig from_metadata(const std::vector<std::pair<std::string, std::string>>& meta) {
  FlatConfig flat;
  for (const auto& [key, value] : meta) {
    if (is_training_key(key)) flat[key] = value;
  }
  return from_flat(flat);
}

}  // namespace deephedge::config
