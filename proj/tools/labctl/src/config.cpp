#include "labctl/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <auxlab/format.hpp>

namespace labctl {

using namespace auxlab;

namespace {

struct Value {
  bool list = false;
  std::vector<std::string> items;
  int line = 0;
};

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string unquote(const std::string& token, int line) {
  if (token.size() >= 2 && token.front() == '"' && token.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < token.size(); ++i) {
      if (token[i] == '\\' && i + 2 < token.size()) {
        out += token[++i];
      } else if (token[i] == '"') {
        fail(line, "stray quote in string");
      } else {
        out += token[i];
      }
    }
    return out;
  }
  if (token.find('"') != std::string::npos) fail(line, "unterminated string");
  return token;
}

// Strips a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && quoted) {
      ++i;
    } else if (line[i] == '"') {
      quoted = !quoted;
    } else if (line[i] == '#' && !quoted) {
      return line.substr(0, i);
    }
  }
  return line;
}

Value parse_value(const std::string& raw, int line) {
  Value v;
  v.line = line;
  const std::string text = trim(raw);
  if (text.empty()) fail(line, "missing value");
  if (text.front() == '[') {
    if (text.back() != ']') fail(line, "unterminated list");
    v.list = true;
    const std::string body = trim(text.substr(1, text.size() - 2));
    if (body.empty()) return v;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
      const char c = body[i];
      if (c == '\\' && quoted && i + 1 < body.size()) {
        cur += c;
        cur += body[++i];
        continue;
      }
      if (c == '"') quoted = !quoted;
      if (c == ',' && !quoted) {
        v.items.push_back(unquote(trim(cur), line));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (quoted) fail(line, "unterminated string");
    v.items.push_back(unquote(trim(cur), line));
    for (const auto& item : v.items) {
      if (item.empty()) fail(line, "empty list element");
    }
    return v;
  }
  v.items.push_back(unquote(text, line));
  return v;
}

const std::string& scalar(const Value& v) {
  if (v.list || v.items.size() != 1) fail(v.line, "expected a single value");
  return v.items.front();
}

double to_double(const std::string& s, int line) {
  try {
    return parse_double(s);
  } catch (const Error&) {
    fail(line, "'" + s + "' is not a number");
  }
}

std::uint64_t to_u64(const std::string& s, int line) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    fail(line, "'" + s + "' is not a nonnegative integer");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    fail(line, "'" + s + "' is out of range");
  }
}

bool to_bool(const std::string& s, int line) {
  if (s == "true") return true;
  if (s == "false") return false;
  fail(line, "'" + s + "' is not true/false");
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

template <class T, class F>
std::string render_list(const std::vector<T>& items, F fmt) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += fmt(items[i]);
  }
  return out + "]";
}

struct Binding {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const Value&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class Acc>
Binding b_double(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k),
          [acc](RunConfig& c, const Value& v) { acc(c) = to_double(scalar(v), v.line); },
          [acc](const RunConfig& c) { return format_double(acc(const_cast<RunConfig&>(c))); }};
}

template <class T, class Acc>
Binding b_uint(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k),
          [acc](RunConfig& c, const Value& v) { acc(c) = static_cast<T>(to_u64(scalar(v), v.line)); },
          [acc](const RunConfig& c) { return std::to_string(acc(const_cast<RunConfig&>(c))); }};
}

template <class Acc>
Binding b_bool(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k),
          [acc](RunConfig& c, const Value& v) { acc(c) = to_bool(scalar(v), v.line); },
          [acc](const RunConfig& c) { return std::string(acc(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

template <class Acc>
Binding b_string(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k), [acc](RunConfig& c, const Value& v) { acc(c) = scalar(v); },
          [acc](const RunConfig& c) { return quote(acc(const_cast<RunConfig&>(c))); }};
}

template <class E, class Acc, class From, class To>
Binding b_enum(std::string s, std::string k, Acc acc, From from, To to) {
  return {std::move(s), std::move(k),
          [acc, from](RunConfig& c, const Value& v) {
            try {
              acc(c) = from(scalar(v));
            } catch (const InvalidArgument& e) {
              fail(v.line, e.what());
            }
          },
          [acc, to](const RunConfig& c) { return quote(to(acc(const_cast<RunConfig&>(c)))); }};
}

template <class Acc>
Binding b_doubles(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k),
          [acc](RunConfig& c, const Value& v) {
            std::vector<double> out;
            for (const auto& item : v.items) out.push_back(to_double(item, v.line));
            acc(c) = std::move(out);
          },
          [acc](const RunConfig& c) {
            return render_list(acc(const_cast<RunConfig&>(c)), [](double d) { return format_double(d); });
          }};
}

template <class Acc>
Binding b_sizes(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k),
          [acc](RunConfig& c, const Value& v) {
            std::vector<std::size_t> out;
            for (const auto& item : v.items) out.push_back(static_cast<std::size_t>(to_u64(item, v.line)));
            acc(c) = std::move(out);
          },
          [acc](const RunConfig& c) {
            return render_list(acc(const_cast<RunConfig&>(c)), [](std::size_t d) { return std::to_string(d); });
          }};
}

template <class Acc>
Binding b_strings(std::string s, std::string k, Acc acc) {
  return {std::move(s), std::move(k), [acc](RunConfig& c, const Value& v) { acc(c) = v.items; },
          [acc](const RunConfig& c) { return render_list(acc(const_cast<RunConfig&>(c)), quote); }};
}

const std::vector<Binding>& bindings() {
  using C = RunConfig;
  static const std::vector<Binding> table = {
      b_string("model", "kind", [](C& c) -> auto& { return c.model; }),
      b_sizes("model", "widths", [](C& c) -> auto& { return c.widths; }),
      b_string("model", "activation", [](C& c) -> auto& { return c.activation; }),
      b_doubles("model", "theta", [](C& c) -> auto& { return c.theta; }),

      b_string("loss", "kind", [](C& c) -> auto& { return c.loss; }),
      b_uint<int>("loss", "p", [](C& c) -> auto& { return c.power; }),

      b_string("data", "fixture", [](C& c) -> auto& { return c.fixture; }),
      b_string("data", "path", [](C& c) -> auto& { return c.path; }),

      b_double("augment", "lambda", [](C& c) -> auto& { return c.lambda; }),
      b_enum<Reduction>("augment", "reduction", [](C& c) -> auto& { return c.reduction; }, reduction_from_string,
                        [](Reduction r) { return to_string(r); }),

      b_enum<Method>("optimizer", "method", [](C& c) -> auto& { return c.optimizer.method; }, method_from_string,
                     [](Method m) { return to_string(m); }),
      b_double("optimizer", "lr", [](C& c) -> auto& { return c.optimizer.lr; }),
      b_double("optimizer", "delta", [](C& c) -> auto& { return c.optimizer.delta; }),
      b_uint<std::size_t>("optimizer", "batch_size", [](C& c) -> auto& { return c.optimizer.batch_size; }),
      b_uint<std::size_t>("optimizer", "max_iterations", [](C& c) -> auto& { return c.optimizer.max_iterations; }),
      b_double("optimizer", "grad_tol", [](C& c) -> auto& { return c.optimizer.grad_tol; }),
      b_uint<std::size_t>("optimizer", "sample_every", [](C& c) -> auto& { return c.optimizer.sample_every; }),
      b_strings("optimizer", "frozen", [](C& c) -> auto& { return c.optimizer.frozen_segments; }),

      b_double("monitor", "threshold", [](C& c) -> auto& { return c.monitor.threshold; }),
      b_enum<NormKind>("monitor", "norm", [](C& c) -> auto& { return c.monitor.norm; }, norm_kind_from_string,
                       [](NormKind n) { return to_string(n); }),
      b_enum<MonitorAction>("monitor", "action", [](C& c) -> auto& { return c.monitor.action; },
                            monitor_action_from_string, [](MonitorAction a) { return to_string(a); }),
      b_uint<std::size_t>("monitor", "max_restarts", [](C& c) -> auto& { return c.monitor.max_restarts; }),
      b_double("monitor", "init_radius", [](C& c) -> auto& { return c.monitor.init_radius; }),
      b_bool("monitor", "redraw_theta", [](C& c) -> auto& { return c.monitor.redraw_theta; }),

      b_uint<std::size_t>("experiment", "seeds", [](C& c) -> auto& { return c.seeds; }),
      b_uint<std::uint64_t>("experiment", "base_seed", [](C& c) -> auto& { return c.base_seed; }),
      b_strings("experiment", "variants", [](C& c) -> auto& { return c.variants; }),
      b_double("experiment", "aux_init_radius", [](C& c) -> auto& { return c.aux_init_radius; }),
      b_double("experiment", "success_threshold", [](C& c) -> auto& { return c.success_threshold; }),
      b_uint<std::size_t>("experiment", "histogram_bins", [](C& c) -> auto& { return c.histogram_bins; }),
      b_double("experiment", "histogram_lo", [](C& c) -> auto& { return c.histogram_lo; }),
      b_double("experiment", "histogram_hi", [](C& c) -> auto& { return c.histogram_hi; }),
      b_bool("experiment", "write_trajectories", [](C& c) -> auto& { return c.write_trajectories; }),

      b_double("landscape", "theta_lo", [](C& c) -> auto& { return c.landscape.theta_lo; }),
      b_double("landscape", "theta_hi", [](C& c) -> auto& { return c.landscape.theta_hi; }),
      b_uint<std::size_t>("landscape", "theta_steps", [](C& c) -> auto& { return c.landscape.theta_steps; }),
      b_double("landscape", "b_lo", [](C& c) -> auto& { return c.landscape.b_lo; }),
      b_double("landscape", "b_hi", [](C& c) -> auto& { return c.landscape.b_hi; }),
      b_uint<std::size_t>("landscape", "b_steps", [](C& c) -> auto& { return c.landscape.b_steps; }),
      b_double("landscape", "bracket", [](C& c) -> auto& { return c.landscape.bracket; }),
      b_uint<std::size_t>("landscape", "golden_iterations", [](C& c) -> auto& { return c.landscape.golden_iterations; }),
      b_uint<std::size_t>("landscape", "newton_steps", [](C& c) -> auto& { return c.landscape.newton_steps; }),

      b_double("verify", "radius", [](C& c) -> auto& { return c.radius; }),
      b_uint<std::size_t>("verify", "samples", [](C& c) -> auto& { return c.samples; }),
      b_uint<std::size_t>("verify", "grad_points", [](C& c) -> auto& { return c.grad_points; }),
      b_uint<std::uint64_t>("verify", "seed", [](C& c) -> auto& { return c.verify_seed; }),
      b_doubles("verify", "pgb_eps", [](C& c) -> auto& { return c.pgb.eps_ladder; }),
      b_uint<std::size_t>("verify", "pgb_directions", [](C& c) -> auto& { return c.pgb.directions; }),
      b_uint<std::size_t>("verify", "pgb_inner_iterations", [](C& c) -> auto& { return c.pgb.inner_max_iterations; }),

      b_doubles("oracle", "lo", [](C& c) -> auto& { return c.oracle_lo; }),
      b_doubles("oracle", "hi", [](C& c) -> auto& { return c.oracle_hi; }),
      b_double("oracle", "resolution", [](C& c) -> auto& { return c.resolution; }),

      b_string("output", "dir", [](C& c) -> auto& { return c.out; }),
  };
  return table;
}

void validate(const RunConfig& c) {
  if (!(c.lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (c.power < 2) throw ConfigError("smoothed hinge power p must be at least 2");
  if (c.seeds < 1) throw ConfigError("experiment seeds must be at least 1");
  if (c.histogram_bins < 1 || !(c.histogram_hi > c.histogram_lo)) throw ConfigError("histogram range is empty");
  if (!(c.radius > 0.0) || c.samples < 1) throw ConfigError("verify radius and samples must be positive");
  if (!(c.resolution > 0.0)) throw ConfigError("oracle resolution must be positive");
  if (c.oracle_lo.size() != c.oracle_hi.size()) throw ConfigError("oracle lo and hi differ in length");
  for (const auto& v : c.variants) {
    try {
      variant_from_string(v);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  try {
    c.optimizer.validate();
    c.monitor.validate();
    c.landscape.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  std::map<std::string, const Binding*> index;
  std::set<std::string> sections;
  for (const Binding& b : bindings()) {
    index[b.section + "." + b.key] = &b;
    sections.insert(b.section);
  }
  RunConfig config;
  std::set<std::string> seen;
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(strip_comment(raw));
    if (text.empty()) continue;
    if (text.front() == '[' && text.find('=') == std::string::npos) {
      if (text.back() != ']') fail(line, "malformed section header");
      section = trim(text.substr(1, text.size() - 2));
      if (sections.count(section) == 0) fail(line, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(text.substr(0, eq));
    if (section.empty()) fail(line, "key '" + key + "' appears before any section");
    const std::string full = section + "." + key;
    const auto it = index.find(full);
    if (it == index.end()) fail(line, "unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert(full).second) fail(line, "duplicate key '" + key + "' in [" + section + "]");
    it->second->set(config, parse_value(text.substr(eq + 1), line));
  }
  validate(config);
  return config;
}

RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  return parse_config(in);
}

std::string to_text(const RunConfig& config) {
  std::string out;
  std::string section;
  for (const Binding& b : bindings()) {
    if (b.section != section) {
      if (!section.empty()) out += "\n";
      section = b.section;
      out += "[" + section + "]\n";
    }
    out += b.key + " = " + b.get(config) + "\n";
  }
  return out;
}

std::string config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_text(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

Model build_model(const RunConfig& c) {
  try {
    if (c.model == "mlp") return Model::mlp(c.widths, activation_from_string(c.activation));
    if (c.model == "bump_curve") return Model::bump_curve(1, false);
    if (c.model == "bump_curve_slope") return Model::bump_curve(1, true);
    if (c.model == "curve_offset") return Model::curve_offset();
    if (c.model == "constant") {
      if (c.widths.size() < 2) throw ConfigError("constant model needs widths = [d_x, d_y]");
      return Model::constant(c.widths.front(), c.widths.back());
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown model kind '" + c.model + "'");
}

LossCriterion build_loss(const RunConfig& c, std::size_t output_dim) {
  if (c.loss == "squared") return LossCriterion::squared(output_dim);
  if (c.loss == "squared_margin") return LossCriterion::squared_margin();
  if (c.loss == "cross_entropy") return LossCriterion::cross_entropy(output_dim);
  if (c.loss == "smoothed_hinge") return LossCriterion::smoothed_hinge(c.power);
  throw ConfigError("unknown loss kind '" + c.loss + "'");
}

Dataset build_data(const RunConfig& c) {
  if (!c.path.empty()) return Dataset::load_csv(c.path);
  if (c.fixture == "bump") return Dataset({{0.0}}, {{-1.0}});
  return example_fixture(c.fixture).problem.data();
}

}  // namespace

Problem build_problem(const RunConfig& config) {
  const Model model = build_model(config);
  Dataset data = build_data(config);
  try {
    return Problem(model, build_loss(config, model.output_dim()), std::move(data), config.reduction, config.lambda);
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  } catch (const InvalidTarget& e) {
    throw ConfigError(e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig experiment_config(const RunConfig& config, std::size_t jobs) {
  ExperimentConfig e;
  e.n_seeds = config.seeds;
  e.base_seed = config.base_seed;
  e.variants.clear();
  for (const auto& v : config.variants) e.variants.push_back(variant_from_string(v));
  e.opt = config.optimizer;
  e.monitor = config.monitor;
  e.aux_init_radius = config.aux_init_radius;
  e.success_threshold = config.success_threshold;
  e.jobs = jobs;
  e.initial_theta = config.theta;
  return e;
}

}  // namespace labctl
