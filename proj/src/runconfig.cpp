#include "clueqa/runconfig.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace clueqa {

namespace {

struct KeyDef {
  std::string key;
  std::function<void(RunConfig*, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    uint64_t r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::string fmt_double(double d) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> kTable = [] {
    std::vector<KeyDef> t;
    auto add = [&](std::string key, auto set, auto get) {
      t.push_back({std::move(key), set, get});
    };

    add("seed",
        [](RunConfig* c, const std::string& v) { c->seed = parse_u64("seed", v); },
        [](const RunConfig& c) { return std::to_string(c.seed); });

    // world
    add("world.num_entities",
        [](RunConfig* c, const std::string& v) { c->world.num_entities = parse_int("world.num_entities", v); },
        [](const RunConfig& c) { return std::to_string(c.world.num_entities); });
    add("world.num_predicates",
        [](RunConfig* c, const std::string& v) { c->world.num_predicates = parse_int("world.num_predicates", v); },
        [](const RunConfig& c) { return std::to_string(c.world.num_predicates); });
    add("world.num_frames",
        [](RunConfig* c, const std::string& v) { c->world.num_frames = parse_int("world.num_frames", v); },
        [](const RunConfig& c) { return std::to_string(c.world.num_frames); });
    add("world.feature_dim",
        [](RunConfig* c, const std::string& v) { c->world.feature_dim = parse_int("world.feature_dim", v); },
        [](const RunConfig& c) { return std::to_string(c.world.feature_dim); });
    add("world.events_min",
        [](RunConfig* c, const std::string& v) { c->world.events_min = parse_int("world.events_min", v); },
        [](const RunConfig& c) { return std::to_string(c.world.events_min); });
    add("world.events_max",
        [](RunConfig* c, const std::string& v) { c->world.events_max = parse_int("world.events_max", v); },
        [](const RunConfig& c) { return std::to_string(c.world.events_max); });
    add("world.distractor_rate",
        [](RunConfig* c, const std::string& v) { c->world.distractor_rate = parse_double("world.distractor_rate", v); },
        [](const RunConfig& c) { return fmt_double(c.world.distractor_rate); });
    add("world.noise_amp",
        [](RunConfig* c, const std::string& v) { c->world.noise_amp = parse_double("world.noise_amp", v); },
        [](const RunConfig& c) { return fmt_double(c.world.noise_amp); });
    add("world.triple_library_cap",
        [](RunConfig* c, const std::string& v) { c->world.triple_library_cap = parse_int("world.triple_library_cap", v); },
        [](const RunConfig& c) { return std::to_string(c.world.triple_library_cap); });
    add("world.seed",
        [](RunConfig* c, const std::string& v) {
          c->world.seed = parse_u64("world.seed", v);
          c->world_seed_set = true;
        },
        [](const RunConfig& c) { return std::to_string(c.world.seed); });

    // model (architecture only; vocabulary-derived fields come from the world)
    add("model.model_dim",
        [](RunConfig* c, const std::string& v) { c->model.model_dim = parse_int("model.model_dim", v); },
        [](const RunConfig& c) { return std::to_string(c.model.model_dim); });
    add("model.num_layers",
        [](RunConfig* c, const std::string& v) { c->model.num_layers = parse_int("model.num_layers", v); },
        [](const RunConfig& c) { return std::to_string(c.model.num_layers); });
    add("model.num_heads",
        [](RunConfig* c, const std::string& v) { c->model.num_heads = parse_int("model.num_heads", v); },
        [](const RunConfig& c) { return std::to_string(c.model.num_heads); });
    add("model.max_sequence_length",
        [](RunConfig* c, const std::string& v) { c->model.max_sequence_length = parse_int("model.max_sequence_length", v); },
        [](const RunConfig& c) { return std::to_string(c.model.max_sequence_length); });
    add("model.acf_hidden",
        [](RunConfig* c, const std::string& v) { c->model.acf_hidden = parse_int("model.acf_hidden", v); },
        [](const RunConfig& c) { return std::to_string(c.model.acf_hidden); });

    // train
    add("train.stage",
        [](RunConfig* c, const std::string& v) { c->train.stage = parse_int("train.stage", v); },
        [](const RunConfig& c) { return std::to_string(c.train.stage); });
    add("train.learning_rate",
        [](RunConfig* c, const std::string& v) { c->train.learning_rate = parse_double("train.learning_rate", v); },
        [](const RunConfig& c) { return fmt_double(c.train.learning_rate); });
    add("train.batch_size",
        [](RunConfig* c, const std::string& v) { c->train.batch_size = parse_int("train.batch_size", v); },
        [](const RunConfig& c) { return std::to_string(c.train.batch_size); });
    add("train.max_steps",
        [](RunConfig* c, const std::string& v) { c->train.max_steps = parse_int("train.max_steps", v); },
        [](const RunConfig& c) { return std::to_string(c.train.max_steps); });
    add("train.lambda",
        [](RunConfig* c, const std::string& v) { c->train.lambda = parse_double("train.lambda", v); },
        [](const RunConfig& c) { return fmt_double(c.train.lambda); });
    add("train.seed",
        [](RunConfig* c, const std::string& v) {
          c->train.seed = parse_u64("train.seed", v);
          c->train_seed_set = true;
        },
        [](const RunConfig& c) { return std::to_string(c.train.seed); });
    add("train.baseline",
        [](RunConfig* c, const std::string& v) { c->train.baseline = parse_bool("train.baseline", v); },
        [](const RunConfig& c) { return fmt_bool(c.train.baseline); });
    add("train.acf_bypass",
        [](RunConfig* c, const std::string& v) { c->train.acf_bypass = parse_bool("train.acf_bypass", v); },
        [](const RunConfig& c) { return fmt_bool(c.train.acf_bypass); });
    add("train.freeze_backbone",
        [](RunConfig* c, const std::string& v) { c->train.freeze_backbone = parse_bool("train.freeze_backbone", v); },
        [](const RunConfig& c) { return fmt_bool(c.train.freeze_backbone); });
    add("train.ks_enabled",
        [](RunConfig* c, const std::string& v) { c->train.ks_enabled = parse_bool("train.ks_enabled", v); },
        [](const RunConfig& c) { return fmt_bool(c.train.ks_enabled); });
    add("train.top_k_frames",
        [](RunConfig* c, const std::string& v) { c->train.top_k_frames = parse_int("train.top_k_frames", v); },
        [](const RunConfig& c) { return std::to_string(c.train.top_k_frames); });
    add("train.cluster_similarity_threshold",
        [](RunConfig* c, const std::string& v) { c->train.cluster_similarity_threshold = parse_double("train.cluster_similarity_threshold", v); },
        [](const RunConfig& c) { return fmt_double(c.train.cluster_similarity_threshold); });
    add("train.max_generated_clues",
        [](RunConfig* c, const std::string& v) { c->train.max_generated_clues = parse_int("train.max_generated_clues", v); },
        [](const RunConfig& c) { return std::to_string(c.train.max_generated_clues); });
    add("train.checkpoint_every",
        [](RunConfig* c, const std::string& v) { c->train.checkpoint_every = parse_int("train.checkpoint_every", v); },
        [](const RunConfig& c) { return std::to_string(c.train.checkpoint_every); });

    // pipeline
    add("pipeline.alpha",
        [](RunConfig* c, const std::string& v) { c->pipeline.alpha = parse_double("pipeline.alpha", v); },
        [](const RunConfig& c) { return fmt_double(c.pipeline.alpha); });
    add("pipeline.beta",
        [](RunConfig* c, const std::string& v) { c->pipeline.beta = parse_double("pipeline.beta", v); },
        [](const RunConfig& c) { return fmt_double(c.pipeline.beta); });
    add("pipeline.top_k_frames",
        [](RunConfig* c, const std::string& v) { c->pipeline.top_k_frames = parse_int("pipeline.top_k_frames", v); },
        [](const RunConfig& c) { return std::to_string(c.pipeline.top_k_frames); });
    add("pipeline.tau",
        [](RunConfig* c, const std::string& v) { c->pipeline.tau = parse_double("pipeline.tau", v); },
        [](const RunConfig& c) { return fmt_double(c.pipeline.tau); });
    add("pipeline.cluster_similarity_threshold",
        [](RunConfig* c, const std::string& v) { c->pipeline.cluster_similarity_threshold = parse_double("pipeline.cluster_similarity_threshold", v); },
        [](const RunConfig& c) { return fmt_double(c.pipeline.cluster_similarity_threshold); });
    add("pipeline.ks_enabled",
        [](RunConfig* c, const std::string& v) { c->pipeline.ks_enabled = parse_bool("pipeline.ks_enabled", v); },
        [](const RunConfig& c) { return fmt_bool(c.pipeline.ks_enabled); });
    add("pipeline.vc_enabled",
        [](RunConfig* c, const std::string& v) { c->pipeline.vc_enabled = parse_bool("pipeline.vc_enabled", v); },
        [](const RunConfig& c) { return fmt_bool(c.pipeline.vc_enabled); });
    add("pipeline.acf_bypass",
        [](RunConfig* c, const std::string& v) { c->pipeline.acf_bypass = parse_bool("pipeline.acf_bypass", v); },
        [](const RunConfig& c) { return fmt_bool(c.pipeline.acf_bypass); });
    add("pipeline.clue_source",
        [](RunConfig* c, const std::string& v) {
          try {
            c->pipeline.clue_source = clue_source_from_name(v);
          } catch (const ParseError& e) {
            throw ConfigError(std::string("pipeline.clue_source: ") + e.what());
          }
        },
        [](const RunConfig& c) { return std::string(clue_source_name(c.pipeline.clue_source)); });
    add("pipeline.max_generated_clues",
        [](RunConfig* c, const std::string& v) { c->pipeline.max_generated_clues = parse_int("pipeline.max_generated_clues", v); },
        [](const RunConfig& c) { return std::to_string(c.pipeline.max_generated_clues); });

    // paths and run shape
    auto add_str = [&](const char* key, std::string RunConfig::*member) {
      t.push_back({key,
                   [key, member](RunConfig* c, const std::string& v) {
                     // Paths are free-form; empty clears.
                     (void)key;
                     c->*member = v;
                   },
                   [member](const RunConfig& c) { return c.*member; }});
    };
    add_str("data", &RunConfig::data_path);
    add_str("eval_data", &RunConfig::eval_data_path);
    add_str("checkpoint_in", &RunConfig::checkpoint_in);
    add_str("checkpoint_out", &RunConfig::checkpoint_out);
    add_str("out_dir", &RunConfig::out_dir);
    add_str("rungs", &RunConfig::rungs_path);
    add_str("checkpoint_dir", &RunConfig::checkpoint_dir);
    add_str("taxonomy", &RunConfig::taxonomy_path);
    add_str("metrics", &RunConfig::metrics_path);

    add("episodes",
        [](RunConfig* c, const std::string& v) { c->episodes = parse_int("episodes", v); },
        [](const RunConfig& c) { return std::to_string(c.episodes); });
    add("first_index",
        [](RunConfig* c, const std::string& v) { c->first_index = parse_int("first_index", v); },
        [](const RunConfig& c) { return std::to_string(c.first_index); });
    add("mode",
        [](RunConfig* c, const std::string& v) { c->mode = v; },
        [](const RunConfig& c) { return c.mode; });
    add("episode_index",
        [](RunConfig* c, const std::string& v) { c->episode_index = parse_int("episode_index", v); },
        [](const RunConfig& c) { return std::to_string(c.episode_index); });
    add("qa_index",
        [](RunConfig* c, const std::string& v) { c->qa_index = parse_int("qa_index", v); },
        [](const RunConfig& c) { return std::to_string(c.qa_index); });
    return t;
  }();
  return kTable;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

const std::vector<std::string>& runconfig_keys() {
  static const std::vector<std::string> kKeys = [] {
    std::vector<std::string> keys;
    for (const KeyDef& d : key_table()) keys.push_back(d.key);
    return keys;
  }();
  return kKeys;
}

void apply_key(RunConfig* cfg, const std::string& key,
               const std::string& value) {
  for (const KeyDef& d : key_table()) {
    if (d.key == key) {
      d.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

void load_config_file(RunConfig* cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    }
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    }
    try {
      apply_key(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void finalize_config(RunConfig* cfg) {
  if (!cfg->world_seed_set) cfg->world.seed = cfg->seed;
  if (!cfg->train_seed_set) cfg->train.seed = cfg->seed;
  cfg->world.validate();
  cfg->train.validate();
  cfg->pipeline.validate();
  if (cfg->episodes < 1) throw ConfigError("episodes must be >= 1");
  if (cfg->first_index < 0) throw ConfigError("first_index must be >= 0");
  if (cfg->episode_index < 0 || cfg->qa_index < 0) {
    throw ConfigError("episode_index and qa_index must be >= 0");
  }
  if (cfg->mode != "all" && cfg->mode != "multiple-choice" &&
      cfg->mode != "open-ended") {
    throw ConfigError("mode must be all, multiple-choice, or open-ended");
  }
  if (cfg->model.model_dim < 1 || cfg->model.num_layers < 1 ||
      cfg->model.num_heads < 1 ||
      cfg->model.model_dim % cfg->model.num_heads != 0) {
    throw ConfigError("model dimensions invalid (dim divisible by heads)");
  }
}

std::string render_config(const RunConfig& cfg) {
  std::ostringstream out;
  for (const KeyDef& d : key_table()) {
    out << d.key << " = " << d.get(cfg) << "\n";
  }
  return out.str();
}

}  // namespace clueqa
