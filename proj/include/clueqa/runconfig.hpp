#pragma once

#include <string>
#include <vector>

#include "clueqa/backbone.hpp"
#include "clueqa/pipeline.hpp"
#include "clueqa/training.hpp"
#include "clueqa/world.hpp"

namespace clueqa {

// Merged configuration of a run. Resolution order: struct defaults, then a
// config file, then command-line flags; the fully resolved view is echoed
// into the run directory so a run is reproducible from its outputs alone.
struct RunConfig {
  uint64_t seed = 1;  // propagated to world.seed / train.seed unless set

  WorldConfig world;
  ModelConfig model;
  TrainConfig train;
  PipelineConfig pipeline;

  std::string data_path;        // episode file (gen-data output / train input)
  std::string eval_data_path;   // held-out episode file for evaluation
  std::string checkpoint_in;
  std::string checkpoint_out;
  std::string out_dir = "run";
  std::string rungs_path;       // ablation rung list (empty = standard ladder)
  std::string checkpoint_dir;   // standard-ladder checkpoint directory
  std::string taxonomy_path;
  std::string metrics_path;     // training metrics log (default under out_dir)

  int episodes = 64;    // gen-data episode count
  int first_index = 0;  // gen-data starting episode index
  std::string mode = "all";  // eval filter: multiple-choice | open-ended | all
  int episode_index = 0;     // infer target
  int qa_index = 0;

  // Tracks whether the file/flags set these explicitly (seed propagation).
  bool world_seed_set = false;
  bool train_seed_set = false;
};

// All recognized dotted keys, in canonical order.
const std::vector<std::string>& runconfig_keys();

// Applies one key=value assignment. Unknown key or unparsable value throws
// ConfigError.
void apply_key(RunConfig* cfg, const std::string& key,
               const std::string& value);

// Flat text config: one "key = value" per line, '#' comments, blank lines
// ignored. Throws IoError / ConfigError.
void load_config_file(RunConfig* cfg, const std::string& path);

// Seed propagation + validation of every sub-config.
void finalize_config(RunConfig* cfg);

// The resolved flat-file echo (parsable by load_config_file).
std::string render_config(const RunConfig& cfg);

}  // namespace clueqa
