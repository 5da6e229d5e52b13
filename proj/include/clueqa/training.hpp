#pragma once

#include <string>
#include <vector>

#include "clueqa/model.hpp"
#include "clueqa/world.hpp"

namespace clueqa {

// A question-answering dataset: episodes plus a flattened (episode, qa)
// index in deterministic order.
struct Dataset {
  WorldConfig world;
  std::vector<Episode> episodes;

  struct Item {
    int episode = 0;
    int qa = 0;
  };
  std::vector<Item> items;

  static Dataset from_episodes(const WorldConfig& world,
                               std::vector<Episode> episodes);
};

struct TrainConfig {
  int stage = 1;  // 1 = decoupled supervision, 2 = inference supervision
  double learning_rate = 1e-3;
  int batch_size = 4;
  int max_steps = 200;
  double lambda = 0.05;  // gate sparsity weight (stage 2)
  uint64_t seed = 7;

  bool baseline = false;       // clue-free control run (stage 1 only)
  bool acf_bypass = false;     // stage 2 with gates pinned to 1
  bool freeze_backbone = false;  // stage 2: update filter parameters only

  // Stage 2 assembles its training sequences through the same keyframe
  // selection the inference path uses.
  bool ks_enabled = true;
  int top_k_frames = 16;
  double cluster_similarity_threshold = 0.9;
  int max_generated_clues = 12;

  int checkpoint_every = 0;  // save every N steps (0 = final only)

  void validate() const;  // throws ConfigError
};

struct StepStats {
  int64_t step = 0;
  int stage = 0;
  std::string phase;  // "clue" | "answer" | "joint"
  double loss = 0.0;
  double answer_loss = 0.0;
  double clue_loss = 0.0;
  double gate_penalty = 0.0;
  double mean_gate = 1.0;
};

struct TrainReport {
  std::vector<StepStats> steps;
  double final_loss = 0.0;
};

// Runs (or resumes) one training stage on the model in place. Stage ordering
// is enforced through the model's stage tag: stage 1 and the clue-free
// control start from a fresh model, stage 2 starts from a stage-1 model;
// anything else is a SequencingError. Entering a new stage resets the step
// counter, the Adam timestep, and all moment estimates. A model already
// tagged with the target stage resumes from its stored step.
//
// metrics_path, if non-empty, receives one JSON line per step (append).
// checkpoint_path, if non-empty, is written every checkpoint_every steps
// and at the end.
TrainReport train(Model& model, const Dataset& data, const TrainConfig& cfg,
                  const std::string& metrics_path = "",
                  const std::string& checkpoint_path = "");

}  // namespace clueqa
