#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "clueqa/acf.hpp"
#include "clueqa/backbone.hpp"
#include "clueqa/params.hpp"
#include "clueqa/tokens.hpp"
#include "clueqa/world.hpp"

namespace clueqa {

// Lifecycle tag of a checkpoint. Stage ordering (1 before 2) is enforced
// through these.
enum class StageTag : uint32_t {
  kNone = 0,      // freshly initialized
  kStage1 = 1,    // decoupled supervision done
  kStage2 = 2,    // inference supervision done
  kBaseline = 3,  // clue-free control training
};
const char* stage_tag_name(StageTag tag);

// The complete trainable system: backbone + clue filter over one shared
// parameter store, bound to the world whose vocabulary it was built for.
struct Model {
  WorldConfig world;
  ModelConfig mcfg;
  Vocabulary vocab;
  ParamStore store;
  Backbone backbone;
  ClueFilter acf;

  StageTag stage = StageTag::kNone;
  int64_t step = 0;    // optimizer steps completed in the current stage
  int64_t adam_t = 0;  // Adam timestep (reset on stage transitions)

  // Builds a fresh model. Vocabulary-dependent fields of cfg (vocab_size,
  // max_frames, feature_dim) are filled from the world; the caller sets the
  // architectural ones.
  Model(const WorldConfig& world_cfg, ModelConfig cfg, uint64_t init_seed);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
};

// Single-file binary checkpoint holding configs, stage/step tags, and every
// tensor (values; Adam moments for trainable ones). Round-trips bit-exactly.
void save_checkpoint(const Model& model, const std::string& path);
std::unique_ptr<Model> load_checkpoint(const std::string& path);

}  // namespace clueqa
