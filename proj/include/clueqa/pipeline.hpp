#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "clueqa/model.hpp"
#include "clueqa/world.hpp"

namespace clueqa {

enum class ClueSource {
  kSelfGenerated,  // model-extracted clues (standard path)
  kOracle,         // ground-truth clues substituted, gates forced to 1
  kNone,           // clue-free assembly (baseline control)
};
const char* clue_source_name(ClueSource s);
ClueSource clue_source_from_name(const std::string& name);

struct PipelineConfig {
  double alpha = 0.5;  // question-alignment weight in frame relevance
  double beta = 0.5;   // keyword-alignment weight
  int top_k_frames = 16;
  double tau = 0.4;    // retention threshold
  double cluster_similarity_threshold = 0.9;
  bool ks_enabled = true;
  bool vc_enabled = true;
  bool acf_bypass = false;  // gates forced to 1 (filter disabled)
  ClueSource clue_source = ClueSource::kSelfGenerated;
  int max_generated_clues = 12;  // decode budget for clue extraction

  void validate() const;
};

struct CostReport {
  int visual_tokens = 0;    // visual positions consumed by the answer pass
  int clue_tokens = 0;      // clue-section positions (markers + separators)
  int question_tokens = 0;
  int sequence_length = 0;  // answer-pass prefix length
  long long attention_proxy = 0;  // num_layers * sequence_length^2
};

struct PipelineTrace {
  std::string episode_id;
  std::vector<int> candidate_frames;   // V_c (original indices)
  std::vector<int> keyframes;          // V' (original indices, = slot map)
  std::vector<double> keyframe_scores; // relevance of each V_c member
  std::vector<std::string> clues;      // clue text, lifespans in V'-local slots
  int rejected_clue_blocks = 0;
  bool degenerate_clues = false;       // self-generation produced none
  std::vector<double> gates;
  std::vector<double> semantic_scores;
  std::vector<double> visual_scores;
  std::vector<double> retention;       // per V' slot
  std::vector<int> retained_frames;    // V_re (original indices)
  std::string answer_text;             // predicted word ("" if undecodable)
  int chosen_option = -1;              // multiple-choice pick
  CostReport cost;
};

// --- pipeline stages (pure functions, tested against brute-force oracles) --

// Contiguous-run clustering: maximal runs of consecutive frames with cosine
// similarity >= threshold collapse to their medoid (max mean intra-run
// similarity, earliest on ties). Returns sorted representative indices.
std::vector<int> temporal_scene_clustering(const Eigen::MatrixXd& frames,
                                           double threshold);

// Question words tagged noun-or-verb by the world lexicon (entities = nouns,
// predicates = verbs); duplicates removed, order preserved.
std::vector<std::string> keyword_extract(const WorldConfig& world,
                                         const std::vector<std::string>& question);

// S_i = alpha * max_p cos(E_q, E_v[:,p]) + beta * max_{j,p} cos(E_k[:,j],
// E_v[:,p]). E_v columns are the frame's patch embeddings. alpha = 0 skips
// the question term (E_q may then be empty); zero keywords contribute 0.
double frame_relevance(const Eigen::VectorXd& question_emb,
                       const Eigen::MatrixXd& keyword_embs,
                       const Eigen::MatrixXd& patch_embs, double alpha,
                       double beta);

// Top-k members of candidates by score (ties -> lower frame index), output
// in temporal order. candidates and scores are parallel.
std::vector<int> select_keyframes(const std::vector<int>& candidates,
                                  const std::vector<double>& scores, int top_k);

// S_ret(t) = mean over clues covering t of g_i * s_v(i, t); 0 when nothing
// covers t. faithfulness[i] spans clue i's lifespan in local frame order.
double retention_score(int t, const ClueCollection& clues,
                       const std::vector<double>& gates,
                       const std::vector<std::vector<double>>& faithfulness);

// Slots (0..num_slots-1) whose retention >= tau; falls back to the single
// highest-scoring slot (earliest on ties) when the threshold empties it.
std::vector<int> compress_frames(int num_slots,
                                 const std::vector<double>& retention,
                                 double tau);

// Remaps ground-truth clue lifespans (original frame indices) onto keyframe
// slots: [first keyframe >= t_start, last keyframe <= t_end], or the nearest
// keyframe when the lifespan contains none.
std::vector<Clue> remap_clues_to_keyframes(const std::vector<Clue>& clues,
                                           const std::vector<int>& keyframes);

// Clustering + relevance scoring + top-k in one step; the exact path both
// inference and stage-2 training use to pick their visual evidence.
struct KeyframeSelection {
  std::vector<int> candidates;   // cluster representatives
  std::vector<double> scores;    // relevance per candidate
  std::vector<int> keyframes;    // selected, temporal order
};
KeyframeSelection run_keyframe_selection(const Model& model,
                                         const Eigen::MatrixXd& frames,
                                         const std::vector<std::string>& question,
                                         double cluster_similarity_threshold,
                                         double alpha, double beta, int top_k);

// Runs the full inference path for one question and returns the trace.
PipelineTrace answer_question(const Model& model, const Episode& episode,
                              const QAPair& qa, const PipelineConfig& cfg);

}  // namespace clueqa
