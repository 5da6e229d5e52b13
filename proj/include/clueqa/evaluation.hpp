#pragma once

#include <string>
#include <vector>

#include "clueqa/model.hpp"
#include "clueqa/pipeline.hpp"
#include "clueqa/taxonomy.hpp"
#include "clueqa/training.hpp"

namespace clueqa {

// Wu-Palmer similarity over the answer taxonomy:
//   2 * depth(lca(a, b)) / (depth(a) + depth(b)),  depth(root) = 1.
// Symmetric, in (0, 1], and 1 exactly when a == b.
double wup_similarity(const Taxonomy& tax, const std::string& a,
                      const std::string& b);

// Thresholded soft accuracy of one prediction: s = wup_similarity, scored
// s when s >= threshold and 0.1*s below it.
double wups_at(const Taxonomy& tax, const std::string& prediction,
               const std::string& gold, double threshold);

enum class EvalMode { kMultipleChoice, kOpenEnded };
const char* eval_mode_name(EvalMode m);

struct QTypeStats {
  QType qtype = QType::kDescriptive;
  int count = 0;
  int correct = 0;
  double accuracy = 0.0;
  double wups0 = 0.0;  // open-ended question types only
  double wups9 = 0.0;
};

struct EvalReport {
  EvalMode mode = EvalMode::kMultipleChoice;
  int count = 0;
  int correct = 0;
  double accuracy = 0.0;  // fraction in [0, 1]
  double wups0 = 0.0;     // mean WUPS@0.0 (0 in multiple-choice mode)
  double wups9 = 0.0;     // mean WUPS@0.9
  int off_taxonomy = 0;   // open-ended predictions outside the vocabulary
  int degenerate_clue_runs = 0;  // questions whose extraction emitted no clue
  std::vector<QTypeStats> by_qtype;
  double mean_visual_tokens = 0.0;
  double mean_clue_tokens = 0.0;
  double mean_sequence_length = 0.0;
  double mean_attention_proxy = 0.0;
};

// Subset of a dataset whose answer format matches the mode. Throws DataError
// when the subset is empty.
Dataset filter_by_mode(const Dataset& data, EvalMode mode);

// Runs the inference pipeline over every item; every item's format must
// match mode (DataError otherwise). Deterministic.
EvalReport evaluate(const Model& model, const Dataset& data,
                    const PipelineConfig& cfg, EvalMode mode);

// Both answer formats evaluated and merged (sample-weighted).
struct FullEval {
  std::vector<EvalReport> parts;  // one per format present in the data
  int count = 0;
  int correct = 0;
  double accuracy = 0.0;
  double mean_visual_tokens = 0.0;
  double mean_clue_tokens = 0.0;
  double mean_sequence_length = 0.0;
  double mean_attention_proxy = 0.0;
};
FullEval evaluate_full(const Model& model, const Dataset& data,
                       const PipelineConfig& cfg);

std::string eval_table(const FullEval& full);
void write_eval_jsonl(const FullEval& full, const std::string& path);

// Paired runs: standard (self-generated clues) versus ground-truth clues
// substituted with gates forced open. The delta isolates how much of the
// remaining error is clue extraction rather than downstream reasoning.
struct OracleReport {
  FullEval standard;
  FullEval oracle;
  double delta_accuracy = 0.0;  // oracle - standard, fraction
};
OracleReport oracle_experiment(const Model& model, const Dataset& data,
                               PipelineConfig cfg);

// One ablation rung: a checkpoint plus the pipeline features it enables.
struct LadderRung {
  std::string name;
  std::string checkpoint_path;
  ClueSource clue_source = ClueSource::kSelfGenerated;
  bool ks = false;
  bool acf = false;
  bool vc = false;
};

// The canonical six-rung ladder over the four standard checkpoints in a
// directory (baseline.ckpt, s1.ckpt, s12.ckpt, full.ckpt).
std::vector<LadderRung> standard_ladder(const std::string& checkpoint_dir);

// Declarative rung list file: one JSON object per line with keys
// name / checkpoint / clue_source / ks / acf / vc.
std::vector<LadderRung> read_ladder_file(const std::string& path);
void write_ladder_file(const std::vector<LadderRung>& rungs,
                       const std::string& path);

struct LadderRow {
  LadderRung rung;
  FullEval result;
  double delta_accuracy = 0.0;  // versus the first rung
};

// Evaluates every rung on the dataset. A rung whose checkpoint cannot be
// loaded raises ConfigError naming the rung.
std::vector<LadderRow> ablation_ladder(const std::vector<LadderRung>& rungs,
                                       const Dataset& data,
                                       const PipelineConfig& base);

std::string ladder_table(const std::vector<LadderRow>& rows);
void write_ladder_jsonl(const std::vector<LadderRow>& rows,
                        const std::string& path);

// ---- information diagnostics ---------------------------------------------

// Canonical hash of a clue collection's symbolic content: the multiset of
// (subject, predicate, object) triples, lifespans dropped.
uint64_t clue_signature(const std::vector<Clue>& clues);
uint64_t question_signature(const std::vector<std::string>& question);

// Empirical plug-in mutual information (nats) over paired discrete samples.
double plugin_mutual_information(const std::vector<uint64_t>& xs,
                                 const std::vector<uint64_t>& ys);

enum class ClueChannel {
  kGroundTruth,
  kSelfGenerated,  // extraction on the full frame sequence
  kRandom,         // library draws independent of the episode
  kGatedGroundTruth,  // ground truth filtered by trained gates >= threshold
};
const char* clue_channel_name(ClueChannel c);

struct IbChannelReport {
  ClueChannel channel = ClueChannel::kGroundTruth;
  double mi_answer = 0.0;    // I(C; A), nats
  double mi_question = 0.0;  // I(C; Q) input-redundancy proxy, nats
  int distinct_signatures = 0;
};

struct IbReport {
  std::vector<IbChannelReport> channels;
  double gamma = 0.0;  // break-even balance I(C;Q)/I(C;A) on ground truth
  int samples = 0;
};

// Measures how informative each clue channel is about answers. Samples are
// (episode, question) pairs. The gated channel needs an inference-supervised
// model and is skipped otherwise.
IbReport ib_diagnostic(const Model& model, const Dataset& data,
                       double gate_threshold = 0.5,
                       int max_generated_clues = 12);

std::string ib_table(const IbReport& report);

}  // namespace clueqa
