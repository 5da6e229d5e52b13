#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "clueqa/clue.hpp"
#include "clueqa/taxonomy.hpp"

namespace clueqa {

// Configuration of the synthetic symbolic-video world. A dataset is a pure
// function of this struct: same config, same episodes, bit for bit.
struct WorldConfig {
  int num_entities = 6;     // prefix of the closed entity pool (max 12)
  int num_predicates = 5;   // prefix of the closed predicate pool (max 8)
  int num_frames = 24;      // frames per episode
  int feature_dim = 24;     // per-frame feature vector width
  int events_min = 3;       // events per episode, inclusive range
  int events_max = 5;
  double distractor_rate = 0.75;  // P(multiple-choice distractor is a taxonomy sibling)
  double noise_amp = 0.35;        // magnitude of per-frame feature noise
  // Size of the shared event-triple pool episodes draw from. 0 derives
  // 3 * num_entities. Small caps make event combinations recur across
  // episodes, which the information diagnostics need.
  int triple_library_cap = 0;
  uint64_t seed = 1;

  void validate() const;  // throws ValidationError
  bool operator==(const WorldConfig&) const = default;
};

enum class QType {
  kDescriptive,  // what object did S do R to?        (open-ended)
  kInteraction,  // what did S do to O?               (open-ended)
  kTemporal,     // what came after/before event X?   (multiple-choice)
  kCausal,       // which action enabled event X?     (multiple-choice)
  kSequence,     // who acted first/last?             (multiple-choice)
};

const char* qtype_name(QType q);
QType qtype_from_name(const std::string& name);  // throws ParseError
inline constexpr int kNumQTypes = 5;

struct QAPair {
  QType qtype = QType::kDescriptive;
  std::vector<std::string> question;  // marker word then argument words
  std::vector<std::string> options;   // 5 entries for multiple-choice, else empty
  std::string answer;
  int answer_index = -1;  // into options; -1 for open-ended

  bool multiple_choice() const { return !options.empty(); }
  bool operator==(const QAPair&) const = default;
};

struct Episode {
  std::string id;
  uint64_t seed = 0;       // per-episode render seed (stored in files)
  ClueCollection events;   // ground-truth annotations
  Eigen::MatrixXd frames;  // feature_dim x num_frames
  std::vector<QAPair> qa;
};

// Closed vocabularies in fixed order; a config selects a prefix of each.
std::vector<std::string> entity_names(const WorldConfig& cfg);
std::vector<std::string> predicate_names(const WorldConfig& cfg);
bool is_entity_word(const WorldConfig& cfg, const std::string& word);
bool is_predicate_word(const WorldConfig& cfg, const std::string& word);

// Question marker words in fixed order; markers[i] never collides with
// entity or predicate names.
const std::vector<std::string>& question_marker_words();

struct TripleId {
  int subject = 0;
  int predicate = 0;
  int object = 0;
  bool operator==(const TripleId&) const = default;
};

// Seeded library of distinct (subject, predicate, object) index triples with
// subject != object. Episodes draw their events from this shared pool, so
// event combinations recur across a dataset instead of being unique per
// episode.
std::vector<TripleId> triple_library(const WorldConfig& cfg);

// Fixed is-a hierarchy over the selected entity and predicate words.
Taxonomy build_taxonomy(const WorldConfig& cfg);

Episode generate_episode(const WorldConfig& cfg, int index);
std::vector<Episode> generate_episodes(const WorldConfig& cfg, int count,
                                       int first_index = 0);

// Deterministic renderer: frame t superposes role-tagged basis vectors of
// every event active at t plus one order-3 binding vector per event, then
// adds seeded noise of magnitude noise_amp. Episode::frames is exactly
// render_frames(cfg, events, episode.seed).
Eigen::MatrixXd render_frames(const WorldConfig& cfg,
                              const ClueCollection& events,
                              uint64_t episode_seed);

// Feature-space prototype of a vocabulary word (entity or predicate), used
// by retrieval to compare question words against frame features. Throws
// ValidationError for words outside the selected vocabulary.
Eigen::VectorXd word_prototype(const WorldConfig& cfg, const std::string& word);

// Episode container files: "format_version: 1" header, one JSON config line,
// then one JSON record per episode. Frames are not stored; import re-renders
// them from (events, seed).
void export_episodes(const WorldConfig& cfg, const std::vector<Episode>& eps,
                     const std::string& path);

struct EpisodeFile {
  WorldConfig world;
  std::vector<Episode> episodes;
};
EpisodeFile import_episodes(const std::string& path);

}  // namespace clueqa
