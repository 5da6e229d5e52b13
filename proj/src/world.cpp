#include "clueqa/world.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "clueqa/rng.hpp"
#include "json.hpp"

namespace clueqa {

namespace {

using json = nlohmann::json;

const std::vector<std::string> kEntityPool = {
    "person", "robot", "dog",   "cup",  "bottle", "book",
    "box",    "plate", "lamp",  "ball", "bag",    "key"};

const std::vector<std::string> kPredicatePool = {
    "take", "put", "open", "close", "touch", "push", "lift", "drop"};

const std::vector<std::string> kMarkers = {"desc", "inter", "tempa", "tempb",
                                           "cause", "seqf", "seql"};

constexpr double kBindAmp = 0.6;
constexpr double kChainBias = 0.6;    // P(next event's subject = previous object)
constexpr double kOverlapProb = 0.5;  // P(next event overlaps the previous one)
constexpr int kLifespanMin = 2;
constexpr int kLifespanMax = 5;
constexpr int kScheduleAttempts = 64;

Eigen::VectorXd unit_gaussian(Rng rng, int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.gaussian();
  double n = v.norm();
  if (n < 1e-12) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / n;
}

Eigen::VectorXd role_basis(const WorldConfig& cfg, const char* role, int idx) {
  return unit_gaussian(Rng(cfg.seed, role, static_cast<uint64_t>(idx)),
                       cfg.feature_dim);
}

Eigen::VectorXd bind_basis(const WorldConfig& cfg, const TripleId& t) {
  uint64_t key = hash_combine(
      hash_combine(static_cast<uint64_t>(t.subject),
                   static_cast<uint64_t>(t.predicate) + 1000),
      static_cast<uint64_t>(t.object) + 2000);
  return unit_gaussian(Rng(cfg.seed, "bind", key), cfg.feature_dim);
}

int entity_index(const WorldConfig& cfg, const std::string& word) {
  for (int i = 0; i < cfg.num_entities; ++i) {
    if (kEntityPool[i] == word) return i;
  }
  return -1;
}

int predicate_index(const WorldConfig& cfg, const std::string& word) {
  for (int i = 0; i < cfg.num_predicates; ++i) {
    if (kPredicatePool[i] == word) return i;
  }
  return -1;
}

struct ScheduledEvent {
  TripleId triple;
  int t_start = 0;
  int t_end = 0;
};

// One attempt at laying out k events. Returns false if the draw runs past
// the end of the video.
bool try_schedule(Rng& rng, const WorldConfig& cfg,
                  const std::vector<TripleId>& library, int k,
                  std::vector<ScheduledEvent>* out) {
  out->clear();
  std::vector<bool> used(library.size(), false);
  for (int i = 0; i < k; ++i) {
    // Pick the triple: biased toward causal chains (subject continues the
    // previous object), falling back to a uniform unused draw.
    int pick = -1;
    if (i > 0 && rng.bernoulli(kChainBias)) {
      std::vector<int> chain;
      for (size_t j = 0; j < library.size(); ++j) {
        if (!used[j] && library[j].subject == out->back().triple.object) {
          chain.push_back(static_cast<int>(j));
        }
      }
      if (!chain.empty()) pick = chain[rng.uniform_int(0, (int)chain.size() - 1)];
    }
    if (pick < 0) {
      std::vector<int> unused;
      for (size_t j = 0; j < library.size(); ++j) {
        if (!used[j]) unused.push_back(static_cast<int>(j));
      }
      if (unused.empty()) return false;
      pick = unused[rng.uniform_int(0, (int)unused.size() - 1)];
    }
    used[pick] = true;

    int len = rng.uniform_int(kLifespanMin, kLifespanMax);
    int t_start;
    if (i == 0) {
      t_start = rng.uniform_int(0, 2);
    } else {
      int prev_start = (*out)[i - 1].t_start;
      int prev_end = (*out)[i - 1].t_end;
      if (rng.bernoulli(kOverlapProb) && prev_end > prev_start) {
        t_start = rng.uniform_int(prev_start + 1, prev_end);
      } else {
        t_start = prev_end + rng.uniform_int(1, 2);
      }
    }
    int t_end = t_start + len - 1;
    if (t_end >= cfg.num_frames) return false;
    out->push_back({library[pick], t_start, t_end});
  }
  return true;
}

// ---- question derivation -------------------------------------------------
//
// Questions are derived symbolically from the event list. Each helper
// returns candidate questions; the generator keeps at most one per type.

struct Candidate {
  QType qtype;
  std::vector<std::string> question;
  std::string answer;
};

std::string ent(const WorldConfig& cfg, int i) { return entity_names(cfg)[i]; }
std::string pred(const WorldConfig& cfg, int i) {
  return predicate_names(cfg)[i];
}

std::vector<Candidate> descriptive_candidates(
    const WorldConfig& cfg, const std::vector<ScheduledEvent>& ev) {
  std::vector<Candidate> out;
  for (size_t i = 0; i < ev.size(); ++i) {
    int same = 0;
    for (const auto& e : ev) {
      if (e.triple.subject == ev[i].triple.subject &&
          e.triple.predicate == ev[i].triple.predicate) {
        ++same;
      }
    }
    if (same == 1) {
      out.push_back({QType::kDescriptive,
                     {"desc", ent(cfg, ev[i].triple.subject),
                      pred(cfg, ev[i].triple.predicate)},
                     ent(cfg, ev[i].triple.object)});
    }
  }
  return out;
}

std::vector<Candidate> interaction_candidates(
    const WorldConfig& cfg, const std::vector<ScheduledEvent>& ev) {
  std::vector<Candidate> out;
  for (size_t i = 0; i < ev.size(); ++i) {
    int same = 0;
    for (const auto& e : ev) {
      if (e.triple.subject == ev[i].triple.subject &&
          e.triple.object == ev[i].triple.object) {
        ++same;
      }
    }
    if (same == 1) {
      out.push_back({QType::kInteraction,
                     {"inter", ent(cfg, ev[i].triple.subject),
                      ent(cfg, ev[i].triple.object)},
                     pred(cfg, ev[i].triple.predicate)});
    }
  }
  return out;
}

bool triple_unique(const std::vector<ScheduledEvent>& ev, size_t i) {
  int same = 0;
  for (const auto& e : ev) {
    if (e.triple == ev[i].triple) ++same;
  }
  return same == 1;
}

std::vector<Candidate> temporal_candidates(
    const WorldConfig& cfg, const std::vector<ScheduledEvent>& ev) {
  std::vector<Candidate> out;
  for (size_t i = 0; i < ev.size(); ++i) {
    if (!triple_unique(ev, i)) continue;
    std::vector<std::string> args = {ent(cfg, ev[i].triple.subject),
                                     pred(cfg, ev[i].triple.predicate),
                                     ent(cfg, ev[i].triple.object)};
    if (i + 1 < ev.size()) {
      Candidate c{QType::kTemporal,
                  {"tempa", args[0], args[1], args[2]},
                  ent(cfg, ev[i + 1].triple.object)};
      out.push_back(c);
    }
    if (i > 0) {
      Candidate c{QType::kTemporal,
                  {"tempb", args[0], args[1], args[2]},
                  ent(cfg, ev[i - 1].triple.subject)};
      out.push_back(c);
    }
  }
  return out;
}

std::vector<Candidate> causal_candidates(const WorldConfig& cfg,
                                         const std::vector<ScheduledEvent>& ev) {
  std::vector<Candidate> out;
  for (size_t j = 0; j < ev.size(); ++j) {
    if (!triple_unique(ev, j)) continue;
    // The enabling event is the unique earlier event whose object is this
    // event's subject.
    int enabler = -1;
    int count = 0;
    for (size_t i = 0; i < j; ++i) {
      if (ev[i].triple.object == ev[j].triple.subject) {
        enabler = static_cast<int>(i);
        ++count;
      }
    }
    if (count == 1) {
      out.push_back({QType::kCausal,
                     {"cause", ent(cfg, ev[j].triple.subject),
                      pred(cfg, ev[j].triple.predicate),
                      ent(cfg, ev[j].triple.object)},
                     pred(cfg, ev[enabler].triple.predicate)});
    }
  }
  return out;
}

std::vector<Candidate> sequence_candidates(
    const WorldConfig& cfg, const std::vector<ScheduledEvent>& ev) {
  std::vector<Candidate> out;
  out.push_back({QType::kSequence, {"seqf"}, ent(cfg, ev.front().triple.subject)});
  out.push_back({QType::kSequence, {"seql"}, ent(cfg, ev.back().triple.subject)});
  return out;
}

// Builds the 5-option multiple-choice block. Distractors are taxonomy
// siblings of the gold answer with probability distractor_rate, otherwise
// uniform draws from the gold word's category pool.
void attach_options(Rng& rng, const WorldConfig& cfg, const Taxonomy& tax,
                    QAPair* qa) {
  bool gold_is_entity = is_entity_word(cfg, qa->answer);
  std::vector<std::string> pool =
      gold_is_entity ? entity_names(cfg) : predicate_names(cfg);
  std::vector<std::string> chosen = {qa->answer};
  auto taken = [&](const std::string& w) {
    return std::find(chosen.begin(), chosen.end(), w) != chosen.end();
  };
  for (int d = 0; d < 4; ++d) {
    std::string picked;
    if (rng.bernoulli(cfg.distractor_rate)) {
      int node = tax.index_of(qa->answer);
      std::vector<std::string> sibs;
      for (int s : tax.siblings(node)) {
        const std::string& w = tax.name(s);
        if (!taken(w) &&
            std::find(pool.begin(), pool.end(), w) != pool.end()) {
          sibs.push_back(w);
        }
      }
      if (!sibs.empty()) picked = sibs[rng.uniform_int(0, (int)sibs.size() - 1)];
    }
    if (picked.empty()) {
      std::vector<std::string> rest;
      for (const std::string& w : pool) {
        if (!taken(w)) rest.push_back(w);
      }
      if (rest.empty()) {
        throw GenerationError("option pool exhausted for answer '" +
                              qa->answer + "'");
      }
      picked = rest[rng.uniform_int(0, (int)rest.size() - 1)];
    }
    chosen.push_back(picked);
  }
  // Fisher-Yates shuffle of the 5 options.
  for (int i = (int)chosen.size() - 1; i > 0; --i) {
    std::swap(chosen[i], chosen[rng.uniform_int(0, i)]);
  }
  qa->options = chosen;
  qa->answer_index = static_cast<int>(
      std::find(chosen.begin(), chosen.end(), qa->answer) - chosen.begin());
}

Episode generate_episode_impl(const WorldConfig& cfg, const Taxonomy& tax,
                              const std::vector<TripleId>& library,
                              int index) {
  uint64_t ep_key = hash_combine(cfg.seed, static_cast<uint64_t>(index));

  std::vector<ScheduledEvent> ev;
  bool ok = false;
  for (int attempt = 0; attempt < kScheduleAttempts && !ok; ++attempt) {
    Rng rng(ep_key, "schedule", static_cast<uint64_t>(attempt));
    int k = rng.uniform_int(cfg.events_min, cfg.events_max);
    ok = try_schedule(rng, cfg, library, k, &ev);
  }
  if (!ok) {
    throw GenerationError(
        "could not fit an event schedule into " +
        std::to_string(cfg.num_frames) + " frames (episode index " +
        std::to_string(index) + "); relax events_min/events_max");
  }

  Episode ep;
  char idbuf[16];
  std::snprintf(idbuf, sizeof(idbuf), "ep%06d", index);
  ep.id = idbuf;
  ep.seed = Rng(ep_key, "render-seed").next_u64();
  ep.events.video_id = ep.id;
  ep.events.num_frames = cfg.num_frames;
  for (const auto& e : ev) {
    ep.events.clues.push_back({e.t_start, e.t_end, ent(cfg, e.triple.subject),
                               pred(cfg, e.triple.predicate),
                               ent(cfg, e.triple.object)});
  }
  ep.events.validate();

  // Questions: at most one per type, in fixed type order. Multiple-choice
  // types are skipped when the answer-category pool cannot fill 5 options.
  Rng qa_rng(ep_key, "qa");
  auto pick = [&](std::vector<Candidate> cands) -> bool {
    if (cands.empty()) return false;
    const Candidate& c = cands[qa_rng.uniform_int(0, (int)cands.size() - 1)];
    QAPair qa;
    qa.qtype = c.qtype;
    qa.question = c.question;
    qa.answer = c.answer;
    ep.qa.push_back(qa);
    return true;
  };
  auto attach_mc = [&]() {
    QAPair& qa = ep.qa.back();
    bool ent_pool = is_entity_word(cfg, qa.answer);
    int pool_size = ent_pool ? cfg.num_entities : cfg.num_predicates;
    if (pool_size < 5) {
      ep.qa.pop_back();  // cannot build 5 distinct options
      return;
    }
    attach_options(qa_rng, cfg, tax, &qa);
  };

  pick(descriptive_candidates(cfg, ev));
  pick(interaction_candidates(cfg, ev));
  if (pick(temporal_candidates(cfg, ev))) attach_mc();
  if (pick(causal_candidates(cfg, ev))) attach_mc();
  if (pick(sequence_candidates(cfg, ev))) attach_mc();

  ep.frames = render_frames(cfg, ep.events, ep.seed);
  return ep;
}

// ---- json serialization ----------------------------------------------------

json qa_to_json(const QAPair& qa) {
  json j;
  j["qtype"] = qtype_name(qa.qtype);
  j["question"] = qa.question;
  j["options"] = qa.options;
  j["answer"] = qa.answer;
  j["answer_index"] = qa.answer_index;
  return j;
}

QAPair qa_from_json(const json& j) {
  QAPair qa;
  qa.qtype = qtype_from_name(j.at("qtype").get<std::string>());
  qa.question = j.at("question").get<std::vector<std::string>>();
  qa.options = j.at("options").get<std::vector<std::string>>();
  qa.answer = j.at("answer").get<std::string>();
  qa.answer_index = j.at("answer_index").get<int>();
  if (!qa.options.empty()) {
    if (qa.options.size() != 5) {
      throw DataError("multiple-choice record must carry 5 options");
    }
    if (qa.answer_index < 0 || qa.answer_index >= 5 ||
        qa.options[qa.answer_index] != qa.answer) {
      throw DataError("answer_index does not point at the answer");
    }
  } else if (qa.answer_index != -1) {
    throw DataError("open-ended record must have answer_index -1");
  }
  return qa;
}

json world_to_json(const WorldConfig& cfg) {
  json j;
  j["num_entities"] = cfg.num_entities;
  j["num_predicates"] = cfg.num_predicates;
  j["num_frames"] = cfg.num_frames;
  j["feature_dim"] = cfg.feature_dim;
  j["events_min"] = cfg.events_min;
  j["events_max"] = cfg.events_max;
  j["distractor_rate"] = cfg.distractor_rate;
  j["noise_amp"] = cfg.noise_amp;
  j["triple_library_cap"] = cfg.triple_library_cap;
  j["seed"] = cfg.seed;
  return j;
}

WorldConfig world_from_json(const json& j) {
  WorldConfig cfg;
  cfg.num_entities = j.at("num_entities").get<int>();
  cfg.num_predicates = j.at("num_predicates").get<int>();
  cfg.num_frames = j.at("num_frames").get<int>();
  cfg.feature_dim = j.at("feature_dim").get<int>();
  cfg.events_min = j.at("events_min").get<int>();
  cfg.events_max = j.at("events_max").get<int>();
  cfg.distractor_rate = j.at("distractor_rate").get<double>();
  cfg.noise_amp = j.at("noise_amp").get<double>();
  cfg.triple_library_cap = j.at("triple_library_cap").get<int>();
  cfg.seed = j.at("seed").get<uint64_t>();
  return cfg;
}

}  // namespace

void WorldConfig::validate() const {
  if (num_entities < 2 || num_entities > (int)kEntityPool.size()) {
    throw ValidationError("num_entities must be in [2, " +
                          std::to_string(kEntityPool.size()) + "]");
  }
  if (num_predicates < 1 || num_predicates > (int)kPredicatePool.size()) {
    throw ValidationError("num_predicates must be in [1, " +
                          std::to_string(kPredicatePool.size()) + "]");
  }
  if (num_frames < 4) throw ValidationError("num_frames must be at least 4");
  if (feature_dim < 8) throw ValidationError("feature_dim must be at least 8");
  if (events_min < 1 || events_min > events_max) {
    throw ValidationError("need 1 <= events_min <= events_max");
  }
  if (distractor_rate < 0.0 || distractor_rate > 1.0) {
    throw ValidationError("distractor_rate must be in [0, 1]");
  }
  if (noise_amp < 0.0) throw ValidationError("noise_amp must be non-negative");
  if (triple_library_cap != 0 && triple_library_cap < events_max) {
    throw ValidationError(
        "triple_library_cap must be 0 (derived) or >= events_max");
  }
  // A lifespan must fit in the video.
  if (kLifespanMin >= num_frames) {
    throw ValidationError("num_frames too small for any event lifespan");
  }
}

const char* qtype_name(QType q) {
  switch (q) {
    case QType::kDescriptive: return "descriptive";
    case QType::kInteraction: return "interaction";
    case QType::kTemporal: return "temporal";
    case QType::kCausal: return "causal";
    case QType::kSequence: return "sequence";
  }
  throw ContractError("unknown qtype");
}

QType qtype_from_name(const std::string& name) {
  for (int i = 0; i < kNumQTypes; ++i) {
    QType q = static_cast<QType>(i);
    if (name == qtype_name(q)) return q;
  }
  throw ParseError("unknown question type '" + name + "'");
}

std::vector<std::string> entity_names(const WorldConfig& cfg) {
  return {kEntityPool.begin(), kEntityPool.begin() + cfg.num_entities};
}

std::vector<std::string> predicate_names(const WorldConfig& cfg) {
  return {kPredicatePool.begin(), kPredicatePool.begin() + cfg.num_predicates};
}

bool is_entity_word(const WorldConfig& cfg, const std::string& word) {
  return entity_index(cfg, word) >= 0;
}

bool is_predicate_word(const WorldConfig& cfg, const std::string& word) {
  return predicate_index(cfg, word) >= 0;
}

const std::vector<std::string>& question_marker_words() { return kMarkers; }

std::vector<TripleId> triple_library(const WorldConfig& cfg) {
  cfg.validate();
  std::vector<TripleId> all;
  for (int s = 0; s < cfg.num_entities; ++s) {
    for (int r = 0; r < cfg.num_predicates; ++r) {
      for (int o = 0; o < cfg.num_entities; ++o) {
        if (s != o) all.push_back({s, r, o});
      }
    }
  }
  Rng rng(cfg.seed, "library");
  for (int i = (int)all.size() - 1; i > 0; --i) {
    std::swap(all[i], all[rng.uniform_int(0, i)]);
  }
  size_t cap = cfg.triple_library_cap > 0 ? (size_t)cfg.triple_library_cap
                                          : (size_t)(3 * cfg.num_entities);
  all.resize(std::min(all.size(), cap));
  return all;
}

Taxonomy build_taxonomy(const WorldConfig& cfg) {
  cfg.validate();
  // Fixed grouping over the full pools; only selected words become leaves,
  // and groups with no selected leaf are dropped.
  const std::vector<std::pair<std::string, std::vector<std::string>>> kGroups =
      {{"agent", {"person", "robot", "dog"}},
       {"container", {"cup", "bottle", "box", "bag"}},
       {"item", {"book", "plate", "lamp", "ball", "key"}},
       {"manipulation", {"take", "put", "lift", "drop"}},
       {"contact", {"open", "close", "touch", "push"}}};
  auto selected = [&](const std::string& w) {
    return is_entity_word(cfg, w) || is_predicate_word(cfg, w);
  };

  Taxonomy tax;
  int root = tax.add_node("thing", -1);
  int object_node = -1;
  int action_node = -1;
  for (const auto& [group, members] : kGroups) {
    std::vector<std::string> keep;
    for (const auto& w : members) {
      if (selected(w)) keep.push_back(w);
    }
    if (keep.empty()) continue;
    int parent;
    if (group == "agent") {
      parent = root;
    } else if (group == "container" || group == "item") {
      if (object_node < 0) object_node = tax.add_node("object", root);
      parent = object_node;
    } else {
      if (action_node < 0) action_node = tax.add_node("action", root);
      parent = action_node;
    }
    int g = tax.add_node(group, parent);
    for (const auto& w : keep) tax.add_node(w, g);
  }
  return tax;
}

Eigen::MatrixXd render_frames(const WorldConfig& cfg,
                              const ClueCollection& events,
                              uint64_t episode_seed) {
  cfg.validate();
  events.validate();
  if (events.num_frames != cfg.num_frames) {
    throw ValidationError("collection frame count differs from world config");
  }
  Eigen::MatrixXd frames = Eigen::MatrixXd::Zero(cfg.feature_dim, cfg.num_frames);
  for (const Clue& c : events.clues) {
    int s = entity_index(cfg, c.subject);
    int r = predicate_index(cfg, c.predicate);
    int o = entity_index(cfg, c.object);
    if (s < 0 || r < 0 || o < 0) {
      throw ValidationError("event words outside the selected vocabulary: '" +
                            render_clue(c) + "'");
    }
    Eigen::VectorXd contrib = role_basis(cfg, "subj", s) +
                              role_basis(cfg, "pred", r) +
                              role_basis(cfg, "obj", o) +
                              kBindAmp * bind_basis(cfg, {s, r, o});
    for (int t = c.t_start; t <= c.t_end; ++t) frames.col(t) += contrib;
  }
  if (cfg.noise_amp > 0.0) {
    double scale = cfg.noise_amp / std::sqrt((double)cfg.feature_dim);
    for (int t = 0; t < cfg.num_frames; ++t) {
      Rng rng(episode_seed, "noise", static_cast<uint64_t>(t));
      for (int i = 0; i < cfg.feature_dim; ++i) {
        frames(i, t) += scale * rng.gaussian();
      }
    }
  }
  return frames;
}

Eigen::VectorXd word_prototype(const WorldConfig& cfg,
                               const std::string& word) {
  int e = entity_index(cfg, word);
  if (e >= 0) {
    Eigen::VectorXd v = role_basis(cfg, "subj", e) + role_basis(cfg, "obj", e);
    double n = v.norm();
    return n < 1e-12 ? v : Eigen::VectorXd(v / n);
  }
  int r = predicate_index(cfg, word);
  if (r >= 0) return role_basis(cfg, "pred", r);
  throw ValidationError("word '" + word + "' has no feature prototype");
}

Episode generate_episode(const WorldConfig& cfg, int index) {
  cfg.validate();
  if (index < 0) throw ValidationError("episode index must be non-negative");
  return generate_episode_impl(cfg, build_taxonomy(cfg), triple_library(cfg),
                               index);
}

std::vector<Episode> generate_episodes(const WorldConfig& cfg, int count,
                                       int first_index) {
  cfg.validate();
  if (count < 0) throw ValidationError("episode count must be non-negative");
  Taxonomy tax = build_taxonomy(cfg);
  std::vector<TripleId> library = triple_library(cfg);
  std::vector<Episode> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back(generate_episode_impl(cfg, tax, library, first_index + i));
  }
  return out;
}

void export_episodes(const WorldConfig& cfg, const std::vector<Episode>& eps,
                     const std::string& path) {
  cfg.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "format_version: 1\n";
  out << json({{"world", world_to_json(cfg)}}).dump() << '\n';
  for (const Episode& ep : eps) {
    json j;
    j["id"] = ep.id;
    j["seed"] = ep.seed;
    j["num_frames"] = ep.events.num_frames;
    std::vector<std::string> events;
    for (const Clue& c : ep.events.clues) events.push_back(render_clue(c));
    j["events"] = events;
    json qa = json::array();
    for (const QAPair& q : ep.qa) qa.push_back(qa_to_json(q));
    j["qa"] = qa;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

EpisodeFile import_episodes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "format_version: 1") {
    throw IoError(path + ": missing or unsupported format_version header");
  }
  if (!std::getline(in, line)) {
    throw IoError(path + ": missing world config line");
  }
  EpisodeFile file;
  int line_no = 2;
  try {
    file.world = world_from_json(json::parse(line).at("world"));
    file.world.validate();
  } catch (const json::exception& e) {
    throw IoError(path + ": line 2: bad world config: " + e.what());
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      Episode ep;
      ep.id = j.at("id").get<std::string>();
      ep.seed = j.at("seed").get<uint64_t>();
      ep.events.video_id = ep.id;
      ep.events.num_frames = j.at("num_frames").get<int>();
      if (ep.events.num_frames != file.world.num_frames) {
        throw DataError("episode frame count differs from world config");
      }
      for (const auto& s : j.at("events").get<std::vector<std::string>>()) {
        ep.events.clues.push_back(parse_clue(s));
      }
      ep.events.validate();
      for (const auto& q : j.at("qa")) ep.qa.push_back(qa_from_json(q));
      ep.frames = render_frames(file.world, ep.events, ep.seed);
      file.episodes.push_back(std::move(ep));
    } catch (const json::exception& e) {
      throw IoError(path + ": line " + std::to_string(line_no) + ": " +
                    e.what());
    } catch (const Error& e) {
      throw IoError(path + ": line " + std::to_string(line_no) + ": " +
                    e.what());
    }
  }
  return file;
}

}  // namespace clueqa
