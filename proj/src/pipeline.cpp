#include "clueqa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace clueqa {

namespace {

// Cosine with a fixed convention for zero vectors when tolerated: two zero
// vectors are identical (1), a zero against non-zero is unrelated (0).
double cosine_lenient(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double na = a.norm();
  double nb = b.norm();
  if (na < 1e-12 || nb < 1e-12) {
    return (na < 1e-12 && nb < 1e-12) ? 1.0 : 0.0;
  }
  return a.dot(b) / (na * nb);
}

double cosine_strict(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double na = a.norm();
  double nb = b.norm();
  if (na < 1e-12 || nb < 1e-12) {
    throw ContractError("cosine of a zero-norm embedding");
  }
  return a.dot(b) / (na * nb);
}

std::vector<int> iota_vec(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

const char* clue_source_name(ClueSource s) {
  switch (s) {
    case ClueSource::kSelfGenerated: return "self";
    case ClueSource::kOracle: return "oracle";
    case ClueSource::kNone: return "none";
  }
  throw ContractError("unknown clue source");
}

ClueSource clue_source_from_name(const std::string& name) {
  if (name == "self") return ClueSource::kSelfGenerated;
  if (name == "oracle") return ClueSource::kOracle;
  if (name == "none") return ClueSource::kNone;
  throw ParseError("unknown clue source '" + name + "'");
}

void PipelineConfig::validate() const {
  if (alpha < 0.0 || beta < 0.0) {
    throw ValidationError("alpha and beta must be non-negative");
  }
  if (alpha + beta <= 0.0) {
    throw ValidationError("alpha + beta must be positive");
  }
  if (top_k_frames < 1) throw ValidationError("top_k_frames must be >= 1");
  if (tau < 0.0 || tau > 1.0) throw ValidationError("tau must be in [0, 1]");
  if (cluster_similarity_threshold <= 0.0 ||
      cluster_similarity_threshold >= 1.0) {
    throw ValidationError("cluster_similarity_threshold must be in (0, 1)");
  }
  if (max_generated_clues < 1) {
    throw ValidationError("max_generated_clues must be >= 1");
  }
}

std::vector<int> temporal_scene_clustering(const Eigen::MatrixXd& frames,
                                           double threshold) {
  int n = (int)frames.cols();
  if (n < 1) throw ContractError("clustering needs at least one frame");
  std::vector<int> reps;
  int run_start = 0;
  auto close_run = [&](int run_end) {  // inclusive
    int len = run_end - run_start + 1;
    int best = run_start;
    double best_mean = -2.0;
    for (int i = run_start; i <= run_end; ++i) {
      double mean;
      if (len == 1) {
        mean = 1.0;
      } else {
        double s = 0.0;
        for (int j = run_start; j <= run_end; ++j) {
          if (j != i) s += cosine_lenient(frames.col(i), frames.col(j));
        }
        mean = s / (len - 1);
      }
      if (mean > best_mean) {
        best_mean = mean;
        best = i;
      }
    }
    reps.push_back(best);
  };
  for (int t = 0; t + 1 < n; ++t) {
    if (cosine_lenient(frames.col(t), frames.col(t + 1)) < threshold) {
      close_run(t);
      run_start = t + 1;
    }
  }
  close_run(n - 1);
  return reps;  // ascending by construction (one rep per ordered run)
}

std::vector<std::string> keyword_extract(
    const WorldConfig& world, const std::vector<std::string>& question) {
  std::vector<std::string> out;
  for (const std::string& w : question) {
    if (!is_entity_word(world, w) && !is_predicate_word(world, w)) continue;
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  }
  return out;
}

double frame_relevance(const Eigen::VectorXd& question_emb,
                       const Eigen::MatrixXd& keyword_embs,
                       const Eigen::MatrixXd& patch_embs, double alpha,
                       double beta) {
  if (patch_embs.cols() < 1) {
    throw ContractError("frame relevance needs at least one patch");
  }
  double score = 0.0;
  if (alpha != 0.0) {
    double best = -std::numeric_limits<double>::infinity();
    for (int p = 0; p < patch_embs.cols(); ++p) {
      best = std::max(best, cosine_strict(question_emb, patch_embs.col(p)));
    }
    score += alpha * best;
  }
  if (beta != 0.0 && keyword_embs.cols() > 0) {
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < keyword_embs.cols(); ++j) {
      for (int p = 0; p < patch_embs.cols(); ++p) {
        best =
            std::max(best, cosine_strict(keyword_embs.col(j), patch_embs.col(p)));
      }
    }
    score += beta * best;
  }
  return score;
}

std::vector<int> select_keyframes(const std::vector<int>& candidates,
                                  const std::vector<double>& scores,
                                  int top_k) {
  if (candidates.size() != scores.size()) {
    throw ContractError("candidate/score count mismatch");
  }
  if (top_k < 1) throw ContractError("top_k must be >= 1");
  std::vector<int> order = iota_vec((int)candidates.size());
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return candidates[a] < candidates[b];
  });
  if ((int)order.size() > top_k) order.resize(top_k);
  std::vector<int> out;
  for (int i : order) out.push_back(candidates[i]);
  std::sort(out.begin(), out.end());
  return out;
}

double retention_score(int t, const ClueCollection& clues,
                       const std::vector<double>& gates,
                       const std::vector<std::vector<double>>& faithfulness) {
  if (gates.size() != clues.clues.size() ||
      faithfulness.size() != clues.clues.size()) {
    throw ContractError("gate/faithfulness count mismatch");
  }
  std::vector<int> covering = covering_clues(clues, t);
  if (covering.empty()) return 0.0;
  double s = 0.0;
  for (int i : covering) {
    int offset = t - clues.clues[i].t_start;
    if (offset < 0 || offset >= (int)faithfulness[i].size()) {
      throw ContractError("faithfulness vector does not span clue lifespan");
    }
    s += gates[i] * faithfulness[i][offset];
  }
  return s / covering.size();
}

std::vector<int> compress_frames(int num_slots,
                                 const std::vector<double>& retention,
                                 double tau) {
  if ((int)retention.size() != num_slots) {
    throw ContractError("retention score count mismatch");
  }
  std::vector<int> out;
  for (int t = 0; t < num_slots; ++t) {
    if (retention[t] >= tau) out.push_back(t);
  }
  if (out.empty() && num_slots > 0) {
    int best = 0;
    for (int t = 1; t < num_slots; ++t) {
      if (retention[t] > retention[best]) best = t;
    }
    out.push_back(best);
  }
  return out;
}

std::vector<Clue> remap_clues_to_keyframes(const std::vector<Clue>& clues,
                                           const std::vector<int>& keyframes) {
  if (keyframes.empty()) throw ContractError("no keyframes to remap onto");
  std::vector<Clue> out;
  out.reserve(clues.size());
  for (const Clue& c : clues) {
    int first = -1, last = -1;
    for (int j = 0; j < (int)keyframes.size(); ++j) {
      if (keyframes[j] >= c.t_start && first < 0) first = j;
      if (keyframes[j] <= c.t_end) last = j;
    }
    Clue m = c;
    if (first >= 0 && last >= first) {
      m.t_start = first;
      m.t_end = last;
    } else {
      // Lifespan contains no keyframe: snap to the nearest one.
      int best = 0;
      long long best_d = std::numeric_limits<long long>::max();
      for (int j = 0; j < (int)keyframes.size(); ++j) {
        long long d = 0;
        if (keyframes[j] < c.t_start) d = c.t_start - keyframes[j];
        if (keyframes[j] > c.t_end) d = keyframes[j] - c.t_end;
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      m.t_start = best;
      m.t_end = best;
    }
    out.push_back(m);
  }
  return out;
}

KeyframeSelection run_keyframe_selection(const Model& model,
                                         const Eigen::MatrixXd& frames,
                                         const std::vector<std::string>& question,
                                         double cluster_similarity_threshold,
                                         double alpha, double beta, int top_k) {
  KeyframeSelection sel;
  sel.candidates =
      temporal_scene_clustering(frames, cluster_similarity_threshold);
  std::vector<std::string> keywords = keyword_extract(model.world, question);
  Eigen::MatrixXd keyword_embs;
  Eigen::VectorXd question_emb;
  if (!keywords.empty()) {
    Eigen::MatrixXd protos(model.world.feature_dim, (int)keywords.size());
    for (size_t j = 0; j < keywords.size(); ++j) {
      protos.col(j) = word_prototype(model.world, keywords[j]);
    }
    keyword_embs = model.backbone.encode_frames(protos);
    question_emb = keyword_embs.rowwise().mean();
  }
  sel.scores.resize(sel.candidates.size(), 0.0);
  if (!keywords.empty()) {
    for (size_t i = 0; i < sel.candidates.size(); ++i) {
      Eigen::MatrixXd patch =
          model.backbone.encode_frames(frames.col(sel.candidates[i]));
      sel.scores[i] =
          frame_relevance(question_emb, keyword_embs, patch, alpha, beta);
    }
  }
  sel.keyframes = select_keyframes(sel.candidates, sel.scores, top_k);
  return sel;
}

PipelineTrace answer_question(const Model& model, const Episode& episode,
                              const QAPair& qa, const PipelineConfig& cfg) {
  cfg.validate();
  if (model.stage == StageTag::kNone) {
    throw SequencingError("inference on an untrained checkpoint");
  }
  if (episode.frames.cols() != model.world.num_frames) {
    throw DataError("episode frame count differs from model world");
  }
  // A clue-free control model ignores clue conditioning by construction;
  // clue assembly is forced off so oracle and standard modes coincide.
  ClueSource source = model.stage == StageTag::kBaseline
                          ? ClueSource::kNone
                          : cfg.clue_source;
  bool gating_active = source == ClueSource::kSelfGenerated && !cfg.acf_bypass;
  if (gating_active && model.stage != StageTag::kStage2) {
    throw SequencingError(
        "adaptive clue filtering requires an inference-supervised checkpoint");
  }

  PipelineTrace trace;
  trace.episode_id = episode.id;
  int n_frames = (int)episode.frames.cols();

  // --- keyframe selection ---------------------------------------------
  std::vector<int> keyframes;
  if (cfg.ks_enabled) {
    KeyframeSelection sel = run_keyframe_selection(
        model, episode.frames, qa.question, cfg.cluster_similarity_threshold,
        cfg.alpha, cfg.beta, cfg.top_k_frames);
    trace.candidate_frames = sel.candidates;
    trace.keyframe_scores = sel.scores;
    keyframes = sel.keyframes;
  } else {
    trace.candidate_frames = iota_vec(n_frames);
    keyframes = trace.candidate_frames;
  }
  trace.keyframes = keyframes;
  int m = (int)keyframes.size();

  Eigen::MatrixXd selected(model.world.feature_dim, m);
  for (int j = 0; j < m; ++j) selected.col(j) = episode.frames.col(keyframes[j]);
  Eigen::MatrixXd vis = model.backbone.encode_frames(selected);

  // --- clue acquisition -------------------------------------------------
  std::vector<Clue> clues;
  if (source == ClueSource::kSelfGenerated) {
    ClueGenSequence prefix = build_clue_gen_prefix(model.vocab, m);
    int budget = cfg.max_generated_clues * (Vocabulary::kClueTokens + 1) + 1;
    std::vector<int> gen =
        model.backbone.generate(prefix.seq, vis, Vocabulary::kEos, budget);
    clues = decode_clue_stream(model.vocab, gen, m, &trace.rejected_clue_blocks);
    if ((int)clues.size() > cfg.max_generated_clues) {
      clues.resize(cfg.max_generated_clues);
    }
    trace.degenerate_clues = clues.empty();
  } else if (source == ClueSource::kOracle) {
    clues = remap_clues_to_keyframes(episode.events.clues, keyframes);
  }
  for (const Clue& c : clues) trace.clues.push_back(render_clue(c));

  // --- gating and per-frame faithfulness --------------------------------
  int n_clues = (int)clues.size();
  std::vector<double> gates(n_clues, 1.0);
  std::vector<std::vector<double>> faithfulness(n_clues);
  bool need_filter_pass =
      n_clues > 0 && (gating_active || (cfg.vc_enabled && source != ClueSource::kNone));
  if (need_filter_pass) {
    AnswerSequence rep = build_answer_sequence(
        model.vocab, true, clues, {}, iota_vec(m), qa.question, "", false);
    ForwardPass rep_fp = model.backbone.forward(rep.seq, vis, false);
    Eigen::VectorXd f_q = Backbone::span_representation(rep_fp, rep.question);
    Eigen::MatrixXd f_c(model.mcfg.model_dim, n_clues);
    Eigen::MatrixXd f_v(model.mcfg.model_dim, n_clues);
    std::vector<Eigen::MatrixXd> lifespans(n_clues);
    for (int i = 0; i < n_clues; ++i) {
      f_c.col(i) = Backbone::span_representation(rep_fp, rep.clue_spans[i]);
      int a = clues[i].t_start;
      int len = clues[i].t_end - clues[i].t_start + 1;
      lifespans[i] = vis.middleCols(a, len);
      f_v.col(i) = lifespans[i].rowwise().mean();
    }
    GatingResult gr = model.acf.gate_clues(f_q, f_c, f_v, lifespans);
    trace.semantic_scores = gr.semantic_scores;
    trace.visual_scores = gr.visual_scores;
    faithfulness = gr.frame_faithfulness;
    if (gating_active) gates = gr.gates;  // oracle/bypass keep gates at 1
  }
  trace.gates = gates;

  // --- visual compression ------------------------------------------------
  std::vector<int> retained_slots = iota_vec(m);
  if (cfg.vc_enabled && n_clues > 0 && need_filter_pass) {
    ClueCollection local;
    local.clues = clues;
    local.video_id = episode.id;
    local.num_frames = m;
    trace.retention.resize(m);
    for (int t = 0; t < m; ++t) {
      trace.retention[t] = retention_score(t, local, gates, faithfulness);
    }
    retained_slots = compress_frames(m, trace.retention, cfg.tau);
  }
  for (int s : retained_slots) trace.retained_frames.push_back(keyframes[s]);

  // --- answer ------------------------------------------------------------
  bool with_clues = source != ClueSource::kNone;
  AnswerSequence prefix =
      build_answer_sequence(model.vocab, with_clues, clues, gates,
                            retained_slots, qa.question, "", true);
  if (qa.multiple_choice()) {
    int best = -1;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int o = 0; o < (int)qa.options.size(); ++o) {
      AnswerSequence full =
          build_answer_sequence(model.vocab, with_clues, clues, gates,
                                retained_slots, qa.question, qa.options[o],
                                true);
      ForwardPass fp = model.backbone.forward(full.seq, vis, false);
      double loss = model.backbone.span_loss(full.seq, fp, full.target);
      if (loss < best_loss) {
        best_loss = loss;
        best = o;
      }
    }
    trace.chosen_option = best;
    trace.answer_text = qa.options[best];
  } else {
    std::vector<int> gen =
        model.backbone.generate(prefix.seq, vis, Vocabulary::kEos, 3);
    if (!gen.empty() && model.vocab.is_word(gen[0])) {
      trace.answer_text = model.vocab.word_of(gen[0]);
    } else {
      trace.answer_text.clear();  // undecodable / off-vocabulary prediction
    }
  }

  // --- cost accounting -----------------------------------------------------
  CostReport& cost = trace.cost;
  cost.sequence_length = prefix.seq.size();
  for (int p = 0; p < prefix.seq.size(); ++p) {
    if (prefix.seq.slots[p] >= 0) ++cost.visual_tokens;
    if (prefix.seq.tags[p] == SegmentTag::kClue) ++cost.clue_tokens;
  }
  cost.question_tokens = prefix.question.length();
  cost.attention_proxy = (long long)model.mcfg.num_layers *
                         (long long)cost.sequence_length *
                         (long long)cost.sequence_length;
  return trace;
}

}  // namespace clueqa
