#include "clueqa/training.hpp"

#include <fstream>
#include <numeric>

#include "json.hpp"

#include "clueqa/pipeline.hpp"
#include "clueqa/rng.hpp"
#include "clueqa/tokens.hpp"

namespace clueqa {

namespace {

std::vector<int> iota_vec(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::vector<Dataset::Item> sample_batch(const Dataset& data, uint64_t seed,
                                        int64_t step, int batch_size) {
  Rng rng(seed, "batch", (uint64_t)step);
  std::vector<Dataset::Item> out;
  out.reserve(batch_size);
  for (int b = 0; b < batch_size; ++b) {
    out.push_back(data.items[rng.uniform_int(0, (int)data.items.size() - 1)]);
  }
  return out;
}

// Clue-extraction supervision: full frame sequence, ground-truth targets.
double clue_loss_item(Model& model, const Episode& ep) {
  ClueGenSequence t = build_clue_gen_training(
      model.vocab, model.world.num_frames, ep.events.clues);
  Eigen::MatrixXd vis = model.backbone.encode_frames(ep.frames);
  ForwardPass fp = model.backbone.forward(t.seq, vis, true);
  double loss = model.backbone.span_loss(t.seq, fp, t.target);
  Eigen::MatrixXd dlog = model.backbone.span_loss_grad(t.seq, fp, t.target);
  model.backbone.backward(t.seq, vis, fp, dlog);
  return loss;
}

// Answer supervision over the full frame sequence. with_clues=true feeds
// the ground-truth clue section (decoupled stage); false is the clue-free
// control.
double answer_loss_item(Model& model, const Episode& ep, const QAPair& qa,
                        bool with_clues) {
  static const std::vector<Clue> kNoClues;
  AnswerSequence s = build_answer_sequence(
      model.vocab, with_clues, with_clues ? ep.events.clues : kNoClues, {},
      iota_vec(model.world.num_frames), qa.question, qa.answer, true);
  Eigen::MatrixXd vis = model.backbone.encode_frames(ep.frames);
  ForwardPass fp = model.backbone.forward(s.seq, vis, true);
  double loss = model.backbone.span_loss(s.seq, fp, s.target);
  Eigen::MatrixXd dlog = model.backbone.span_loss_grad(s.seq, fp, s.target);
  model.backbone.backward(s.seq, vis, fp, dlog);
  return loss;
}

struct JointStats {
  double answer_loss = 0.0;
  double penalty = 0.0;
  double mean_gate = 1.0;
};

// Inference supervision: generate clues (no gradient), gate them (gradient
// into the filter through the scale hook), answer with gated clues.
JointStats joint_loss_item(Model& model, const Episode& ep, const QAPair& qa,
                           const TrainConfig& cfg) {
  std::vector<int> keyframes =
      cfg.ks_enabled
          ? run_keyframe_selection(model, ep.frames, qa.question,
                                   cfg.cluster_similarity_threshold, 0.5, 0.5,
                                   cfg.top_k_frames)
                .keyframes
          : iota_vec(model.world.num_frames);
  int m = (int)keyframes.size();
  Eigen::MatrixXd selected(model.world.feature_dim, m);
  for (int j = 0; j < m; ++j) selected.col(j) = ep.frames.col(keyframes[j]);
  Eigen::MatrixXd vis = model.backbone.encode_frames(selected);

  ClueGenSequence prefix = build_clue_gen_prefix(model.vocab, m);
  int budget = cfg.max_generated_clues * (Vocabulary::kClueTokens + 1) + 1;
  std::vector<int> gen =
      model.backbone.generate(prefix.seq, vis, Vocabulary::kEos, budget);
  std::vector<Clue> clues = decode_clue_stream(model.vocab, gen, m, nullptr);
  if ((int)clues.size() > cfg.max_generated_clues) {
    clues.resize(cfg.max_generated_clues);
  }

  int n_clues = (int)clues.size();
  bool with_clues = n_clues > 0;
  std::vector<double> gates(n_clues, 1.0);
  GatingResult gr;
  bool gate_grads = with_clues && !cfg.acf_bypass;
  if (gate_grads) {
    AnswerSequence rep = build_answer_sequence(
        model.vocab, true, clues, {}, iota_vec(m), qa.question, "", false);
    ForwardPass rep_fp = model.backbone.forward(rep.seq, vis, false);
    Eigen::VectorXd f_q = Backbone::span_representation(rep_fp, rep.question);
    Eigen::MatrixXd f_c(model.mcfg.model_dim, n_clues);
    Eigen::MatrixXd f_v(model.mcfg.model_dim, n_clues);
    std::vector<Eigen::MatrixXd> lifespans(n_clues);
    for (int i = 0; i < n_clues; ++i) {
      f_c.col(i) = Backbone::span_representation(rep_fp, rep.clue_spans[i]);
      lifespans[i] = vis.middleCols(clues[i].t_start,
                                    clues[i].t_end - clues[i].t_start + 1);
      f_v.col(i) = lifespans[i].rowwise().mean();
    }
    gr = model.acf.gate_clues(f_q, f_c, f_v, lifespans);
    gates = gr.gates;
  }

  AnswerSequence s =
      build_answer_sequence(model.vocab, with_clues, clues, gates, iota_vec(m),
                            qa.question, qa.answer, true);
  ForwardPass fp = model.backbone.forward(s.seq, vis, true);
  JointStats st;
  st.answer_loss = model.backbone.span_loss(s.seq, fp, s.target);
  Eigen::MatrixXd dlog = model.backbone.span_loss_grad(s.seq, fp, s.target);
  std::vector<double> scale_grads = model.backbone.backward(s.seq, vis, fp, dlog);

  if (gate_grads) {
    st.penalty = sparsity_penalty(gates, cfg.lambda);
    std::vector<double> dg(n_clues, cfg.lambda / n_clues);
    for (int i = 0; i < n_clues; ++i) {
      for (int p = s.clue_spans[i].begin; p < s.clue_spans[i].end; ++p) {
        dg[i] += scale_grads[p];
      }
    }
    model.acf.backward(gr, dg);
    double sum = 0.0;
    for (double g : gates) sum += g;
    st.mean_gate = sum / n_clues;
  }
  return st;
}

}  // namespace

Dataset Dataset::from_episodes(const WorldConfig& world,
                               std::vector<Episode> episodes) {
  Dataset d;
  d.world = world;
  d.episodes = std::move(episodes);
  for (int e = 0; e < (int)d.episodes.size(); ++e) {
    for (int q = 0; q < (int)d.episodes[e].qa.size(); ++q) {
      d.items.push_back({e, q});
    }
  }
  if (d.items.empty()) {
    throw DataError("dataset holds no question-answer pairs");
  }
  return d;
}

void TrainConfig::validate() const {
  if (stage != 1 && stage != 2) throw ConfigError("stage must be 1 or 2");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (lambda < 0.0) throw ConfigError("lambda must be non-negative");
  if (baseline && stage != 1) {
    throw ConfigError("the clue-free control trains in stage 1");
  }
  if (acf_bypass && stage != 2) {
    throw ConfigError("acf_bypass applies to stage 2 only");
  }
  if (freeze_backbone && stage != 2) {
    throw ConfigError("freeze_backbone applies to stage 2 only");
  }
  if (freeze_backbone && acf_bypass) {
    throw ConfigError("freeze_backbone with acf_bypass leaves nothing to train");
  }
  if (top_k_frames < 1) throw ConfigError("top_k_frames must be >= 1");
  if (max_generated_clues < 1) {
    throw ConfigError("max_generated_clues must be >= 1");
  }
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
}

TrainReport train(Model& model, const Dataset& data, const TrainConfig& cfg,
                  const std::string& metrics_path,
                  const std::string& checkpoint_path) {
  cfg.validate();
  if (!(data.world == model.world)) {
    throw DataError("dataset world differs from the model's world");
  }

  StageTag target = cfg.baseline
                        ? StageTag::kBaseline
                        : (cfg.stage == 1 ? StageTag::kStage1 : StageTag::kStage2);
  StageTag prereq = cfg.stage == 2 ? StageTag::kStage1 : StageTag::kNone;
  if (model.stage == target) {
    // resuming: keep step / adam_t / moments
  } else if (model.stage == prereq) {
    model.stage = target;
    model.step = 0;
    model.adam_t = 0;
    for (Tensor& t : model.store.tensors()) {
      t.adam_m.setZero();
      t.adam_v.setZero();
    }
  } else {
    throw SequencingError(std::string("cannot train toward ") +
                          stage_tag_name(target) + " from a " +
                          stage_tag_name(model.stage) + " model");
  }

  Adam adam(AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
  adam.set_t(model.adam_t);
  std::string only_prefix =
      (cfg.stage == 2 && cfg.freeze_backbone) ? "acf." : "";

  std::ofstream metrics;
  if (!metrics_path.empty()) {
    metrics.open(metrics_path, std::ios::app);
    if (!metrics) throw IoError("cannot open metrics file: " + metrics_path);
  }

  TrainReport report;
  while (model.step < cfg.max_steps) {
    std::vector<Dataset::Item> batch =
        sample_batch(data, cfg.seed, model.step, cfg.batch_size);
    model.store.zero_grads();

    StepStats st;
    st.step = model.step;
    st.stage = cfg.stage;
    if (cfg.stage == 1) {
      bool clue_phase = !cfg.baseline && model.step % 2 == 0;
      st.phase = clue_phase ? "clue" : "answer";
      double total = 0.0;
      for (const Dataset::Item& it : batch) {
        const Episode& ep = data.episodes[it.episode];
        if (clue_phase) {
          total += clue_loss_item(model, ep);
        } else {
          total += answer_loss_item(model, ep, ep.qa[it.qa], !cfg.baseline);
        }
      }
      st.loss = total / batch.size();
      if (clue_phase) {
        st.clue_loss = st.loss;
      } else {
        st.answer_loss = st.loss;
      }
    } else {
      st.phase = "joint";
      double ta = 0.0, tp = 0.0, tg = 0.0;
      for (const Dataset::Item& it : batch) {
        const Episode& ep = data.episodes[it.episode];
        JointStats js = joint_loss_item(model, ep, ep.qa[it.qa], cfg);
        ta += js.answer_loss;
        tp += js.penalty;
        tg += js.mean_gate;
      }
      st.answer_loss = ta / batch.size();
      st.gate_penalty = tp / batch.size();
      st.mean_gate = tg / batch.size();
      st.loss = st.answer_loss + st.gate_penalty;
    }

    model.store.scale_grads(1.0 / batch.size());
    adam.step(model.store, only_prefix);
    model.adam_t = adam.t();
    ++model.step;

    report.steps.push_back(st);
    report.final_loss = st.loss;
    if (metrics.is_open()) {
      nlohmann::json j{{"step", st.step},
                       {"stage", st.stage},
                       {"phase", st.phase},
                       {"loss", st.loss},
                       {"answer_loss", st.answer_loss},
                       {"clue_loss", st.clue_loss},
                       {"gate_penalty", st.gate_penalty},
                       {"mean_gate", st.mean_gate}};
      metrics << j.dump() << "\n";
    }
    if (!checkpoint_path.empty() && cfg.checkpoint_every > 0 &&
        model.step % cfg.checkpoint_every == 0) {
      save_checkpoint(model, checkpoint_path);
    }
  }

  if (!checkpoint_path.empty()) save_checkpoint(model, checkpoint_path);
  return report;
}

}  // namespace clueqa
