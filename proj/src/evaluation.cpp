#include "clueqa/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "clueqa/rng.hpp"
#include "clueqa/tokens.hpp"

namespace clueqa {

using nlohmann::json;

double wup_similarity(const Taxonomy& tax, const std::string& a,
                      const std::string& b) {
  int na = tax.index_of(a);
  int nb = tax.index_of(b);
  if (na < 0) throw VocabularyError("'" + a + "' is not in the taxonomy");
  if (nb < 0) throw VocabularyError("'" + b + "' is not in the taxonomy");
  int anc = tax.lca(na, nb);
  return 2.0 * tax.depth(anc) / (tax.depth(na) + tax.depth(nb));
}

double wups_at(const Taxonomy& tax, const std::string& prediction,
               const std::string& gold, double threshold) {
  double s = wup_similarity(tax, prediction, gold);
  return s >= threshold ? s : 0.1 * s;
}

const char* eval_mode_name(EvalMode m) {
  switch (m) {
    case EvalMode::kMultipleChoice: return "multiple-choice";
    case EvalMode::kOpenEnded: return "open-ended";
  }
  throw ContractError("unknown eval mode");
}

Dataset filter_by_mode(const Dataset& data, EvalMode mode) {
  Dataset out;
  out.world = data.world;
  out.episodes = data.episodes;
  for (const Dataset::Item& it : data.items) {
    bool mc = data.episodes[it.episode].qa[it.qa].multiple_choice();
    if (mc == (mode == EvalMode::kMultipleChoice)) out.items.push_back(it);
  }
  if (out.items.empty()) {
    throw DataError(std::string("dataset has no ") + eval_mode_name(mode) +
                    " questions");
  }
  return out;
}

EvalReport evaluate(const Model& model, const Dataset& data,
                    const PipelineConfig& cfg, EvalMode mode) {
  Taxonomy tax = build_taxonomy(data.world);
  EvalReport r;
  r.mode = mode;
  std::map<int, QTypeStats> per_type;
  double vis = 0, clue = 0, seq = 0, attn = 0;

  for (const Dataset::Item& it : data.items) {
    const Episode& ep = data.episodes[it.episode];
    const QAPair& qa = ep.qa[it.qa];
    if (qa.multiple_choice() != (mode == EvalMode::kMultipleChoice)) {
      throw DataError("question format does not match evaluation mode");
    }
    PipelineTrace trace = answer_question(model, ep, qa, cfg);

    QTypeStats& ts = per_type[(int)qa.qtype];
    ts.qtype = qa.qtype;
    ++ts.count;
    ++r.count;
    bool correct;
    if (qa.multiple_choice()) {
      correct = trace.chosen_option == qa.answer_index;
    } else {
      correct = trace.answer_text == qa.answer;
      if (trace.answer_text.empty() || !tax.contains(trace.answer_text)) {
        ++r.off_taxonomy;  // scores 0: similarity is undefined off-taxonomy
      } else {
        double w0 = wups_at(tax, trace.answer_text, qa.answer, 0.0);
        double w9 = wups_at(tax, trace.answer_text, qa.answer, 0.9);
        r.wups0 += w0;
        r.wups9 += w9;
        ts.wups0 += w0;
        ts.wups9 += w9;
      }
    }
    if (correct) {
      ++ts.correct;
      ++r.correct;
    }
    if (trace.degenerate_clues) ++r.degenerate_clue_runs;
    vis += trace.cost.visual_tokens;
    clue += trace.cost.clue_tokens;
    seq += trace.cost.sequence_length;
    attn += (double)trace.cost.attention_proxy;
  }

  r.accuracy = (double)r.correct / r.count;
  if (mode == EvalMode::kOpenEnded) {
    r.wups0 /= r.count;
    r.wups9 /= r.count;
  }
  for (auto& [k, ts] : per_type) {
    ts.accuracy = (double)ts.correct / ts.count;
    if (mode == EvalMode::kOpenEnded) {
      ts.wups0 /= ts.count;
      ts.wups9 /= ts.count;
    }
    r.by_qtype.push_back(ts);
  }
  r.mean_visual_tokens = vis / r.count;
  r.mean_clue_tokens = clue / r.count;
  r.mean_sequence_length = seq / r.count;
  r.mean_attention_proxy = attn / r.count;
  return r;
}

FullEval evaluate_full(const Model& model, const Dataset& data,
                       const PipelineConfig& cfg) {
  FullEval full;
  for (EvalMode mode : {EvalMode::kMultipleChoice, EvalMode::kOpenEnded}) {
    bool any = std::any_of(
        data.items.begin(), data.items.end(), [&](const Dataset::Item& it) {
          return data.episodes[it.episode].qa[it.qa].multiple_choice() ==
                 (mode == EvalMode::kMultipleChoice);
        });
    if (!any) continue;
    EvalReport r = evaluate(model, filter_by_mode(data, mode), cfg, mode);
    full.count += r.count;
    full.correct += r.correct;
    full.mean_visual_tokens += r.mean_visual_tokens * r.count;
    full.mean_clue_tokens += r.mean_clue_tokens * r.count;
    full.mean_sequence_length += r.mean_sequence_length * r.count;
    full.mean_attention_proxy += r.mean_attention_proxy * r.count;
    full.parts.push_back(std::move(r));
  }
  if (full.count == 0) throw DataError("nothing to evaluate");
  full.accuracy = (double)full.correct / full.count;
  full.mean_visual_tokens /= full.count;
  full.mean_clue_tokens /= full.count;
  full.mean_sequence_length /= full.count;
  full.mean_attention_proxy /= full.count;
  return full;
}

std::string eval_table(const FullEval& full) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s %-13s %6s %6s %7s %7s %8s %7s\n",
                "scope", "format", "count", "acc%", "wups@0", "wups@.9",
                "vis-tok", "seq");
  out << buf;
  for (const EvalReport& part : full.parts) {
    bool open = part.mode == EvalMode::kOpenEnded;
    std::snprintf(buf, sizeof(buf), "%-16s %-13s %6d %6.1f %7s %7s %8.1f %7.1f\n",
                  "total", eval_mode_name(part.mode), part.count,
                  100.0 * part.accuracy,
                  open ? (std::to_string(part.wups0).substr(0, 5)).c_str() : "-",
                  open ? (std::to_string(part.wups9).substr(0, 5)).c_str() : "-",
                  part.mean_visual_tokens, part.mean_sequence_length);
    out << buf;
    for (const QTypeStats& ts : part.by_qtype) {
      std::snprintf(buf, sizeof(buf),
                    "%-16s %-13s %6d %6.1f %7s %7s %8s %7s\n",
                    qtype_name(ts.qtype), "", ts.count, 100.0 * ts.accuracy,
                    open ? (std::to_string(ts.wups0).substr(0, 5)).c_str() : "-",
                    open ? (std::to_string(ts.wups9).substr(0, 5)).c_str() : "-",
                    "", "");
      out << buf;
    }
  }
  std::snprintf(buf, sizeof(buf), "%-16s %-13s %6d %6.1f\n", "overall", "all",
                full.count, 100.0 * full.accuracy);
  out << buf;
  return out.str();
}

void write_eval_jsonl(const FullEval& full, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write eval report: " + path);
  for (const EvalReport& part : full.parts) {
    json j{{"scope", "total"},
           {"format", eval_mode_name(part.mode)},
           {"count", part.count},
           {"accuracy", part.accuracy},
           {"wups0", part.wups0},
           {"wups9", part.wups9},
           {"off_taxonomy", part.off_taxonomy},
           {"degenerate_clue_runs", part.degenerate_clue_runs},
           {"visual_tokens", part.mean_visual_tokens},
           {"clue_tokens", part.mean_clue_tokens},
           {"sequence_length", part.mean_sequence_length},
           {"attention_proxy", part.mean_attention_proxy}};
    out << j.dump() << "\n";
    for (const QTypeStats& ts : part.by_qtype) {
      json q{{"scope", qtype_name(ts.qtype)},
             {"format", eval_mode_name(part.mode)},
             {"count", ts.count},
             {"accuracy", ts.accuracy},
             {"wups0", ts.wups0},
             {"wups9", ts.wups9}};
      out << q.dump() << "\n";
    }
  }
  json overall{{"scope", "overall"},
               {"format", "all"},
               {"count", full.count},
               {"accuracy", full.accuracy},
               {"visual_tokens", full.mean_visual_tokens},
               {"clue_tokens", full.mean_clue_tokens},
               {"sequence_length", full.mean_sequence_length},
               {"attention_proxy", full.mean_attention_proxy}};
  out << overall.dump() << "\n";
}

OracleReport oracle_experiment(const Model& model, const Dataset& data,
                               PipelineConfig cfg) {
  for (const Episode& ep : data.episodes) {
    if (ep.events.clues.empty()) {
      throw DataError("episode " + ep.id + " carries no ground-truth clues");
    }
  }
  OracleReport rep;
  cfg.clue_source = ClueSource::kSelfGenerated;
  rep.standard = evaluate_full(model, data, cfg);
  cfg.clue_source = ClueSource::kOracle;
  rep.oracle = evaluate_full(model, data, cfg);
  rep.delta_accuracy = rep.oracle.accuracy - rep.standard.accuracy;
  return rep;
}

// ---- ablation ladder -------------------------------------------------------

std::vector<LadderRung> standard_ladder(const std::string& checkpoint_dir) {
  auto p = [&](const char* f) { return checkpoint_dir + "/" + f; };
  return {
      {"baseline", p("baseline.ckpt"), ClueSource::kNone, false, false, false},
      {"s1", p("s1.ckpt"), ClueSource::kSelfGenerated, false, false, false},
      {"s12", p("s12.ckpt"), ClueSource::kSelfGenerated, false, false, false},
      {"s12-ks", p("s12.ckpt"), ClueSource::kSelfGenerated, true, false, false},
      {"acf", p("full.ckpt"), ClueSource::kSelfGenerated, true, true, false},
      {"acf-vc", p("full.ckpt"), ClueSource::kSelfGenerated, true, true, true},
  };
}

std::vector<LadderRung> read_ladder_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rung list: " + path);
  std::vector<LadderRung> rungs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      LadderRung r;
      r.name = j.at("name").get<std::string>();
      r.checkpoint_path = j.at("checkpoint").get<std::string>();
      r.clue_source = clue_source_from_name(j.at("clue_source").get<std::string>());
      r.ks = j.at("ks").get<bool>();
      r.acf = j.at("acf").get<bool>();
      r.vc = j.at("vc").get<bool>();
      rungs.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (rungs.empty()) throw ParseError(path + ": no rungs defined");
  return rungs;
}

void write_ladder_file(const std::vector<LadderRung>& rungs,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write rung list: " + path);
  for (const LadderRung& r : rungs) {
    json j{{"name", r.name},
           {"checkpoint", r.checkpoint_path},
           {"clue_source", clue_source_name(r.clue_source)},
           {"ks", r.ks},
           {"acf", r.acf},
           {"vc", r.vc}};
    out << j.dump() << "\n";
  }
}

std::vector<LadderRow> ablation_ladder(const std::vector<LadderRung>& rungs,
                                       const Dataset& data,
                                       const PipelineConfig& base) {
  if (rungs.empty()) throw ConfigError("empty rung list");
  std::vector<LadderRow> rows;
  for (const LadderRung& rung : rungs) {
    std::unique_ptr<Model> model;
    try {
      model = load_checkpoint(rung.checkpoint_path);
    } catch (const Error& e) {
      throw ConfigError("rung '" + rung.name + "': " + e.what());
    }
    if (!(model->world == data.world)) {
      throw DataError("rung '" + rung.name +
                      "': checkpoint world differs from the dataset");
    }
    PipelineConfig cfg = base;
    cfg.clue_source = rung.clue_source;
    cfg.ks_enabled = rung.ks;
    cfg.acf_bypass = !rung.acf;
    cfg.vc_enabled = rung.vc;
    LadderRow row;
    row.rung = rung;
    row.result = evaluate_full(*model, data, cfg);
    rows.push_back(std::move(row));
  }
  for (LadderRow& row : rows) {
    row.delta_accuracy = row.result.accuracy - rows.front().result.accuracy;
  }
  return rows;
}

std::string ladder_table(const std::vector<LadderRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %-7s %-3s %-4s %-3s %7s %7s %8s %8s %7s\n",
                "rung", "clues", "ks", "acf", "vc", "acc%", "d-acc", "vis-tok",
                "clue-tok", "seq");
  out << buf;
  for (const LadderRow& r : rows) {
    std::snprintf(buf, sizeof(buf),
                  "%-10s %-7s %-3s %-4s %-3s %7.1f %+7.1f %8.1f %8.1f %7.1f\n",
                  r.rung.name.c_str(), clue_source_name(r.rung.clue_source),
                  r.rung.ks ? "on" : "off", r.rung.acf ? "on" : "off",
                  r.rung.vc ? "on" : "off", 100.0 * r.result.accuracy,
                  100.0 * r.delta_accuracy, r.result.mean_visual_tokens,
                  r.result.mean_clue_tokens, r.result.mean_sequence_length);
    out << buf;
  }
  return out.str();
}

void write_ladder_jsonl(const std::vector<LadderRow>& rows,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write ladder report: " + path);
  for (const LadderRow& r : rows) {
    json j{{"name", r.rung.name},
           {"checkpoint", r.rung.checkpoint_path},
           {"clue_source", clue_source_name(r.rung.clue_source)},
           {"ks", r.rung.ks},
           {"acf", r.rung.acf},
           {"vc", r.rung.vc},
           {"count", r.result.count},
           {"accuracy", r.result.accuracy},
           {"delta_accuracy", r.delta_accuracy},
           {"visual_tokens", r.result.mean_visual_tokens},
           {"clue_tokens", r.result.mean_clue_tokens},
           {"sequence_length", r.result.mean_sequence_length},
           {"attention_proxy", r.result.mean_attention_proxy}};
    out << j.dump() << "\n";
  }
}

// ---- information diagnostics ----------------------------------------------

uint64_t clue_signature(const std::vector<Clue>& clues) {
  std::vector<std::string> triples;
  triples.reserve(clues.size());
  for (const Clue& c : clues) {
    triples.push_back(c.subject + " " + c.predicate + " " + c.object);
  }
  std::sort(triples.begin(), triples.end());
  std::string joined;
  for (const std::string& t : triples) {
    joined += t;
    joined += '\n';
  }
  return stream_id(joined);
}

uint64_t question_signature(const std::vector<std::string>& question) {
  std::string joined;
  for (const std::string& w : question) {
    joined += w;
    joined += '\n';
  }
  return stream_id(joined);
}

double plugin_mutual_information(const std::vector<uint64_t>& xs,
                                 const std::vector<uint64_t>& ys) {
  if (xs.size() != ys.size()) {
    throw ContractError("sample vectors differ in length");
  }
  if (xs.empty()) throw EstimationError("no samples to estimate from");
  std::map<uint64_t, int> nx, ny;
  std::map<std::pair<uint64_t, uint64_t>, int> nxy;
  for (size_t i = 0; i < xs.size(); ++i) {
    ++nx[xs[i]];
    ++ny[ys[i]];
    ++nxy[{xs[i], ys[i]}];
  }
  double n = (double)xs.size();
  double mi = 0.0;
  for (const auto& [xy, c] : nxy) {
    mi += (c / n) * std::log(n * c / ((double)nx[xy.first] * ny[xy.second]));
  }
  return std::max(mi, 0.0);
}

const char* clue_channel_name(ClueChannel c) {
  switch (c) {
    case ClueChannel::kGroundTruth: return "ground-truth";
    case ClueChannel::kSelfGenerated: return "self-generated";
    case ClueChannel::kRandom: return "random";
    case ClueChannel::kGatedGroundTruth: return "gated-ground-truth";
  }
  throw ContractError("unknown clue channel");
}

namespace {

std::vector<Clue> generate_clues_full_frames(const Model& model,
                                             const Episode& ep,
                                             int max_clues) {
  int f = (int)ep.frames.cols();
  ClueGenSequence prefix = build_clue_gen_prefix(model.vocab, f);
  Eigen::MatrixXd vis = model.backbone.encode_frames(ep.frames);
  int budget = max_clues * (Vocabulary::kClueTokens + 1) + 1;
  std::vector<int> gen =
      model.backbone.generate(prefix.seq, vis, Vocabulary::kEos, budget);
  std::vector<Clue> clues = decode_clue_stream(model.vocab, gen, f, nullptr);
  if ((int)clues.size() > max_clues) clues.resize(max_clues);
  return clues;
}

std::vector<Clue> random_library_clues(const WorldConfig& world,
                                       const std::vector<TripleId>& library,
                                       int episode_index) {
  Rng rng(world.seed, "ib-random", (uint64_t)episode_index);
  int k = std::min(rng.uniform_int(world.events_min, world.events_max),
                   (int)library.size());
  std::vector<int> idx(library.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::swap(idx[i], idx[rng.uniform_int(i, (int)idx.size() - 1)]);
  }
  std::vector<std::string> ents = entity_names(world);
  std::vector<std::string> preds = predicate_names(world);
  std::vector<Clue> out;
  for (int i = 0; i < k; ++i) {
    const TripleId& t = library[idx[i]];
    out.push_back({0, 0, ents[t.subject], preds[t.predicate], ents[t.object]});
  }
  return out;
}

}  // namespace

IbReport ib_diagnostic(const Model& model, const Dataset& data,
                       double gate_threshold, int max_generated_clues) {
  if (!(model.world == data.world)) {
    throw DataError("model and dataset worlds differ");
  }
  if (model.stage == StageTag::kNone) {
    throw SequencingError("information diagnostic on an untrained model");
  }
  if (data.items.empty()) throw EstimationError("empty dataset");

  int n_eps = (int)data.episodes.size();
  std::vector<uint64_t> sig_gt(n_eps), sig_self(n_eps), sig_random(n_eps);
  std::vector<TripleId> library = triple_library(data.world);
  for (int e = 0; e < n_eps; ++e) {
    const Episode& ep = data.episodes[e];
    sig_gt[e] = clue_signature(ep.events.clues);
    sig_self[e] = clue_signature(
        generate_clues_full_frames(model, ep, max_generated_clues));
    sig_random[e] = clue_signature(random_library_clues(data.world, library, e));
  }

  bool with_gated = model.stage == StageTag::kStage2;
  std::vector<uint64_t> xs_gt, xs_self, xs_random, xs_gated, ys, qs;
  for (const Dataset::Item& it : data.items) {
    const Episode& ep = data.episodes[it.episode];
    const QAPair& qa = ep.qa[it.qa];
    xs_gt.push_back(sig_gt[it.episode]);
    xs_self.push_back(sig_self[it.episode]);
    xs_random.push_back(sig_random[it.episode]);
    ys.push_back(stream_id(qa.answer));
    qs.push_back(question_signature(qa.question));
    if (with_gated) {
      int f = (int)ep.frames.cols();
      std::vector<int> slots(f);
      std::iota(slots.begin(), slots.end(), 0);
      AnswerSequence rep =
          build_answer_sequence(model.vocab, true, ep.events.clues, {}, slots,
                                qa.question, "", false);
      Eigen::MatrixXd vis = model.backbone.encode_frames(ep.frames);
      ForwardPass fp = model.backbone.forward(rep.seq, vis, false);
      Eigen::VectorXd f_q = Backbone::span_representation(fp, rep.question);
      int n_clues = (int)ep.events.clues.size();
      Eigen::MatrixXd f_c(model.mcfg.model_dim, n_clues);
      Eigen::MatrixXd f_v(model.mcfg.model_dim, n_clues);
      std::vector<Eigen::MatrixXd> lifespans(n_clues);
      for (int i = 0; i < n_clues; ++i) {
        const Clue& c = ep.events.clues[i];
        f_c.col(i) = Backbone::span_representation(fp, rep.clue_spans[i]);
        lifespans[i] = vis.middleCols(c.t_start, c.t_end - c.t_start + 1);
        f_v.col(i) = lifespans[i].rowwise().mean();
      }
      GatingResult gr = model.acf.gate_clues(f_q, f_c, f_v, lifespans);
      std::vector<Clue> kept;
      for (int i = 0; i < n_clues; ++i) {
        if (gr.gates[i] >= gate_threshold) kept.push_back(ep.events.clues[i]);
      }
      xs_gated.push_back(clue_signature(kept));
    }
  }

  auto channel = [&](ClueChannel c, const std::vector<uint64_t>& xs) {
    IbChannelReport r;
    r.channel = c;
    r.mi_answer = plugin_mutual_information(xs, ys);
    r.mi_question = plugin_mutual_information(xs, qs);
    std::vector<uint64_t> uniq = xs;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    r.distinct_signatures = (int)uniq.size();
    return r;
  };

  IbReport report;
  report.samples = (int)ys.size();
  report.channels.push_back(channel(ClueChannel::kGroundTruth, xs_gt));
  report.channels.push_back(channel(ClueChannel::kSelfGenerated, xs_self));
  report.channels.push_back(channel(ClueChannel::kRandom, xs_random));
  if (with_gated) {
    report.channels.push_back(channel(ClueChannel::kGatedGroundTruth, xs_gated));
  }
  double mi_a = report.channels.front().mi_answer;
  double mi_q = report.channels.front().mi_question;
  report.gamma = mi_a > 1e-9 ? mi_q / mi_a : 0.0;
  return report;
}

std::string ib_table(const IbReport& report) {
  std::ostringstream out;
  char buf[120];
  std::snprintf(buf, sizeof(buf), "%-20s %10s %10s %9s\n", "channel", "I(C;A)",
                "I(C;Q)", "distinct");
  out << buf;
  for (const IbChannelReport& c : report.channels) {
    std::snprintf(buf, sizeof(buf), "%-20s %10.4f %10.4f %9d\n",
                  clue_channel_name(c.channel), c.mi_answer, c.mi_question,
                  c.distinct_signatures);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "samples %d, balance gamma %.3f\n",
                report.samples, report.gamma);
  out << buf;
  return out.str();
}

}  // namespace clueqa
