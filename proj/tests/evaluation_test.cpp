// Scoring and diagnostics: taxonomy-aware answer similarity, report
// aggregation, the ablation ladder, and the information diagnostics, each
// checked against independent re-derivations.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "clueqa/errors.hpp"
#include "clueqa/evaluation.hpp"
#include "clueqa/model.hpp"
#include "clueqa/rng.hpp"
#include "clueqa/training.hpp"
#include "clueqa/world.hpp"

using namespace clueqa;

namespace {

WorldConfig eval_world() {
  WorldConfig w;
  w.num_entities = 5;
  w.num_predicates = 3;
  w.num_frames = 10;
  w.feature_dim = 12;
  w.events_min = 3;
  w.events_max = 3;
  w.noise_amp = 0.1;
  w.seed = 61;
  return w;
}

ModelConfig eval_model() {
  ModelConfig m;
  m.model_dim = 16;
  m.num_layers = 1;
  m.num_heads = 2;
  m.max_sequence_length = 96;
  return m;
}

PipelineConfig pc_bypass() {
  PipelineConfig c;
  c.acf_bypass = true;
  c.top_k_frames = 6;
  c.max_generated_clues = 3;
  return c;
}

PipelineConfig pc_full() {
  PipelineConfig c;
  c.top_k_frames = 6;
  c.max_generated_clues = 3;
  return c;
}

// One stage-1 and one stage-2 model trained once and shared across cases.
struct EvalFixture {
  WorldConfig world;
  Dataset data;
  std::unique_ptr<Model> s1;
  std::unique_ptr<Model> s2;
};

const EvalFixture& fx() {
  static EvalFixture f = [] {
    EvalFixture f;
    f.world = eval_world();
    f.data = Dataset::from_episodes(f.world, generate_episodes(f.world, 8));
    f.s1 = std::make_unique<Model>(f.world, eval_model(), 21);
    TrainConfig c1;
    c1.stage = 1;
    c1.batch_size = 2;
    c1.max_steps = 6;
    c1.top_k_frames = 6;
    c1.max_generated_clues = 3;
    train(*f.s1, f.data, c1, "", "eval_fx_tmp.ckpt");
    f.s2 = load_checkpoint("eval_fx_tmp.ckpt");
    std::remove("eval_fx_tmp.ckpt");
    TrainConfig c2 = c1;
    c2.stage = 2;
    c2.max_steps = 2;
    train(*f.s2, f.data, c2);
    return f;
  }();
  return f;
}

// Ancestor-path LCA, independent of the production implementation.
int lca_by_paths(const Taxonomy& t, int a, int b) {
  std::vector<int> pa;
  for (int n = a; n != -1; n = t.parent(n)) pa.push_back(n);
  for (int n = b; n != -1; n = t.parent(n)) {
    if (std::find(pa.begin(), pa.end(), n) != pa.end()) return n;
  }
  REQUIRE(false);
  return -1;
}

Taxonomy hand_taxonomy() {
  Taxonomy t;
  int root = t.add_node("thing", -1);
  int animate = t.add_node("animate", root);
  t.add_node("inanimate", root);
  t.add_node("cat", animate);
  t.add_node("dog", animate);
  return t;
}

}  // namespace

TEST_CASE("answer similarity follows the shared-ancestor depth ratio") {
  Taxonomy t = hand_taxonomy();
  // Siblings directly under the root share only the root (depth 1).
  CHECK(wup_similarity(t, "animate", "inanimate") == doctest::Approx(0.5));
  // Deeper siblings share a deeper ancestor.
  CHECK(wup_similarity(t, "cat", "dog") == doctest::Approx(2.0 / 3.0));
  // Cross-branch leaf vs depth-2 node.
  CHECK(wup_similarity(t, "cat", "inanimate") == doctest::Approx(0.4));
  // Ancestor of itself.
  CHECK(wup_similarity(t, "cat", "animate") == doctest::Approx(0.8));
  CHECK(wup_similarity(t, "cat", "cat") == 1.0);
  // Symmetric.
  CHECK(wup_similarity(t, "cat", "inanimate") ==
        wup_similarity(t, "inanimate", "cat"));
  CHECK_THROWS_AS(wup_similarity(t, "cat", "ferret"), VocabularyError);
  CHECK_THROWS_AS(wup_similarity(t, "ferret", "cat"), VocabularyError);
}

TEST_CASE("similarity over a generated hierarchy matches a path-walk oracle") {
  WorldConfig w = eval_world();
  Taxonomy t = build_taxonomy(w);
  std::vector<std::string> names;
  for (int i = 0; i < t.size(); ++i) names.push_back(t.name(i));
  for (int a = 0; a < t.size(); ++a) {
    for (int b = 0; b < t.size(); ++b) {
      int anc = lca_by_paths(t, a, b);
      double expect = 2.0 * t.depth(anc) / (t.depth(a) + t.depth(b));
      double got = wup_similarity(t, names[a], names[b]);
      CHECK(got == doctest::Approx(expect).epsilon(1e-12));
      CHECK(got > 0.0);
      CHECK(got <= 1.0);
      if (a == b) CHECK(got == 1.0);
    }
  }
}

TEST_CASE("sub-threshold similarity is scaled down tenfold") {
  Taxonomy t = hand_taxonomy();
  // s = 0.5 under a 0.9 threshold.
  CHECK(wups_at(t, "animate", "inanimate", 0.9) == doctest::Approx(0.05));
  // At or above the threshold the raw similarity passes through.
  CHECK(wups_at(t, "animate", "inanimate", 0.5) == doctest::Approx(0.5));
  CHECK(wups_at(t, "animate", "inanimate", 0.0) == doctest::Approx(0.5));
  CHECK(wups_at(t, "cat", "dog", 0.6) == doctest::Approx(2.0 / 3.0));
  CHECK(wups_at(t, "cat", "dog", 0.9) == doctest::Approx(0.1 * 2.0 / 3.0));
  // Exact matches always score 1.
  CHECK(wups_at(t, "cat", "cat", 0.9) == 1.0);
  CHECK(wups_at(t, "cat", "cat", 0.0) == 1.0);
}

TEST_CASE("evaluation mode names round-trip") {
  CHECK(std::string(eval_mode_name(EvalMode::kMultipleChoice)) ==
        "multiple-choice");
  CHECK(std::string(eval_mode_name(EvalMode::kOpenEnded)) == "open-ended");
}

TEST_CASE("mutual information matches hand-counted tables") {
  // Perfectly dependent balanced binary variables carry ln 2 nats.
  std::vector<uint64_t> x{1, 2, 1, 2, 1, 2, 1, 2};
  CHECK(plugin_mutual_information(x, x) == doctest::Approx(std::log(2.0)));

  // Independence in the empirical table gives exactly zero.
  std::vector<uint64_t> y_const(8, 7);
  CHECK(plugin_mutual_information(x, y_const) == 0.0);
  std::vector<uint64_t> a{1, 1, 2, 2};
  std::vector<uint64_t> b{1, 2, 1, 2};
  CHECK(plugin_mutual_information(a, b) == 0.0);

  // Asymmetric 2x2 table: counts (0,0)=2, (0,1)=1, (1,1)=1.
  std::vector<uint64_t> xs{0, 0, 0, 1};
  std::vector<uint64_t> ys{0, 0, 1, 1};
  double expect = 0.5 * std::log(4.0 * 2 / (3.0 * 2)) +
                  0.25 * std::log(4.0 * 1 / (3.0 * 2)) +
                  0.25 * std::log(4.0 * 1 / (1.0 * 2));
  CHECK(plugin_mutual_information(xs, ys) ==
        doctest::Approx(expect).epsilon(1e-12));

  // A deterministic function of a uniform variable carries H(f(X)).
  std::vector<uint64_t> u{0, 1, 2, 3};
  std::vector<uint64_t> f2{0, 0, 1, 1};
  CHECK(plugin_mutual_information(u, f2) == doctest::Approx(std::log(2.0)));
  CHECK(plugin_mutual_information(u, u) == doctest::Approx(std::log(4.0)));

  CHECK_THROWS_AS(plugin_mutual_information({1, 2}, {1}), ContractError);
  CHECK_THROWS_AS(plugin_mutual_information({}, {}), EstimationError);
}

TEST_CASE("self-information equals entropy computed from the same counts") {
  Rng rng(5, "mi-fuzz", 0);
  std::vector<uint64_t> xs;
  for (int i = 0; i < 200; ++i) xs.push_back((uint64_t)rng.uniform_int(0, 5));
  std::map<uint64_t, int> counts;
  for (uint64_t v : xs) ++counts[v];
  double h = 0.0;
  for (const auto& [v, c] : counts) {
    double p = c / 200.0;
    h -= p * std::log(p);
  }
  CHECK(plugin_mutual_information(xs, xs) == doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("clue signatures hash symbolic content only") {
  std::vector<Clue> base{{0, 2, "person", "take", "bottle"},
                         {3, 5, "dog", "chase", "ball"}};
  std::vector<Clue> shuffled{base[1], base[0]};
  CHECK(clue_signature(base) == clue_signature(shuffled));

  std::vector<Clue> shifted = base;
  shifted[0].t_start = 4;
  shifted[0].t_end = 9;
  CHECK(clue_signature(base) == clue_signature(shifted));

  std::vector<Clue> reworded = base;
  reworded[1].object = "stick";
  CHECK(clue_signature(base) != clue_signature(reworded));

  // The signature is over a multiset: duplicates count.
  std::vector<Clue> doubled{base[0], base[0]};
  std::vector<Clue> single{base[0]};
  CHECK(clue_signature(doubled) != clue_signature(single));
  CHECK(clue_signature({}) != clue_signature(single));

  // Question signatures are order-sensitive word hashes.
  CHECK(question_signature({"desc", "person", "take"}) ==
        question_signature({"desc", "person", "take"}));
  CHECK(question_signature({"desc", "person", "take"}) !=
        question_signature({"desc", "take", "person"}));
  CHECK(question_signature({}) != question_signature({"desc"}));
}

TEST_CASE("mode filtering splits the dataset without losing items") {
  const EvalFixture& f = fx();
  Dataset mc = filter_by_mode(f.data, EvalMode::kMultipleChoice);
  Dataset oe = filter_by_mode(f.data, EvalMode::kOpenEnded);
  CHECK(mc.world == f.world);
  CHECK(mc.episodes.size() == f.data.episodes.size());
  CHECK(mc.items.size() + oe.items.size() == f.data.items.size());
  CHECK(!mc.items.empty());
  CHECK(!oe.items.empty());
  for (const Dataset::Item& it : mc.items) {
    CHECK(mc.episodes[it.episode].qa[it.qa].multiple_choice());
  }
  for (const Dataset::Item& it : oe.items) {
    CHECK(!oe.episodes[it.episode].qa[it.qa].multiple_choice());
  }
  // Filtering an already-pure subset for the other format leaves nothing.
  CHECK_THROWS_AS(filter_by_mode(mc, EvalMode::kOpenEnded), DataError);
}

TEST_CASE("evaluation reports re-derive from per-question pipeline runs") {
  const EvalFixture& f = fx();
  PipelineConfig cfg = pc_bypass();
  for (EvalMode mode : {EvalMode::kMultipleChoice, EvalMode::kOpenEnded}) {
    Dataset subset = filter_by_mode(f.data, mode);
    EvalReport r = evaluate(*f.s1, subset, cfg, mode);
    CHECK(r.mode == mode);
    CHECK(r.count == (int)subset.items.size());

    Taxonomy tax = build_taxonomy(f.world);
    int correct = 0, off = 0, degenerate = 0;
    double w0 = 0, w9 = 0, vis = 0, clue = 0, seq = 0, attn = 0;
    std::map<int, QTypeStats> per_type;
    for (const Dataset::Item& it : subset.items) {
      const Episode& ep = subset.episodes[it.episode];
      const QAPair& qa = ep.qa[it.qa];
      PipelineTrace tr = answer_question(*f.s1, ep, qa, cfg);
      QTypeStats& ts = per_type[(int)qa.qtype];
      ts.qtype = qa.qtype;
      ++ts.count;
      bool ok;
      if (qa.multiple_choice()) {
        ok = tr.chosen_option == qa.answer_index;
      } else {
        ok = tr.answer_text == qa.answer;
        if (tr.answer_text.empty() || !tax.contains(tr.answer_text)) {
          ++off;
        } else {
          w0 += wups_at(tax, tr.answer_text, qa.answer, 0.0);
          w9 += wups_at(tax, tr.answer_text, qa.answer, 0.9);
        }
      }
      if (ok) {
        ++correct;
        ++ts.correct;
      }
      if (tr.degenerate_clues) ++degenerate;
      vis += tr.cost.visual_tokens;
      clue += tr.cost.clue_tokens;
      seq += tr.cost.sequence_length;
      attn += (double)tr.cost.attention_proxy;
    }

    CHECK(r.correct == correct);
    CHECK(r.accuracy == doctest::Approx((double)correct / r.count));
    CHECK(r.off_taxonomy == (mode == EvalMode::kOpenEnded ? off : 0));
    CHECK(r.degenerate_clue_runs == degenerate);
    if (mode == EvalMode::kOpenEnded) {
      CHECK(r.wups0 == doctest::Approx(w0 / r.count));
      CHECK(r.wups9 == doctest::Approx(w9 / r.count));
      CHECK(r.wups9 <= r.wups0 + 1e-12);
    } else {
      CHECK(r.wups0 == 0.0);
      CHECK(r.wups9 == 0.0);
    }
    CHECK(r.mean_visual_tokens == doctest::Approx(vis / r.count));
    CHECK(r.mean_clue_tokens == doctest::Approx(clue / r.count));
    CHECK(r.mean_sequence_length == doctest::Approx(seq / r.count));
    CHECK(r.mean_attention_proxy == doctest::Approx(attn / r.count));

    // Per-type rows partition the subset, in ascending type order.
    int sum_count = 0, sum_correct = 0;
    int last = -1;
    for (const QTypeStats& ts : r.by_qtype) {
      CHECK((int)ts.qtype > last);
      last = (int)ts.qtype;
      const QTypeStats& expect = per_type.at((int)ts.qtype);
      CHECK(ts.count == expect.count);
      CHECK(ts.correct == expect.correct);
      CHECK(ts.accuracy == doctest::Approx((double)expect.correct / expect.count));
      sum_count += ts.count;
      sum_correct += ts.correct;
    }
    CHECK(sum_count == r.count);
    CHECK(sum_correct == r.correct);
  }

  // Items whose format contradicts the requested mode are rejected.
  Dataset mc = filter_by_mode(f.data, EvalMode::kMultipleChoice);
  CHECK_THROWS_AS(evaluate(*f.s1, mc, cfg, EvalMode::kOpenEnded), DataError);
}

TEST_CASE("the merged report is the sample-weighted blend of its parts") {
  const EvalFixture& f = fx();
  FullEval full = evaluate_full(*f.s1, f.data, pc_bypass());
  REQUIRE(full.parts.size() == 2);
  CHECK(full.parts[0].mode == EvalMode::kMultipleChoice);
  CHECK(full.parts[1].mode == EvalMode::kOpenEnded);

  int count = 0, correct = 0;
  double vis = 0, clue = 0, seq = 0, attn = 0;
  for (const EvalReport& p : full.parts) {
    count += p.count;
    correct += p.correct;
    vis += p.mean_visual_tokens * p.count;
    clue += p.mean_clue_tokens * p.count;
    seq += p.mean_sequence_length * p.count;
    attn += p.mean_attention_proxy * p.count;
  }
  CHECK(full.count == count);
  CHECK(full.count == (int)f.data.items.size());
  CHECK(full.correct == correct);
  CHECK(full.accuracy == doctest::Approx((double)correct / count));
  CHECK(full.mean_visual_tokens == doctest::Approx(vis / count));
  CHECK(full.mean_clue_tokens == doctest::Approx(clue / count));
  CHECK(full.mean_sequence_length == doctest::Approx(seq / count));
  CHECK(full.mean_attention_proxy == doctest::Approx(attn / count));

  Dataset empty;
  empty.world = f.world;
  empty.episodes = f.data.episodes;
  CHECK_THROWS_AS(evaluate_full(*f.s1, empty, pc_bypass()), DataError);
}

TEST_CASE("report rendering includes every scope") {
  const EvalFixture& f = fx();
  FullEval full = evaluate_full(*f.s1, f.data, pc_bypass());

  std::string table = eval_table(full);
  CHECK(table.find("multiple-choice") != std::string::npos);
  CHECK(table.find("open-ended") != std::string::npos);
  CHECK(table.find("overall") != std::string::npos);

  write_eval_jsonl(full, "eval_report_tmp.jsonl");
  std::ifstream in("eval_report_tmp.jsonl");
  REQUIRE(in.good());
  std::vector<nlohmann::json> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(nlohmann::json::parse(line));
  }
  in.close();
  std::remove("eval_report_tmp.jsonl");

  size_t expect = 1;  // overall
  for (const EvalReport& p : full.parts) expect += 1 + p.by_qtype.size();
  CHECK(lines.size() == expect);
  CHECK(lines.back().at("scope").get<std::string>() == "overall");
  CHECK(lines.back().at("count").get<int>() == full.count);
  CHECK(lines.back().at("accuracy").get<double>() ==
        doctest::Approx(full.accuracy));

  CHECK_THROWS_AS(write_eval_jsonl(full, "no_such_dir/report.jsonl"), IoError);
}

TEST_CASE("the oracle experiment pairs the two clue sources") {
  const EvalFixture& f = fx();
  OracleReport rep = oracle_experiment(*f.s2, f.data, pc_full());
  CHECK(rep.standard.count == (int)f.data.items.size());
  CHECK(rep.oracle.count == rep.standard.count);
  CHECK(rep.delta_accuracy ==
        doctest::Approx(rep.oracle.accuracy - rep.standard.accuracy));

  // Every episode must carry ground truth for the substituted run.
  std::vector<Episode> gutted = f.data.episodes;
  gutted[1].events.clues.clear();
  Dataset bad = Dataset::from_episodes(f.world, gutted);
  CHECK_THROWS_AS(oracle_experiment(*f.s2, bad, pc_full()), DataError);
}

TEST_CASE("the standard ladder names six rungs over four checkpoints") {
  std::vector<LadderRung> rungs = standard_ladder("ckpts");
  REQUIRE(rungs.size() == 6);
  const char* names[] = {"baseline", "s1", "s12", "s12-ks", "acf", "acf-vc"};
  const char* files[] = {"ckpts/baseline.ckpt", "ckpts/s1.ckpt",
                         "ckpts/s12.ckpt",      "ckpts/s12.ckpt",
                         "ckpts/full.ckpt",     "ckpts/full.ckpt"};
  for (int i = 0; i < 6; ++i) {
    CHECK(rungs[i].name == names[i]);
    CHECK(rungs[i].checkpoint_path == files[i]);
  }
  CHECK(rungs[0].clue_source == ClueSource::kNone);
  for (int i = 1; i < 6; ++i) {
    CHECK(rungs[i].clue_source == ClueSource::kSelfGenerated);
  }
  // Feature switches accumulate monotonically up the ladder.
  bool ks[] = {false, false, false, true, true, true};
  bool acf[] = {false, false, false, false, true, true};
  bool vc[] = {false, false, false, false, false, true};
  for (int i = 0; i < 6; ++i) {
    CHECK(rungs[i].ks == ks[i]);
    CHECK(rungs[i].acf == acf[i]);
    CHECK(rungs[i].vc == vc[i]);
  }
}

TEST_CASE("rung lists survive a file round trip") {
  std::vector<LadderRung> rungs{
      {"control", "a.ckpt", ClueSource::kNone, false, false, false},
      {"mid", "b.ckpt", ClueSource::kOracle, true, false, true},
      {"full", "c.ckpt", ClueSource::kSelfGenerated, true, true, true},
  };
  write_ladder_file(rungs, "ladder_rt_tmp.jsonl");
  std::vector<LadderRung> back = read_ladder_file("ladder_rt_tmp.jsonl");
  std::remove("ladder_rt_tmp.jsonl");
  REQUIRE(back.size() == rungs.size());
  for (size_t i = 0; i < rungs.size(); ++i) {
    CHECK(back[i].name == rungs[i].name);
    CHECK(back[i].checkpoint_path == rungs[i].checkpoint_path);
    CHECK(back[i].clue_source == rungs[i].clue_source);
    CHECK(back[i].ks == rungs[i].ks);
    CHECK(back[i].acf == rungs[i].acf);
    CHECK(back[i].vc == rungs[i].vc);
  }

  CHECK_THROWS_AS(read_ladder_file("no_such_rungs.jsonl"), IoError);

  std::ofstream bad("ladder_bad_tmp.jsonl");
  bad << R"({"name":"a","checkpoint":"a.ckpt","clue_source":"none",)"
      << R"("ks":false,"acf":false,"vc":false})" << "\n";
  bad << "{not json\n";
  bad.close();
  try {
    read_ladder_file("ladder_bad_tmp.jsonl");
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  std::remove("ladder_bad_tmp.jsonl");

  std::ofstream missing("ladder_key_tmp.jsonl");
  missing << R"({"name":"a","checkpoint":"a.ckpt"})" << "\n";
  missing.close();
  CHECK_THROWS_AS(read_ladder_file("ladder_key_tmp.jsonl"), ParseError);
  std::remove("ladder_key_tmp.jsonl");

  std::ofstream empty("ladder_empty_tmp.jsonl");
  empty.close();
  CHECK_THROWS_AS(read_ladder_file("ladder_empty_tmp.jsonl"), ParseError);
  std::remove("ladder_empty_tmp.jsonl");
}

TEST_CASE("the ladder evaluates each rung against the first") {
  const EvalFixture& f = fx();
  save_checkpoint(*f.s1, "ladder_s1_tmp.ckpt");
  save_checkpoint(*f.s2, "ladder_s2_tmp.ckpt");
  std::vector<LadderRung> rungs{
      {"plain", "ladder_s1_tmp.ckpt", ClueSource::kNone, false, false, false},
      {"clued", "ladder_s1_tmp.ckpt", ClueSource::kSelfGenerated, false, false,
       false},
      {"gated", "ladder_s2_tmp.ckpt", ClueSource::kSelfGenerated, true, true,
       true},
  };
  Dataset small = Dataset::from_episodes(
      f.world, std::vector<Episode>(f.data.episodes.begin(),
                                    f.data.episodes.begin() + 4));
  std::vector<LadderRow> rows = ablation_ladder(rungs, small, pc_full());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].delta_accuracy == 0.0);
  for (const LadderRow& row : rows) {
    CHECK(row.result.count == (int)small.items.size());
    CHECK(row.delta_accuracy ==
          doctest::Approx(row.result.accuracy - rows[0].result.accuracy));
  }
  // The clue-free rung feeds no clue tokens.
  CHECK(rows[0].result.mean_clue_tokens == 0.0);

  std::string table = ladder_table(rows);
  CHECK(table.find("plain") != std::string::npos);
  CHECK(table.find("gated") != std::string::npos);

  write_ladder_jsonl(rows, "ladder_rows_tmp.jsonl");
  std::ifstream in("ladder_rows_tmp.jsonl");
  REQUIRE(in.good());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j.at("name").get<std::string>() == rows[n].rung.name);
    CHECK(j.at("accuracy").get<double>() ==
          doctest::Approx(rows[n].result.accuracy));
    CHECK(j.at("delta_accuracy").get<double>() ==
          doctest::Approx(rows[n].delta_accuracy));
    ++n;
  }
  in.close();
  std::remove("ladder_rows_tmp.jsonl");
  CHECK(n == 3);

  // A rung with an unloadable checkpoint is named in the error.
  std::vector<LadderRung> broken{
      {"ghost", "no_such_ckpt.ckpt", ClueSource::kNone, false, false, false}};
  try {
    ablation_ladder(broken, small, pc_full());
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("ghost") != std::string::npos);
  }

  // A checkpoint trained on another world is rejected.
  WorldConfig other = f.world;
  other.seed = 62;
  Model foreign(other, eval_model(), 3);
  Dataset fdata = Dataset::from_episodes(other, generate_episodes(other, 2));
  TrainConfig tc;
  tc.stage = 1;
  tc.batch_size = 1;
  tc.max_steps = 1;
  train(foreign, fdata, tc);
  save_checkpoint(foreign, "ladder_foreign_tmp.ckpt");
  std::vector<LadderRung> mismatched{
      {"foreign", "ladder_foreign_tmp.ckpt", ClueSource::kNone, false, false,
       false}};
  CHECK_THROWS_AS(ablation_ladder(mismatched, small, pc_full()), DataError);

  CHECK_THROWS_AS(ablation_ladder({}, small, pc_full()), ConfigError);
  std::remove("ladder_s1_tmp.ckpt");
  std::remove("ladder_s2_tmp.ckpt");
  std::remove("ladder_foreign_tmp.ckpt");
}

TEST_CASE("information diagnostics re-derive from raw signatures") {
  const EvalFixture& f = fx();
  IbReport rep = ib_diagnostic(*f.s1, f.data, 0.5, 3);
  CHECK(rep.samples == (int)f.data.items.size());
  // A stage-1 model has no trained gates: three channels only.
  REQUIRE(rep.channels.size() == 3);
  CHECK(rep.channels[0].channel == ClueChannel::kGroundTruth);
  CHECK(rep.channels[1].channel == ClueChannel::kSelfGenerated);
  CHECK(rep.channels[2].channel == ClueChannel::kRandom);

  // Ground-truth channel from scratch: hash each episode's clue set and
  // pair it with answer and question hashes.
  std::vector<uint64_t> xs, ys, qs;
  for (const Dataset::Item& it : f.data.items) {
    const Episode& ep = f.data.episodes[it.episode];
    xs.push_back(clue_signature(ep.events.clues));
    ys.push_back(stream_id(ep.qa[it.qa].answer));
    qs.push_back(question_signature(ep.qa[it.qa].question));
  }
  CHECK(rep.channels[0].mi_answer == plugin_mutual_information(xs, ys));
  CHECK(rep.channels[0].mi_question == plugin_mutual_information(xs, qs));
  std::vector<uint64_t> uniq = xs;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  CHECK(rep.channels[0].distinct_signatures == (int)uniq.size());

  double mi_a = rep.channels[0].mi_answer;
  double mi_q = rep.channels[0].mi_question;
  CHECK(rep.gamma == (mi_a > 1e-9 ? mi_q / mi_a : 0.0));
  for (const IbChannelReport& c : rep.channels) {
    CHECK(c.mi_answer >= 0.0);
    CHECK(c.mi_question >= 0.0);
    CHECK(c.distinct_signatures >= 1);
  }

  // Bit-deterministic.
  IbReport again = ib_diagnostic(*f.s1, f.data, 0.5, 3);
  REQUIRE(again.channels.size() == rep.channels.size());
  for (size_t i = 0; i < rep.channels.size(); ++i) {
    CHECK(again.channels[i].mi_answer == rep.channels[i].mi_answer);
    CHECK(again.channels[i].mi_question == rep.channels[i].mi_question);
  }

  std::string table = ib_table(rep);
  CHECK(table.find("ground-truth") != std::string::npos);
  CHECK(table.find("random") != std::string::npos);
  CHECK(table.find("samples") != std::string::npos);
}

TEST_CASE("the gated channel interpolates between everything and nothing") {
  const EvalFixture& f = fx();
  // Threshold zero keeps every ground-truth clue: the gated channel must
  // collapse onto the ground-truth channel exactly.
  IbReport all = ib_diagnostic(*f.s2, f.data, 0.0, 3);
  REQUIRE(all.channels.size() == 4);
  CHECK(all.channels[3].channel == ClueChannel::kGatedGroundTruth);
  CHECK(all.channels[3].mi_answer == all.channels[0].mi_answer);
  CHECK(all.channels[3].mi_question == all.channels[0].mi_question);
  CHECK(all.channels[3].distinct_signatures ==
        all.channels[0].distinct_signatures);

  // A threshold above 1 drops every clue: one constant signature, zero
  // information.
  IbReport none = ib_diagnostic(*f.s2, f.data, 1.1, 3);
  REQUIRE(none.channels.size() == 4);
  CHECK(none.channels[3].distinct_signatures == 1);
  CHECK(none.channels[3].mi_answer == 0.0);
  CHECK(none.channels[3].mi_question == 0.0);
  CHECK(ib_table(none).find("gated-ground-truth") != std::string::npos);
}

TEST_CASE("information diagnostics refuse bad inputs") {
  const EvalFixture& f = fx();
  Model fresh(f.world, eval_model(), 5);
  CHECK_THROWS_AS(ib_diagnostic(fresh, f.data, 0.5, 3), SequencingError);

  Dataset hollow;
  hollow.world = f.world;
  hollow.episodes = f.data.episodes;
  CHECK_THROWS_AS(ib_diagnostic(*f.s1, hollow, 0.5, 3), EstimationError);

  WorldConfig other = f.world;
  other.seed = 63;
  Dataset foreign =
      Dataset::from_episodes(other, generate_episodes(other, 2));
  CHECK_THROWS_AS(ib_diagnostic(*f.s1, foreign, 0.5, 3), DataError);
}

TEST_CASE("clue channel names are distinct") {
  CHECK(std::string(clue_channel_name(ClueChannel::kGroundTruth)) ==
        "ground-truth");
  CHECK(std::string(clue_channel_name(ClueChannel::kSelfGenerated)) ==
        "self-generated");
  CHECK(std::string(clue_channel_name(ClueChannel::kRandom)) == "random");
  CHECK(std::string(clue_channel_name(ClueChannel::kGatedGroundTruth)) ==
        "gated-ground-truth");
}
