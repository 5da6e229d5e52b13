#include <cmath>
#include <vector>

#include "clueqa/backbone.hpp"
#include "clueqa/rng.hpp"
#include "doctest.h"

using namespace clueqa;

namespace {

ModelConfig tiny_cfg() {
  ModelConfig cfg;
  cfg.vocab_size = 13;
  cfg.model_dim = 16;
  cfg.num_layers = 2;
  cfg.num_heads = 2;
  cfg.max_sequence_length = 20;
  cfg.max_frames = 4;
  cfg.feature_dim = 6;
  return cfg;
}

Eigen::MatrixXd random_visual(const ModelConfig& cfg, int slots, uint64_t seed) {
  Rng rng(seed, "vis");
  Eigen::MatrixXd m(cfg.model_dim, slots);
  for (int j = 0; j < slots; ++j)
    for (int i = 0; i < cfg.model_dim; ++i) m(i, j) = 0.5 * rng.gaussian();
  return m;
}

// A 12-position sequence mixing visual slots, scaled content positions and
// plain tokens, with a trailing span of "predictable" ids.
TokenSequence mixed_sequence() {
  TokenSequence seq;
  seq.push(2, SegmentTag::kVisual);
  for (int i = 0; i < 4; ++i) seq.push(0, SegmentTag::kVisual, i);
  seq.push(3, SegmentTag::kPrompt);
  seq.push(7, SegmentTag::kClue, -1, 0.5);
  seq.push(9, SegmentTag::kClue, -1, 0.25);
  seq.push(5, SegmentTag::kQuestion);
  seq.push(12, SegmentTag::kQuestion);
  seq.push(6, SegmentTag::kAnswer);
  seq.push(11, SegmentTag::kAnswer);
  return seq;
}

// Numerically stable cross-entropy of the span, recomputed from raw logits
// without touching span_loss internals.
double reference_span_loss(const TokenSequence& seq, const ForwardPass& fp,
                           TokenSpan span) {
  double total = 0.0;
  for (int p = span.begin; p < span.end; ++p) {
    Eigen::VectorXd col = fp.logits.col(p - 1);
    double mx = col.maxCoeff();
    double lse = std::log((col.array() - mx).exp().sum()) + mx;
    total += lse - col[seq.ids[p]];
  }
  return total / span.length();
}

}  // namespace

TEST_CASE("initialization is seed-deterministic") {
  ModelConfig cfg = tiny_cfg();
  ParamStore s1, s2, s3;
  Backbone b1(s1, cfg, 5);
  Backbone b2(s2, cfg, 5);
  Backbone b3(s3, cfg, 6);
  REQUIRE(s1.tensors().size() == s2.tensors().size());
  bool any_diff = false;
  for (size_t i = 0; i < s1.tensors().size(); ++i) {
    CHECK(s1.tensors()[i].name == s2.tensors()[i].name);
    CHECK(s1.tensors()[i].value == s2.tensors()[i].value);
    if (s1.tensors()[i].value != s3.tensors()[i].value) any_diff = true;
  }
  CHECK(any_diff);  // a different seed changes the weights
  // The visual projection is frozen.
  CHECK_FALSE(s1.at("visual.W").trainable);
}

TEST_CASE("config validation rejects bad shapes") {
  ModelConfig cfg = tiny_cfg();
  cfg.num_heads = 3;  // 16 % 3 != 0
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = tiny_cfg();
  cfg.vocab_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = tiny_cfg();
  cfg.acf_hidden = -1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = tiny_cfg();
  cfg.acf_hidden = 0;
  CHECK(cfg.hidden_dim() == cfg.model_dim);
  cfg.acf_hidden = 5;
  CHECK(cfg.hidden_dim() == 5);
}

TEST_CASE("encode_frames applies the frozen linear map") {
  ModelConfig cfg = tiny_cfg();
  ParamStore store;
  Backbone bb(store, cfg, 9);
  Eigen::MatrixXd x(cfg.feature_dim, 3);
  Rng rng(4, "feat");
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < cfg.feature_dim; ++i) x(i, j) = rng.gaussian();
  Eigen::MatrixXd got = bb.encode_frames(x);
  Eigen::MatrixXd expect =
      store.at("visual.W").value * x +
      store.at("visual.b").value * Eigen::RowVectorXd::Ones(3);
  CHECK((got - expect).cwiseAbs().maxCoeff() == 0.0);
  Eigen::MatrixXd bad(cfg.feature_dim + 1, 3);
  bad.setZero();
  CHECK_THROWS_AS(bb.encode_frames(bad), ContractError);
}

TEST_CASE("forward logits are deterministic and cache-complete") {
  ModelConfig cfg = tiny_cfg();
  ParamStore store;
  Backbone bb(store, cfg, 11);
  TokenSequence seq = mixed_sequence();
  Eigen::MatrixXd vis = random_visual(cfg, 4, 3);
  ForwardPass a = bb.forward(seq, vis, true);
  ForwardPass b = bb.forward(seq, vis, false);
  CHECK(a.logits == b.logits);
  CHECK(a.logits.rows() == cfg.vocab_size);
  CHECK(a.logits.cols() == seq.size());
  CHECK(a.with_cache);
  CHECK((int)a.layers.size() == cfg.num_layers);
  CHECK_FALSE(b.with_cache);
}

TEST_CASE("span_loss equals a direct cross-entropy recomputation") {
  ModelConfig cfg = tiny_cfg();
  ParamStore store;
  Backbone bb(store, cfg, 13);
  TokenSequence seq = mixed_sequence();
  Eigen::MatrixXd vis = random_visual(cfg, 4, 17);
  ForwardPass fp = bb.forward(seq, vis, false);
  for (TokenSpan span : {TokenSpan{9, 12}, TokenSpan{1, 12}, TokenSpan{11, 12}}) {
    double got = bb.span_loss(seq, fp, span);
    double expect = reference_span_loss(seq, fp, span);
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK_THROWS_AS(bb.span_loss(seq, fp, TokenSpan{0, 3}), ContractError);
  CHECK_THROWS_AS(bb.span_loss(seq, fp, TokenSpan{5, 13}), ContractError);
  CHECK_THROWS_AS(bb.span_loss(seq, fp, TokenSpan{5, 5}), ContractError);
}

TEST_CASE("causal masking: a span's loss ignores everything after it") {
  ModelConfig cfg = tiny_cfg();
  ParamStore store;
  Backbone bb(store, cfg, 15);
  TokenSequence seq = mixed_sequence();
  Eigen::MatrixXd vis = random_visual(cfg, 4, 19);
  TokenSpan span{6, 9};
  double base = bb.span_loss(seq, bb.forward(seq, vis, false), span);
  TokenSequence longer = seq;
  longer.push(4, SegmentTag::kAnswer);
  longer.push(10, SegmentTag::kAnswer);
  longer.push(1, SegmentTag::kAnswer);
  double extended = bb.span_loss(longer, bb.forward(longer, vis, false), span);
  CHECK(base == extended);  // bit-identical: later tokens cannot leak back
}

TEST_CASE("gradients match central finite differences everywhere") {
  ModelConfig cfg = tiny_cfg();
  ParamStore store;
  Backbone bb(store, cfg, 21);
  TokenSequence seq = mixed_sequence();
  Eigen::MatrixXd vis = random_visual(cfg, 4, 23);
  TokenSpan span{6, 12};

  auto loss_now = [&]() {
    return bb.span_loss(seq, bb.forward(seq, vis, false), span);
  };

  ForwardPass fp = bb.forward(seq, vis, true);
  Eigen::MatrixXd dlogits = bb.span_loss_grad(seq, fp, span);
  store.zero_grads();
  std::vector<double> scale_grads = bb.backward(seq, vis, fp, dlogits);

  double worst = 0.0;
  int checked = 0;
  for (Tensor& t : store.tensors()) {
    if (!t.trainable) continue;
    for (int j = 0; j < t.value.cols(); ++j) {
      for (int i = 0; i < t.value.rows(); ++i) {
        double saved = t.value(i, j);
        double h = 1e-5 * std::max(1.0, std::abs(saved));
        t.value(i, j) = saved + h;
        double up = loss_now();
        t.value(i, j) = saved - h;
        double down = loss_now();
        t.value(i, j) = saved;
        double fd = (up - down) / (2 * h);
        double an = t.grad(i, j);
        double err = std::abs(fd - an) / std::max({1e-6, std::abs(fd), std::abs(an)});
        worst = std::max(worst, err);
        ++checked;
      }
    }
  }
  CHECK(checked > 5000);  // the sweep really covered the full parameter set
  CHECK(worst < 1e-4);

  // Scale hook gradient, same criterion.
  REQUIRE((int)scale_grads.size() == seq.size());
  double worst_scale = 0.0;
  for (int p = 0; p < seq.size(); ++p) {
    double saved = seq.scales[p];
    double h = 1e-6;
    seq.scales[p] = saved + h;
    double up = loss_now();
    seq.scales[p] = saved - h;
    double down = loss_now();
    seq.scales[p] = saved;
    double fd = (up - down) / (2 * h);
    double err = std::abs(fd - scale_grads[p]) /
                 std::max({1e-6, std::abs(fd), std::abs(scale_grads[p])});
    worst_scale = std::max(worst_scale, err);
  }
  CHECK(worst_scale < 1e-4);
}

TEST_CASE("span_representation is the mean of final hidden columns") {
  ModelConfig cfg = tiny_cfg();
  ParamStore store;
  Backbone bb(store, cfg, 25);
  TokenSequence seq = mixed_sequence();
  ForwardPass fp = bb.forward(seq, random_visual(cfg, 4, 27), false);
  TokenSpan span{3, 7};
  Eigen::VectorXd got = Backbone::span_representation(fp, span);
  Eigen::VectorXd expect = Eigen::VectorXd::Zero(cfg.model_dim);
  for (int p = span.begin; p < span.end; ++p) expect += fp.final_hidden.col(p);
  expect /= span.length();
  CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("argmax_token breaks ties toward the lowest id") {
  Eigen::VectorXd v(4);
  v << 1.0, 3.0, 3.0, 2.0;
  CHECK(argmax_token(v) == 1);
  v << 5.0, 5.0, 5.0, 5.0;
  CHECK(argmax_token(v) == 0);
}

TEST_CASE("kv-cache decoding agrees with full re-forwarding") {
  ModelConfig cfg = tiny_cfg();
  ParamStore store;
  Backbone bb(store, cfg, 31);
  Eigen::MatrixXd vis = random_visual(cfg, 4, 33);

  TokenSequence prefix;
  prefix.push(2, SegmentTag::kVisual);
  for (int i = 0; i < 4; ++i) prefix.push(0, SegmentTag::kVisual, i);
  prefix.push(3, SegmentTag::kPrompt);
  prefix.push(7, SegmentTag::kPrompt);

  // next_logits equals the last column of a full forward pass.
  Eigen::VectorXd nl = bb.next_logits(prefix, vis);
  ForwardPass fp = bb.forward(prefix, vis, false);
  CHECK((nl - fp.logits.col(prefix.size() - 1)).cwiseAbs().maxCoeff() < 1e-9);

  // generate() reproduces a step-by-step argmax loop over full forwards.
  int max_new = 8;
  std::vector<int> fast = bb.generate(prefix, vis, Vocabulary::kEos, max_new);
  TokenSequence grow = prefix;
  std::vector<int> slow;
  for (int n = 0; n < max_new; ++n) {
    ForwardPass g = bb.forward(grow, vis, false);
    int id = argmax_token(g.logits.col(grow.size() - 1));
    slow.push_back(id);
    if (id == Vocabulary::kEos) break;
    grow.push(id, SegmentTag::kClue);
  }
  CHECK(fast == slow);
}

TEST_CASE("generation truncates at the positional capacity") {
  ModelConfig cfg = tiny_cfg();
  cfg.max_sequence_length = 8;
  ParamStore store;
  Backbone bb(store, cfg, 35);
  TokenSequence prefix;
  for (int i = 0; i < 6; ++i) prefix.push(3, SegmentTag::kPrompt);
  Eigen::MatrixXd vis(cfg.model_dim, 1);
  vis.setZero();
  std::vector<int> out = bb.generate(prefix, vis, -1, 100);
  CHECK((int)out.size() <= 2);  // only 2 positions remain past the prefix
  CHECK_THROWS_AS(bb.generate(TokenSequence{}, vis, 1, 4), ContractError);
}
