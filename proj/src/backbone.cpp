#include "clueqa/backbone.hpp"

#include <cmath>

#include "clueqa/rng.hpp"

namespace clueqa {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInitScale = 0.02;
const double kSqrt2 = std::sqrt(2.0);
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * 3.14159265358979323846);

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / kSqrt2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x / kSqrt2)) +
         x * std::exp(-0.5 * x * x) * kInvSqrt2Pi;
}

void fill_gaussian(Tensor& t, uint64_t seed, double scale) {
  Rng rng(seed, t.name);
  for (int c = 0; c < t.value.cols(); ++c) {
    for (int r = 0; r < t.value.rows(); ++r) {
      t.value(r, c) = scale * rng.gaussian();
    }
  }
}

// y = g .* xhat + b column-wise; records mu and rstd per column.
void layer_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& g,
                const Eigen::VectorXd& b, Eigen::MatrixXd* y,
                Eigen::VectorXd* mu, Eigen::VectorXd* rstd) {
  int d = (int)x.rows();
  int T = (int)x.cols();
  y->resize(d, T);
  mu->resize(T);
  rstd->resize(T);
  for (int t = 0; t < T; ++t) {
    double m = x.col(t).mean();
    double var = (x.col(t).array() - m).square().mean();
    double rs = 1.0 / std::sqrt(var + kLnEps);
    (*mu)[t] = m;
    (*rstd)[t] = rs;
    y->col(t) = ((x.col(t).array() - m) * rs * g.array() + b.array()).matrix();
  }
}

// Backward of layer_norm. Accumulates dg/db, returns dx.
Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& dy,
                                    const Eigen::MatrixXd& x,
                                    const Eigen::VectorXd& mu,
                                    const Eigen::VectorXd& rstd,
                                    const Eigen::VectorXd& g,
                                    Eigen::MatrixXd* dg, Eigen::MatrixXd* db) {
  int d = (int)x.rows();
  int T = (int)x.cols();
  Eigen::MatrixXd dx(d, T);
  for (int t = 0; t < T; ++t) {
    Eigen::ArrayXd xhat = (x.col(t).array() - mu[t]) * rstd[t];
    Eigen::ArrayXd dyc = dy.col(t).array();
    dg->col(0).array() += dyc * xhat;
    db->col(0).array() += dyc;
    Eigen::ArrayXd dxhat = dyc * g.array();
    double m1 = dxhat.mean();
    double m2 = (dxhat * xhat).mean();
    dx.col(t) = (rstd[t] * (dxhat - m1 - xhat * m2)).matrix();
  }
  return dx;
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size <= 0) throw ValidationError("vocab_size must be positive");
  if (model_dim <= 0 || num_layers <= 0 || num_heads <= 0) {
    throw ValidationError("model dimensions must be positive");
  }
  if (model_dim % num_heads != 0) {
    throw ValidationError("model_dim must be divisible by num_heads");
  }
  if (max_sequence_length <= 0) {
    throw ValidationError("max_sequence_length must be positive");
  }
  if (max_frames <= 0) throw ValidationError("max_frames must be positive");
  if (feature_dim <= 0) throw ValidationError("feature_dim must be positive");
  if (acf_hidden < 0) throw ValidationError("acf_hidden must be non-negative");
}

Backbone::Backbone(ParamStore& store, const ModelConfig& cfg,
                   uint64_t init_seed)
    : store_(store), cfg_(cfg) {
  cfg.validate();
  int d = cfg.model_dim;
  auto gauss = [&](const std::string& name, int rows, int cols, double scale,
                   bool trainable = true) {
    Tensor& t = store_.add(name, rows, cols, trainable);
    fill_gaussian(t, init_seed, scale);
  };
  auto zeros = [&](const std::string& name, int rows, int cols,
                   bool trainable = true) -> Tensor& {
    return store_.add(name, rows, cols, trainable);
  };
  auto ones = [&](const std::string& name, int rows) {
    Tensor& t = store_.add(name, rows, 1, true);
    t.value.setOnes();
  };

  gauss("embed.token", d, cfg.vocab_size, kInitScale);
  gauss("embed.pos", d, cfg.max_sequence_length, kInitScale);
  gauss("embed.slot", d, cfg.max_frames, kInitScale);
  // Frozen stand-in for a pre-trained visual encoder: a seeded random
  // projection (bias kept at zero so the map is linear).
  gauss("visual.W", d, cfg.feature_dim, 1.0 / std::sqrt((double)cfg.feature_dim),
        false);
  zeros("visual.b", d, 1, false);

  for (int l = 0; l < cfg.num_layers; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    ones(p + "ln1.g", d);
    zeros(p + "ln1.b", d, 1);
    gauss(p + "attn.wq", d, d, kInitScale);
    gauss(p + "attn.wk", d, d, kInitScale);
    gauss(p + "attn.wv", d, d, kInitScale);
    gauss(p + "attn.wo", d, d, kInitScale);
    zeros(p + "attn.bq", d, 1);
    zeros(p + "attn.bk", d, 1);
    zeros(p + "attn.bv", d, 1);
    zeros(p + "attn.bo", d, 1);
    ones(p + "ln2.g", d);
    zeros(p + "ln2.b", d, 1);
    gauss(p + "mlp.w1", 4 * d, d, kInitScale);
    zeros(p + "mlp.b1", 4 * d, 1);
    gauss(p + "mlp.w2", d, 4 * d, kInitScale);
    zeros(p + "mlp.b2", d, 1);
  }
  ones("final_ln.g", d);
  zeros("final_ln.b", d, 1);
  gauss("head.W", cfg.vocab_size, d, kInitScale);
  zeros("head.b", cfg.vocab_size, 1);
}

Eigen::MatrixXd Backbone::encode_frames(const Eigen::MatrixXd& features) const {
  if (features.rows() != cfg_.feature_dim) {
    throw ContractError("frame features have width " +
                        std::to_string(features.rows()) + ", expected " +
                        std::to_string(cfg_.feature_dim));
  }
  const Eigen::MatrixXd& W = store_.at("visual.W").value;
  const Eigen::MatrixXd& b = store_.at("visual.b").value;
  return (W * features).colwise() + Eigen::VectorXd(b.col(0));
}

void Backbone::embed_column(int id, int slot, double scale, int position,
                            const Eigen::MatrixXd& visual,
                            Eigen::VectorXd* out) const {
  const Eigen::MatrixXd& tok = store_.at("embed.token").value;
  const Eigen::MatrixXd& pos = store_.at("embed.pos").value;
  const Eigen::MatrixXd& slot_emb = store_.at("embed.slot").value;
  if (position >= cfg_.max_sequence_length) {
    throw ContractError("position beyond max_sequence_length");
  }
  if (slot >= 0) {
    if (slot >= (int)visual.cols()) {
      throw ContractError("visual slot beyond embedding matrix");
    }
    *out = scale * visual.col(slot) + pos.col(position) + slot_emb.col(slot);
  } else {
    *out = scale * tok.col(id) + pos.col(position);
  }
}

ForwardPass Backbone::forward(const TokenSequence& seq,
                              const Eigen::MatrixXd& visual,
                              bool with_cache) const {
  int T = seq.size();
  if (T == 0) throw ContractError("empty sequence");
  if (T > cfg_.max_sequence_length) {
    throw ContractError("sequence length " + std::to_string(T) +
                        " exceeds max_sequence_length " +
                        std::to_string(cfg_.max_sequence_length));
  }
  seq.check(cfg_.vocab_size, (int)visual.cols());
  int d = cfg_.model_dim;
  int H = cfg_.num_heads;
  int dh = cfg_.head_dim();
  double inv_sqrt_dh = 1.0 / std::sqrt((double)dh);

  ForwardPass fp;
  fp.with_cache = with_cache;
  const Eigen::MatrixXd& tok = store_.at("embed.token").value;
  const Eigen::MatrixXd& pos = store_.at("embed.pos").value;
  const Eigen::MatrixXd& slot_emb = store_.at("embed.slot").value;

  Eigen::MatrixXd content(d, T);
  Eigen::MatrixXd x(d, T);
  for (int t = 0; t < T; ++t) {
    content.col(t) =
        seq.slots[t] >= 0 ? visual.col(seq.slots[t]) : tok.col(seq.ids[t]);
    x.col(t) = seq.scales[t] * content.col(t) + pos.col(t);
    if (seq.slots[t] >= 0) x.col(t) += slot_emb.col(seq.slots[t]);
  }
  if (with_cache) {
    fp.content = content;
    fp.x0 = x;
  }

  if (with_cache) fp.layers.resize(cfg_.num_layers);
  for (int l = 0; l < cfg_.num_layers; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    LayerCache local;
    LayerCache& c = with_cache ? fp.layers[l] : local;
    c.x = x;

    layer_norm(c.x, store_.at(p + "ln1.g").value.col(0),
               store_.at(p + "ln1.b").value.col(0), &c.n1, &c.mu1, &c.rstd1);
    c.q.noalias() = store_.at(p + "attn.wq").value * c.n1;
    c.q.colwise() += Eigen::VectorXd(store_.at(p + "attn.bq").value.col(0));
    c.k.noalias() = store_.at(p + "attn.wk").value * c.n1;
    c.k.colwise() += Eigen::VectorXd(store_.at(p + "attn.bk").value.col(0));
    c.v.noalias() = store_.at(p + "attn.wv").value * c.n1;
    c.v.colwise() += Eigen::VectorXd(store_.at(p + "attn.bv").value.col(0));

    c.attn_concat.resize(d, T);
    c.probs.assign(H, Eigen::MatrixXd());
    for (int h = 0; h < H; ++h) {
      auto qh = c.q.middleRows(h * dh, dh);
      auto kh = c.k.middleRows(h * dh, dh);
      auto vh = c.v.middleRows(h * dh, dh);
      Eigen::MatrixXd scores = (qh.transpose() * kh) * inv_sqrt_dh;  // T x T
      Eigen::MatrixXd& probs = c.probs[h];
      probs = Eigen::MatrixXd::Zero(T, T);
      for (int i = 0; i < T; ++i) {
        double mx = scores.row(i).head(i + 1).maxCoeff();
        double denom = 0.0;
        for (int j = 0; j <= i; ++j) {
          double e = std::exp(scores(i, j) - mx);
          probs(i, j) = e;
          denom += e;
        }
        probs.row(i).head(i + 1) /= denom;
      }
      c.attn_concat.middleRows(h * dh, dh).noalias() = vh * probs.transpose();
    }
    Eigen::MatrixXd proj =
        store_.at(p + "attn.wo").value * c.attn_concat;
    proj.colwise() += Eigen::VectorXd(store_.at(p + "attn.bo").value.col(0));
    c.x1 = c.x + proj;

    layer_norm(c.x1, store_.at(p + "ln2.g").value.col(0),
               store_.at(p + "ln2.b").value.col(0), &c.n2, &c.mu2, &c.rstd2);
    c.z.noalias() = store_.at(p + "mlp.w1").value * c.n2;
    c.z.colwise() += Eigen::VectorXd(store_.at(p + "mlp.b1").value.col(0));
    c.h = c.z.unaryExpr([](double v) { return gelu(v); });
    Eigen::MatrixXd m = store_.at(p + "mlp.w2").value * c.h;
    m.colwise() += Eigen::VectorXd(store_.at(p + "mlp.b2").value.col(0));
    x = c.x1 + m;
  }

  fp.x_final = x;
  layer_norm(x, store_.at("final_ln.g").value.col(0),
             store_.at("final_ln.b").value.col(0), &fp.final_hidden, &fp.muf,
             &fp.rstdf);
  fp.logits.noalias() = store_.at("head.W").value * fp.final_hidden;
  fp.logits.colwise() += Eigen::VectorXd(store_.at("head.b").value.col(0));
  return fp;
}

double Backbone::span_loss(const TokenSequence& seq, const ForwardPass& fp,
                           TokenSpan span) const {
  if (span.begin < 1 || span.end > seq.size() || span.begin >= span.end) {
    throw ContractError("bad loss span");
  }
  double total = 0.0;
  for (int t = span.begin; t < span.end; ++t) {
    const auto col = fp.logits.col(t - 1);
    double mx = col.maxCoeff();
    double lse = std::log((col.array() - mx).exp().sum()) + mx;
    total += lse - col[seq.ids[t]];
  }
  return total / span.length();
}

Eigen::MatrixXd Backbone::span_loss_grad(const TokenSequence& seq,
                                         const ForwardPass& fp,
                                         TokenSpan span) const {
  if (span.begin < 1 || span.end > seq.size() || span.begin >= span.end) {
    throw ContractError("bad loss span");
  }
  Eigen::MatrixXd dlogits =
      Eigen::MatrixXd::Zero(fp.logits.rows(), fp.logits.cols());
  double w = 1.0 / span.length();
  for (int t = span.begin; t < span.end; ++t) {
    const auto col = fp.logits.col(t - 1);
    double mx = col.maxCoeff();
    Eigen::ArrayXd p = (col.array() - mx).exp();
    p /= p.sum();
    dlogits.col(t - 1) = (w * p).matrix();
    dlogits(seq.ids[t], t - 1) -= w;
  }
  return dlogits;
}

std::vector<double> Backbone::backward(const TokenSequence& seq,
                                       const Eigen::MatrixXd& visual,
                                       const ForwardPass& fp,
                                       const Eigen::MatrixXd& dlogits) {
  if (!fp.with_cache) {
    throw ContractError("backward needs a forward pass with caches");
  }
  int T = seq.size();
  int d = cfg_.model_dim;
  int H = cfg_.num_heads;
  int dh = cfg_.head_dim();
  double inv_sqrt_dh = 1.0 / std::sqrt((double)dh);

  // Output head.
  Tensor& headW = store_.at("head.W");
  Tensor& headB = store_.at("head.b");
  headW.grad.noalias() += dlogits * fp.final_hidden.transpose();
  headB.grad.col(0) += dlogits.rowwise().sum();
  Eigen::MatrixXd dnf = headW.value.transpose() * dlogits;

  Eigen::MatrixXd dx = layer_norm_backward(
      dnf, fp.x_final, fp.muf, fp.rstdf, store_.at("final_ln.g").value.col(0),
      &store_.at("final_ln.g").grad, &store_.at("final_ln.b").grad);

  for (int l = cfg_.num_layers - 1; l >= 0; --l) {
    std::string p = "layer" + std::to_string(l) + ".";
    const LayerCache& c = fp.layers[l];

    // MLP branch: x2 = x1 + W2·gelu(W1·n2 + b1) + b2.
    Eigen::MatrixXd dm = dx;  // gradient hitting the MLP output
    Tensor& w2 = store_.at(p + "mlp.w2");
    Tensor& b2 = store_.at(p + "mlp.b2");
    w2.grad.noalias() += dm * c.h.transpose();
    b2.grad.col(0) += dm.rowwise().sum();
    Eigen::MatrixXd dh_act = w2.value.transpose() * dm;
    Eigen::MatrixXd dz =
        dh_act.cwiseProduct(c.z.unaryExpr([](double v) { return gelu_grad(v); }));
    Tensor& w1 = store_.at(p + "mlp.w1");
    Tensor& b1 = store_.at(p + "mlp.b1");
    w1.grad.noalias() += dz * c.n2.transpose();
    b1.grad.col(0) += dz.rowwise().sum();
    Eigen::MatrixXd dn2 = w1.value.transpose() * dz;
    Eigen::MatrixXd dx1 =
        dx + layer_norm_backward(dn2, c.x1, c.mu2, c.rstd2,
                                 store_.at(p + "ln2.g").value.col(0),
                                 &store_.at(p + "ln2.g").grad,
                                 &store_.at(p + "ln2.b").grad);

    // Attention branch: x1 = x + Wo·concat(heads) + bo.
    Tensor& wo = store_.at(p + "attn.wo");
    Tensor& bo = store_.at(p + "attn.bo");
    wo.grad.noalias() += dx1 * c.attn_concat.transpose();
    bo.grad.col(0) += dx1.rowwise().sum();
    Eigen::MatrixXd dconcat = wo.value.transpose() * dx1;

    Eigen::MatrixXd dq(d, T), dk(d, T), dv(d, T);
    for (int h = 0; h < H; ++h) {
      auto qh = c.q.middleRows(h * dh, dh);
      auto kh = c.k.middleRows(h * dh, dh);
      auto vh = c.v.middleRows(h * dh, dh);
      auto doh = dconcat.middleRows(h * dh, dh);
      const Eigen::MatrixXd& probs = c.probs[h];

      dv.middleRows(h * dh, dh).noalias() = doh * probs;
      Eigen::MatrixXd dprobs = doh.transpose() * vh;  // T x T
      Eigen::MatrixXd dscores = Eigen::MatrixXd::Zero(T, T);
      for (int i = 0; i < T; ++i) {
        double dot = 0.0;
        for (int j = 0; j <= i; ++j) dot += dprobs(i, j) * probs(i, j);
        for (int j = 0; j <= i; ++j) {
          dscores(i, j) = probs(i, j) * (dprobs(i, j) - dot) * inv_sqrt_dh;
        }
      }
      dq.middleRows(h * dh, dh).noalias() = kh * dscores.transpose();
      dk.middleRows(h * dh, dh).noalias() = qh * dscores;
    }

    Eigen::MatrixXd dn1 = Eigen::MatrixXd::Zero(d, T);
    auto qkv_back = [&](const char* wname, const char* bname,
                        const Eigen::MatrixXd& dout) {
      Tensor& w = store_.at(p + wname);
      Tensor& b = store_.at(p + bname);
      w.grad.noalias() += dout * c.n1.transpose();
      b.grad.col(0) += dout.rowwise().sum();
      dn1.noalias() += w.value.transpose() * dout;
    };
    qkv_back("attn.wq", "attn.bq", dq);
    qkv_back("attn.wk", "attn.bk", dk);
    qkv_back("attn.wv", "attn.bv", dv);

    dx = dx1 + layer_norm_backward(dn1, c.x, c.mu1, c.rstd1,
                                   store_.at(p + "ln1.g").value.col(0),
                                   &store_.at(p + "ln1.g").grad,
                                   &store_.at(p + "ln1.b").grad);
  }

  // Embeddings. dx is now d(loss)/d(x0).
  Tensor& tok = store_.at("embed.token");
  Tensor& pos = store_.at("embed.pos");
  Tensor& slot_emb = store_.at("embed.slot");
  std::vector<double> scale_grads(T, 0.0);
  for (int t = 0; t < T; ++t) {
    scale_grads[t] = fp.content.col(t).dot(dx.col(t));
    pos.grad.col(t) += dx.col(t);
    if (seq.slots[t] >= 0) {
      slot_emb.grad.col(seq.slots[t]) += dx.col(t);
      // content is a frozen visual embedding; no parameter grad flows there.
    } else {
      tok.grad.col(seq.ids[t]) += seq.scales[t] * dx.col(t);
    }
  }
  (void)visual;
  return scale_grads;
}

Eigen::VectorXd Backbone::span_representation(const ForwardPass& fp,
                                              TokenSpan span) {
  if (span.begin < 0 || span.end > fp.final_hidden.cols() ||
      span.begin >= span.end) {
    throw ContractError("bad representation span");
  }
  return fp.final_hidden.middleCols(span.begin, span.length()).rowwise().mean();
}

struct Backbone::DecodeState {
  std::vector<Eigen::MatrixXd> k, v;
  int len = 0;
};

Eigen::VectorXd Backbone::decode_step(DecodeState& st,
                                      const Eigen::VectorXd& x0) const {
  int d = cfg_.model_dim;
  int H = cfg_.num_heads;
  int dh = cfg_.head_dim();
  double inv_sqrt_dh = 1.0 / std::sqrt((double)dh);
  int t = st.len;

  Eigen::VectorXd x = x0;
  for (int l = 0; l < cfg_.num_layers; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    const Eigen::VectorXd g1 = store_.at(p + "ln1.g").value.col(0);
    const Eigen::VectorXd b1v = store_.at(p + "ln1.b").value.col(0);
    double m = x.mean();
    double var = (x.array() - m).square().mean();
    double rs = 1.0 / std::sqrt(var + kLnEps);
    Eigen::VectorXd n1 =
        (((x.array() - m) * rs) * g1.array() + b1v.array()).matrix();

    Eigen::VectorXd q = store_.at(p + "attn.wq").value * n1 +
                        store_.at(p + "attn.bq").value.col(0);
    st.k[l].col(t) = store_.at(p + "attn.wk").value * n1 +
                     store_.at(p + "attn.bk").value.col(0);
    st.v[l].col(t) = store_.at(p + "attn.wv").value * n1 +
                     store_.at(p + "attn.bv").value.col(0);

    Eigen::VectorXd attn(d);
    for (int h = 0; h < H; ++h) {
      auto qh = q.segment(h * dh, dh);
      auto kh = st.k[l].middleRows(h * dh, dh);
      auto vh = st.v[l].middleRows(h * dh, dh);
      Eigen::VectorXd scores =
          (kh.leftCols(t + 1).transpose() * qh) * inv_sqrt_dh;
      double mx = scores.maxCoeff();
      Eigen::ArrayXd pr = (scores.array() - mx).exp();
      pr /= pr.sum();
      attn.segment(h * dh, dh).noalias() = vh.leftCols(t + 1) * pr.matrix();
    }
    x += store_.at(p + "attn.wo").value * attn +
         store_.at(p + "attn.bo").value.col(0);

    const Eigen::VectorXd g2 = store_.at(p + "ln2.g").value.col(0);
    const Eigen::VectorXd b2v = store_.at(p + "ln2.b").value.col(0);
    m = x.mean();
    var = (x.array() - m).square().mean();
    rs = 1.0 / std::sqrt(var + kLnEps);
    Eigen::VectorXd n2 =
        (((x.array() - m) * rs) * g2.array() + b2v.array()).matrix();
    Eigen::VectorXd z = store_.at(p + "mlp.w1").value * n2 +
                        store_.at(p + "mlp.b1").value.col(0);
    Eigen::VectorXd h_act = z.unaryExpr([](double v) { return gelu(v); });
    x += store_.at(p + "mlp.w2").value * h_act +
         store_.at(p + "mlp.b2").value.col(0);
  }

  const Eigen::VectorXd gf = store_.at("final_ln.g").value.col(0);
  const Eigen::VectorXd bf = store_.at("final_ln.b").value.col(0);
  double m = x.mean();
  double var = (x.array() - m).square().mean();
  double rs = 1.0 / std::sqrt(var + kLnEps);
  Eigen::VectorXd nf =
      (((x.array() - m) * rs) * gf.array() + bf.array()).matrix();
  st.len = t + 1;
  return store_.at("head.W").value * nf + store_.at("head.b").value.col(0);
}

Eigen::VectorXd Backbone::next_logits(const TokenSequence& prefix,
                                      const Eigen::MatrixXd& visual) const {
  if (prefix.size() == 0) throw ContractError("empty prefix");
  if (prefix.size() > cfg_.max_sequence_length) {
    throw ContractError("prefix exceeds max_sequence_length");
  }
  prefix.check(cfg_.vocab_size, (int)visual.cols());
  DecodeState st;
  st.k.assign(cfg_.num_layers,
              Eigen::MatrixXd(cfg_.model_dim, cfg_.max_sequence_length));
  st.v.assign(cfg_.num_layers,
              Eigen::MatrixXd(cfg_.model_dim, cfg_.max_sequence_length));
  Eigen::VectorXd logits;
  Eigen::VectorXd x0(cfg_.model_dim);
  for (int t = 0; t < prefix.size(); ++t) {
    embed_column(prefix.ids[t], prefix.slots[t], prefix.scales[t], t, visual,
                 &x0);
    logits = decode_step(st, x0);
  }
  return logits;
}

std::vector<int> Backbone::generate(const TokenSequence& prefix,
                                    const Eigen::MatrixXd& visual,
                                    int stop_token, int max_new) const {
  if (prefix.size() == 0) throw ContractError("empty prefix");
  prefix.check(cfg_.vocab_size, (int)visual.cols());
  DecodeState st;
  st.k.assign(cfg_.num_layers,
              Eigen::MatrixXd(cfg_.model_dim, cfg_.max_sequence_length));
  st.v.assign(cfg_.num_layers,
              Eigen::MatrixXd(cfg_.model_dim, cfg_.max_sequence_length));
  Eigen::VectorXd logits;
  Eigen::VectorXd x0(cfg_.model_dim);
  for (int t = 0; t < prefix.size(); ++t) {
    embed_column(prefix.ids[t], prefix.slots[t], prefix.scales[t], t, visual,
                 &x0);
    logits = decode_step(st, x0);
  }
  std::vector<int> out;
  for (int n = 0; n < max_new; ++n) {
    if (st.len >= cfg_.max_sequence_length) break;  // truncated
    int id = argmax_token(logits);
    out.push_back(id);
    if (id == stop_token) break;
    embed_column(id, -1, 1.0, st.len, visual, &x0);
    logits = decode_step(st, x0);
  }
  return out;
}

int argmax_token(const Eigen::VectorXd& logits) {
  int best = 0;
  for (int i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

}  // namespace clueqa
