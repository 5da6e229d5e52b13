#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "clueqa/params.hpp"
#include "clueqa/tokens.hpp"

namespace clueqa {

struct ModelConfig {
  int vocab_size = 0;   // filled from the vocabulary
  int model_dim = 128;
  int num_layers = 4;
  int num_heads = 4;
  int max_sequence_length = 256;
  int max_frames = 24;   // frame slots addressable by clue spans
  int feature_dim = 24;  // input width of the frozen visual projection
  int acf_hidden = 0;    // 0 = use model_dim

  int head_dim() const { return model_dim / num_heads; }
  int hidden_dim() const { return acf_hidden > 0 ? acf_hidden : model_dim; }
  void validate() const;  // throws ValidationError
  bool operator==(const ModelConfig&) const = default;
};

// Activation cache of one decoder block, kept for the backward pass.
struct LayerCache {
  Eigen::MatrixXd x;                       // block input (dim x T)
  Eigen::MatrixXd n1;                      // post first layer-norm
  Eigen::VectorXd mu1, rstd1;              // layer-norm stats per position
  Eigen::MatrixXd q, k, v;                 // attention projections
  std::vector<Eigen::MatrixXd> probs;      // per-head softmax matrices (T x T)
  Eigen::MatrixXd attn_concat;             // heads re-concatenated (dim x T)
  Eigen::MatrixXd x1;                      // post attention residual
  Eigen::MatrixXd n2;
  Eigen::VectorXd mu2, rstd2;
  Eigen::MatrixXd z;                       // MLP pre-activation (4*dim x T)
  Eigen::MatrixXd h;                       // MLP activation
};

struct ForwardPass {
  Eigen::MatrixXd content;      // content embeddings before scaling (dim x T)
  Eigen::MatrixXd x0;           // embedded input
  std::vector<LayerCache> layers;
  Eigen::MatrixXd x_final;      // last block output, pre final layer-norm
  Eigen::MatrixXd final_hidden; // post final layer-norm (dim x T)
  Eigen::VectorXd muf, rstdf;
  Eigen::MatrixXd logits;       // vocab x T
  bool with_cache = false;
};

// Decoder-only transformer over the token sequences of tokens.hpp: learned
// token/position/slot embeddings, pre-norm blocks (causal multi-head
// attention + GELU MLP), weight-tied-free output head. All math is double
// precision with handwritten backward passes. The visual pathway is a frozen
// seeded linear projection standing in for a pre-trained encoder.
class Backbone {
 public:
  Backbone(ParamStore& store, const ModelConfig& cfg, uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }

  // Projects raw frame features (feature_dim x n) into model space
  // (model_dim x n) with the frozen parameters. Pure and seed-stable.
  Eigen::MatrixXd encode_frames(const Eigen::MatrixXd& features) const;

  // Full forward over a sequence. visual: model_dim x num_slots, addressed
  // by TokenSequence::slots. with_cache=false skips activation retention
  // (inference-only pass).
  ForwardPass forward(const TokenSequence& seq, const Eigen::MatrixXd& visual,
                      bool with_cache) const;

  // Mean cross-entropy of predicting seq tokens over [span.begin, span.end)
  // from the preceding position's logits. Requires span.begin >= 1.
  double span_loss(const TokenSequence& seq, const ForwardPass& fp,
                   TokenSpan span) const;

  // d(span_loss)/d(logits); zero outside the span's predicting positions.
  Eigen::MatrixXd span_loss_grad(const TokenSequence& seq,
                                 const ForwardPass& fp, TokenSpan span) const;

  // Backpropagates dlogits through the network, accumulating parameter
  // gradients. Returns d(loss)/d(scales[p]) for every position — the hook
  // through which clue gates receive gradient.
  std::vector<double> backward(const TokenSequence& seq,
                               const Eigen::MatrixXd& visual,
                               const ForwardPass& fp,
                               const Eigen::MatrixXd& dlogits);

  // Mean of final-layer hidden states over [span.begin, span.end).
  static Eigen::VectorXd span_representation(const ForwardPass& fp,
                                             TokenSpan span);

  // Greedy autoregressive decoding with a per-layer KV cache. Appends up to
  // max_new tokens (stopping after stop_token) and returns only the new ids.
  // Deterministic: argmax with lowest-id tie-breaking.
  std::vector<int> generate(const TokenSequence& prefix,
                            const Eigen::MatrixXd& visual, int stop_token,
                            int max_new) const;

  // Next-token logits after consuming the whole prefix (KV-cache path).
  Eigen::VectorXd next_logits(const TokenSequence& prefix,
                              const Eigen::MatrixXd& visual) const;

 private:
  struct DecodeState;
  void embed_column(int id, int slot, double scale, int position,
                    const Eigen::MatrixXd& visual, Eigen::VectorXd* out) const;
  Eigen::VectorXd decode_step(DecodeState& st, const Eigen::VectorXd& x0) const;

  ParamStore& store_;
  ModelConfig cfg_;
};

// Greedy argmax with lowest-index tie-breaking.
int argmax_token(const Eigen::VectorXd& logits);

}  // namespace clueqa
