#pragma once

#include <Eigen/Dense>
#include <vector>

#include "clueqa/backbone.hpp"
#include "clueqa/params.hpp"

namespace clueqa {

// Activation record of one scoring branch, kept for the backward pass.
struct BranchCache {
  Eigen::VectorXd x;     // concatenated input (2*dim)
  Eigen::VectorXd z;     // pre-normalization (hidden)
  double mu = 0.0;
  double rstd = 0.0;
  Eigen::VectorXd relu_in;  // post-norm, pre-ReLU
  Eigen::VectorXd a;        // post-ReLU
};

struct GateCache {
  BranchCache semantic;
  BranchCache visual;
  double gate = 0.0;
};

// Output of gating a clue set against one question.
struct GatingResult {
  std::vector<double> gates;             // g_i in (0,1)
  std::vector<double> semantic_scores;   // pre-sigmoid branch scores
  std::vector<double> visual_scores;
  // s_v per clue, per frame of its lifespan (local frame order).
  std::vector<std::vector<double>> frame_faithfulness;
  std::vector<GateCache> caches;
};

// The clue filter: per clue i,
//   g_i = sigmoid( F_sem(f(Q), f(C_i)) + F_vis(f(V_i), f(C_i)) )
// where each branch is Linear(2*dim -> hidden) -> LayerNorm -> ReLU ->
// Linear(hidden -> 1). The same visual branch, applied to a single frame's
// embedding instead of the lifespan mean, yields the per-frame faithfulness
// score s_v(i,t) used by frame compression.
//
// Representations entering the filter are treated as constants: gradients
// flow into filter parameters and out through the gate values, not back
// into the representation passes.
class ClueFilter {
 public:
  ClueFilter(ParamStore& store, const ModelConfig& cfg, uint64_t init_seed);

  // clue_reps / clue_visual_reps: model_dim x N (column per clue).
  // lifespan_frames[i]: embedding columns of clue i's lifespan, for s_v.
  GatingResult gate_clues(const Eigen::VectorXd& question_rep,
                          const Eigen::MatrixXd& clue_reps,
                          const Eigen::MatrixXd& clue_visual_reps,
                          const std::vector<Eigen::MatrixXd>& lifespan_frames)
      const;

  // Pre-sigmoid score of one branch ("acf.sem" / "acf.vis").
  double branch_score(const std::string& prefix, const Eigen::VectorXd& a,
                      const Eigen::VectorXd& b, BranchCache* cache) const;

  // Accumulates parameter gradients given d(loss)/d(gate) per clue.
  void backward(const GatingResult& result,
                const std::vector<double>& dgates);

 private:
  void branch_backward(const std::string& prefix, const BranchCache& cache,
                       double dscore);

  ParamStore& store_;
  int dim_;
  int hidden_;
};

// lambda * mean(|g_j|); with gates in (0,1) this is lambda * mean(g_j).
double sparsity_penalty(const std::vector<double>& gates, double lambda);

double sigmoid(double x);

}  // namespace clueqa
