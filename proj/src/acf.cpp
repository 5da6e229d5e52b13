#include "clueqa/acf.hpp"

#include <cmath>

#include "clueqa/rng.hpp"

namespace clueqa {

namespace {

constexpr double kLnEps = 1e-5;

void init_gaussian(Tensor& t, uint64_t seed, double scale) {
  Rng rng(seed, t.name);
  for (int c = 0; c < t.value.cols(); ++c) {
    for (int r = 0; r < t.value.rows(); ++r) {
      t.value(r, c) = scale * rng.gaussian();
    }
  }
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

double sparsity_penalty(const std::vector<double>& gates, double lambda) {
  if (lambda < 0.0) throw ValidationError("lambda must be non-negative");
  if (gates.empty()) return 0.0;
  double s = 0.0;
  for (double g : gates) s += std::abs(g);
  return lambda * s / (double)gates.size();
}

ClueFilter::ClueFilter(ParamStore& store, const ModelConfig& cfg,
                       uint64_t init_seed)
    : store_(store), dim_(cfg.model_dim), hidden_(cfg.hidden_dim()) {
  for (const char* br : {"acf.sem.", "acf.vis."}) {
    std::string p(br);
    Tensor& w1 = store_.add(p + "w1", hidden_, 2 * dim_, true);
    init_gaussian(w1, init_seed, 1.0 / std::sqrt(2.0 * dim_));
    store_.add(p + "b1", hidden_, 1, true);
    Tensor& g = store_.add(p + "ln.g", hidden_, 1, true);
    g.value.setOnes();
    store_.add(p + "ln.b", hidden_, 1, true);
    Tensor& w2 = store_.add(p + "w2", 1, hidden_, true);
    init_gaussian(w2, init_seed, 0.02);
    store_.add(p + "b2", 1, 1, true);
  }
}

double ClueFilter::branch_score(const std::string& prefix,
                                const Eigen::VectorXd& a,
                                const Eigen::VectorXd& b,
                                BranchCache* cache) const {
  if (a.size() != dim_ || b.size() != dim_) {
    throw ContractError("branch inputs must have model dimension");
  }
  BranchCache local;
  BranchCache& c = cache ? *cache : local;
  c.x.resize(2 * dim_);
  c.x.head(dim_) = a;
  c.x.tail(dim_) = b;
  c.z = store_.at(prefix + ".w1").value * c.x +
        store_.at(prefix + ".b1").value.col(0);
  c.mu = c.z.mean();
  double var = (c.z.array() - c.mu).square().mean();
  c.rstd = 1.0 / std::sqrt(var + kLnEps);
  c.relu_in = (((c.z.array() - c.mu) * c.rstd) *
                   store_.at(prefix + ".ln.g").value.col(0).array() +
               store_.at(prefix + ".ln.b").value.col(0).array())
                  .matrix();
  c.a = c.relu_in.cwiseMax(0.0);
  return store_.at(prefix + ".w2").value.row(0).dot(c.a) +
         store_.at(prefix + ".b2").value(0, 0);
}

GatingResult ClueFilter::gate_clues(
    const Eigen::VectorXd& question_rep, const Eigen::MatrixXd& clue_reps,
    const Eigen::MatrixXd& clue_visual_reps,
    const std::vector<Eigen::MatrixXd>& lifespan_frames) const {
  int n = (int)clue_reps.cols();
  if (clue_visual_reps.cols() != n) {
    throw ContractError("clue visual representation count mismatch");
  }
  if (!lifespan_frames.empty() && (int)lifespan_frames.size() != n) {
    throw ContractError("lifespan frame list count mismatch");
  }
  GatingResult out;
  out.gates.resize(n);
  out.semantic_scores.resize(n);
  out.visual_scores.resize(n);
  out.frame_faithfulness.resize(n);
  out.caches.resize(n);
  for (int i = 0; i < n; ++i) {
    GateCache& gc = out.caches[i];
    double sem = branch_score("acf.sem", question_rep, clue_reps.col(i),
                              &gc.semantic);
    double vis = branch_score("acf.vis", clue_visual_reps.col(i),
                              clue_reps.col(i), &gc.visual);
    gc.gate = sigmoid(sem + vis);
    out.gates[i] = gc.gate;
    out.semantic_scores[i] = sem;
    out.visual_scores[i] = vis;
    if (!lifespan_frames.empty()) {
      const Eigen::MatrixXd& frames = lifespan_frames[i];
      out.frame_faithfulness[i].resize(frames.cols());
      for (int t = 0; t < frames.cols(); ++t) {
        double s =
            branch_score("acf.vis", frames.col(t), clue_reps.col(i), nullptr);
        out.frame_faithfulness[i][t] = sigmoid(s);
      }
    }
  }
  return out;
}

void ClueFilter::branch_backward(const std::string& prefix,
                                 const BranchCache& c, double dscore) {
  Tensor& w2 = store_.at(prefix + ".w2");
  Tensor& b2 = store_.at(prefix + ".b2");
  w2.grad.row(0) += dscore * c.a.transpose();
  b2.grad(0, 0) += dscore;
  Eigen::VectorXd da = dscore * w2.value.row(0).transpose();
  Eigen::VectorXd drelu_in =
      (da.array() * (c.relu_in.array() > 0.0).cast<double>()).matrix();

  Tensor& g = store_.at(prefix + ".ln.g");
  Tensor& b = store_.at(prefix + ".ln.b");
  Eigen::ArrayXd zhat = (c.z.array() - c.mu) * c.rstd;
  g.grad.col(0).array() += drelu_in.array() * zhat;
  b.grad.col(0) += drelu_in;
  Eigen::ArrayXd dzhat = drelu_in.array() * g.value.col(0).array();
  double m1 = dzhat.mean();
  double m2 = (dzhat * zhat).mean();
  Eigen::VectorXd dz = (c.rstd * (dzhat - m1 - zhat * m2)).matrix();

  Tensor& w1 = store_.at(prefix + ".w1");
  Tensor& b1 = store_.at(prefix + ".b1");
  w1.grad.noalias() += dz * c.x.transpose();
  b1.grad.col(0) += dz;
  // Inputs are treated as constants; no gradient is propagated to them.
}

void ClueFilter::backward(const GatingResult& result,
                          const std::vector<double>& dgates) {
  if (dgates.size() != result.gates.size()) {
    throw ContractError("gate gradient count mismatch");
  }
  for (size_t i = 0; i < dgates.size(); ++i) {
    double g = result.gates[i];
    double dpre = dgates[i] * g * (1.0 - g);
    branch_backward("acf.sem", result.caches[i].semantic, dpre);
    branch_backward("acf.vis", result.caches[i].visual, dpre);
  }
}

}  // namespace clueqa
