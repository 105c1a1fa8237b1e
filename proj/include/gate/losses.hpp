#pragma once

#include <map>
#include <vector>

#include "gate/model.hpp"
#include "gate/rng.hpp"
#include "gate/tensor.hpp"

namespace gate {

// Settings of the perturbation regularizer: M points, noise scale on the
// embedding, and the per-source weight C_s.
struct PerturbationConfig {
  std::size_t num_points = 4;
  double sigma = 0.1;
  double default_weight = 1.0;
  std::map<std::string, double> weights;  // per-source overrides

  double weight_for(const TaskId& source) const;
  void validate() const;
};

struct LossBreakdown {
  double l_reg = 0.0;
  double l_map = 0.0;
  double l_ae = 0.0;
  double l_cons = 0.0;
  double l_dis = 0.0;
  double l_tot = 0.0;

  bool finite() const;
  std::string str() const;
};

// MSE between labels and predictions.
Tensor regression_loss(const Tensor& y, const Tensor& yhat);

// One evaluated (source -> target) pair: its transfer ratio (a one-element
// tensor, a tape leaf in the outer loop), target labels, and predictions made
// through the source path.
struct MappingTerm {
  Tensor lambda;
  Tensor y;
  Tensor yhat;
};

// Sum over pairs of lambda times the pair's MSE.
Tensor mapping_loss(const std::vector<MappingTerm>& terms);

// Round trip task -> manifold -> task for every entry of z_per_task; entries
// are (task index, latent batch).
Tensor reconstruction_loss(const GateParams& params, ParamBinder* binder,
                           const std::vector<std::pair<int, Tensor>>& z_per_task);

// Sum over sources of MSE between source and target manifold embeddings of
// the same inputs.
Tensor consistency_loss(const std::vector<Tensor>& source_manifold,
                        const Tensor& target_manifold);

// Perturbation-displacement regularizer. Draws M noise matrices on the
// embedding z (each shared across every task's branch) and penalizes the
// squared gap between source and target per-sample displacement norms.
Tensor distance_loss(const GateParams& params, ParamBinder* binder, const Tensor& z,
                     int target_index, const std::vector<int>& source_indices,
                     const PerturbationConfig& perturb, Rng& rng);

struct LossNodes {
  Tensor reg, map, ae, cons, dis, tot;
  LossBreakdown numbers() const;
};

LossNodes total_loss(const Tensor& reg, const Tensor& map, const Tensor& ae,
                     const Tensor& cons, const Tensor& dis);

}  // namespace gate
