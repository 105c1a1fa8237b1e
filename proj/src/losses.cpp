#include "gate/losses.hpp"

#include <cmath>
#include <sstream>

namespace gate {

double PerturbationConfig::weight_for(const TaskId& source) const {
  auto it = weights.find(source.name);
  return it == weights.end() ? default_weight : it->second;
}

void PerturbationConfig::validate() const {
  if (num_points < 1) fail(ErrorCode::config, "perturb: M must be >= 1");
  if (!(sigma > 0.0)) fail(ErrorCode::config, "perturb: sigma must be > 0");
  if (default_weight < 0.0) fail(ErrorCode::config, "perturb: C must be >= 0");
  for (const auto& [name, w] : weights) {
    if (w < 0.0) fail(ErrorCode::config, "perturb: C for '" + name + "' must be >= 0");
  }
}

bool LossBreakdown::finite() const {
  return std::isfinite(l_reg) && std::isfinite(l_map) && std::isfinite(l_ae) &&
         std::isfinite(l_cons) && std::isfinite(l_dis) && std::isfinite(l_tot);
}

std::string LossBreakdown::str() const {
  std::ostringstream os;
  os << "l_reg=" << l_reg << " l_map=" << l_map << " l_ae=" << l_ae
     << " l_cons=" << l_cons << " l_dis=" << l_dis << " l_tot=" << l_tot;
  return os.str();
}

Tensor regression_loss(const Tensor& y, const Tensor& yhat) {
  if (y.size() == 0) fail(ErrorCode::invalid, "regression_loss: empty batch");
  if (y.shape() != yhat.shape()) {
    fail(ErrorCode::shape, "regression_loss: labels " + shape_str(y.shape()) +
                               " vs predictions " + shape_str(yhat.shape()));
  }
  return mean_sq_diff(y, yhat);
}

Tensor mapping_loss(const std::vector<MappingTerm>& terms) {
  Tensor acc = Tensor::scalar(0.0);
  for (const MappingTerm& term : terms) {
    acc = add(acc, scalar_mul(term.lambda, regression_loss(term.y, term.yhat)));
  }
  return acc;
}

Tensor reconstruction_loss(const GateParams& params, ParamBinder* binder,
                           const std::vector<std::pair<int, Tensor>>& z_per_task) {
  Tensor acc = Tensor::scalar(0.0);
  for (const auto& [index, z] : z_per_task) {
    const TaskId& task = params.tasks()[index];
    const Tensor round_trip =
        from_manifold(params, to_manifold(params, z, task, binder), task, binder);
    acc = add(acc, mean_sq_diff(z, round_trip));
  }
  return acc;
}

Tensor consistency_loss(const std::vector<Tensor>& source_manifold,
                        const Tensor& target_manifold) {
  Tensor acc = Tensor::scalar(0.0);
  for (const Tensor& z_m : source_manifold) {
    acc = add(acc, mean_sq_diff(z_m, target_manifold));
  }
  return acc;
}

Tensor distance_loss(const GateParams& params, ParamBinder* binder, const Tensor& z,
                     int target_index, const std::vector<int>& source_indices,
                     const PerturbationConfig& perturb, Rng& rng) {
  perturb.validate();
  const std::size_t n = z.rows(), d = z.cols();

  const auto branch = [&](int task_index, const Tensor& input) {
    const TaskId& task = params.tasks()[task_index];
    return to_manifold(params, encode(params, input, task, binder), task, binder);
  };

  std::vector<Tensor> base;  // manifold image of z, per task, computed once
  base.reserve(source_indices.size() + 1);
  const Tensor base_target = branch(target_index, z);
  std::vector<Tensor> base_sources;
  for (int s : source_indices) base_sources.push_back(branch(s, z));

  Tensor acc = Tensor::scalar(0.0);
  for (std::size_t p = 0; p < perturb.num_points; ++p) {
    // One noise draw per p, shared across every task's branch.
    std::vector<double> noise(n * d);
    for (double& v : noise) v = perturb.sigma * rng.normal();
    const Tensor z_p = add(z, Tensor::matrix(n, d, std::move(noise)));

    const Tensor disp_target = row_norms(sub(base_target, branch(target_index, z_p)));
    for (std::size_t si = 0; si < source_indices.size(); ++si) {
      const double weight = perturb.weight_for(params.tasks()[source_indices[si]]);
      const Tensor disp_source =
          row_norms(sub(base_sources[si], branch(source_indices[si], z_p)));
      acc = add(acc, scalar_mul(weight, mean_sq_diff(disp_source, disp_target)));
    }
  }
  return scalar_mul(1.0 / static_cast<double>(perturb.num_points), acc);
}

LossBreakdown LossNodes::numbers() const {
  LossBreakdown b;
  b.l_reg = reg.item();
  b.l_map = map.item();
  b.l_ae = ae.item();
  b.l_cons = cons.item();
  b.l_dis = dis.item();
  b.l_tot = tot.item();
  return b;
}

LossNodes total_loss(const Tensor& reg, const Tensor& map, const Tensor& ae,
                     const Tensor& cons, const Tensor& dis) {
  LossNodes nodes{reg, map, ae, cons, dis, Tensor()};
  nodes.tot = add(add(add(add(reg, ae), cons), dis), map);
  return nodes;
}

}  // namespace gate
