#include "gate/model.hpp"

#include <cmath>

namespace gate {

void ModelConfig::validate() const {
  if (d_x == 0 || d_z == 0 || d_m == 0) {
    fail(ErrorCode::config, "model: dims d_x/d_z/d_m must be positive");
  }
  if (tasks.empty()) fail(ErrorCode::config, "model: at least one task required");
  std::unordered_map<std::string, int> seen;
  for (const TaskId& t : tasks) {
    if (t.name.empty()) fail(ErrorCode::config, "model: empty task name");
    if (seen.count(t.name)) fail(ErrorCode::config, "model: duplicate task '" + t.name + "'");
    seen[t.name] = 1;
  }
}

namespace {

Mlp init_mlp(const StackSpec& spec, std::size_t in_dim, std::size_t out_dim,
             Rng& rng) {
  std::vector<std::size_t> dims;
  dims.push_back(in_dim);
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(out_dim);

  Mlp mlp;
  mlp.final_tanh = spec.final_tanh;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t fan_in = dims[l], fan_out = dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<double> w(fan_out * fan_in);
    for (double& v : w) v = rng.uniform(-bound, bound);
    mlp.layers.push_back({Tensor::matrix(fan_out, fan_in, std::move(w)),
                          Tensor::zeros({fan_out})});
  }
  return mlp;
}

void mlp_params(Mlp& mlp, const std::function<void(Tensor&)>& fn) {
  for (AffineLayer& layer : mlp.layers) {
    fn(layer.weight);
    fn(layer.bias);
  }
}

}  // namespace

GateParams GateParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  GateParams p;
  p.config_ = config;
  {
    Rng rng = Rng::derive(seed, "init/embedder");
    p.embedder_ = init_mlp(config.embedder, config.d_x, config.d_z, rng);
  }
  for (std::size_t i = 0; i < config.tasks.size(); ++i) {
    TaskParams tp;
    Rng enc = Rng::derive(seed, "init/encoder", i);
    tp.encoder = init_mlp(config.encoder, config.d_z, config.d_z, enc);
    Rng fwd = Rng::derive(seed, "init/to_manifold", i);
    tp.to_manifold = init_mlp(config.to_manifold, config.d_z, config.d_m, fwd);
    Rng inv = Rng::derive(seed, "init/from_manifold", i);
    tp.from_manifold = init_mlp(config.from_manifold, config.d_m, config.d_z, inv);
    Rng head = Rng::derive(seed, "init/head", i);
    tp.head = init_mlp(config.head, config.d_z, 1, head);
    p.per_task_.push_back(std::move(tp));
    p.index_[config.tasks[i].name] = static_cast<int>(i);
  }
  return p;
}

int GateParams::task_index(const TaskId& task) const {
  auto it = index_.find(task.name);
  if (it == index_.end()) fail(ErrorCode::invalid, "unknown task '" + task.name + "'");
  return it->second;
}

void GateParams::for_each_param(const std::function<void(Tensor&)>& fn) {
  mlp_params(embedder_, fn);
  for (TaskParams& tp : per_task_) {
    mlp_params(tp.encoder, fn);
    mlp_params(tp.to_manifold, fn);
    mlp_params(tp.from_manifold, fn);
    mlp_params(tp.head, fn);
  }
}

void GateParams::for_each_param(const std::function<void(const Tensor&)>& fn) const {
  const_cast<GateParams*>(this)->for_each_param(
      [&fn](Tensor& t) { fn(static_cast<const Tensor&>(t)); });
}

std::size_t GateParams::param_tensor_count() const {
  std::size_t n = 0;
  for_each_param([&n](const Tensor&) { ++n; });
  return n;
}

std::uint64_t GateParams::value_checksum() const {
  std::uint64_t h = 14695981039346656037ULL;
  for_each_param([&h](const Tensor& t) {
    h = fnv1a64(t.values().data(), t.values().size() * sizeof(double), h);
  });
  return h;
}

const Tensor& ParamBinder::bind(const Tensor& param) {
  auto it = cache_.find(&param);
  if (it != cache_.end()) return it->second;
  Tensor bound = trainable_ ? tape_.leaf(param) : tape_.constant(param);
  return cache_.emplace(&param, std::move(bound)).first->second;
}

Tensor eval_mlp(const Mlp& mlp, const Tensor& input, ParamBinder* binder) {
  if (input.shape().size() != 2 || input.cols() != mlp.in_dim()) {
    fail(ErrorCode::shape, "mlp: input " + shape_str(input.shape()) + " does not match in dim " +
                               std::to_string(mlp.in_dim()));
  }
  Tensor h = input;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const AffineLayer& layer = mlp.layers[l];
    const Tensor* w = &layer.weight;
    const Tensor* b = &layer.bias;
    if (binder) {
      w = &binder->bind(layer.weight);
      b = &binder->bind(layer.bias);
    }
    h = add_rowvec(matmul_nt(h, *w), *b);
    const bool last = l + 1 == mlp.layers.size();
    if (!last || mlp.final_tanh) h = tanh(h);
  }
  return h;
}

Tensor embed(const GateParams& params, const Tensor& x, ParamBinder* binder) {
  return eval_mlp(params.embedder(), x, binder);
}

Tensor encode(const GateParams& params, const Tensor& z, const TaskId& task,
              ParamBinder* binder) {
  return eval_mlp(params.task_params(params.task_index(task)).encoder, z, binder);
}

Tensor to_manifold(const GateParams& params, const Tensor& z_task, const TaskId& task,
                   ParamBinder* binder) {
  return eval_mlp(params.task_params(params.task_index(task)).to_manifold, z_task, binder);
}

Tensor from_manifold(const GateParams& params, const Tensor& z_m, const TaskId& task,
                     ParamBinder* binder) {
  return eval_mlp(params.task_params(params.task_index(task)).from_manifold, z_m, binder);
}

Tensor apply_head(const GateParams& params, const Tensor& z_task, const TaskId& task,
                  ParamBinder* binder) {
  Tensor out = eval_mlp(params.task_params(params.task_index(task)).head, z_task, binder);
  return reshape(out, {out.rows()});
}

Tensor predict_direct(const GateParams& params, const Tensor& x, const TaskId& target,
                      ParamBinder* binder) {
  const Tensor z = embed(params, x, binder);
  const Tensor z_t = encode(params, z, target, binder);
  return apply_head(params, z_t, target, binder);
}

Tensor predict_via_source(const GateParams& params, const Tensor& x, const TaskId& target,
                          const TaskId& source, ParamBinder* binder) {
  if (source == target) {
    fail(ErrorCode::invalid, "predict_via_source: self-transfer '" + source.name +
                                 "' -> '" + target.name + "' is excluded");
  }
  const Tensor z = embed(params, x, binder);
  const Tensor z_s = encode(params, z, source, binder);
  const Tensor z_m = to_manifold(params, z_s, source, binder);
  const Tensor z_t = from_manifold(params, z_m, target, binder);
  return apply_head(params, z_t, target, binder);
}

Mlp identity_mlp(std::size_t dim) {
  Mlp mlp;
  mlp.final_tanh = false;
  mlp.layers.push_back({Tensor::identity(dim), Tensor::zeros({dim})});
  return mlp;
}

}  // namespace gate
