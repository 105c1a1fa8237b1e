#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "gate/rng.hpp"
#include "gate/tensor.hpp"

namespace gate {

struct TaskId {
  std::string name;
  bool operator==(const TaskId& other) const { return name == other.name; }
  bool operator<(const TaskId& other) const { return name < other.name; }
};

// Layer widths of one affine stack; hidden layers use tanh, the output layer
// is affine unless final_tanh is set.
struct StackSpec {
  std::vector<std::size_t> hidden;
  bool final_tanh = false;
};

struct ModelConfig {
  std::size_t d_x = 0;
  std::size_t d_z = 32;
  std::size_t d_m = 32;
  StackSpec embedder{{64, 64}, false};
  StackSpec encoder{{64}, false};
  StackSpec to_manifold{{64}, false};
  StackSpec from_manifold{{64}, false};
  StackSpec head{{}, false};
  std::vector<TaskId> tasks;

  void validate() const;
};

struct AffineLayer {
  Tensor weight;  // out x in
  Tensor bias;    // out
};

struct Mlp {
  std::vector<AffineLayer> layers;
  bool final_tanh = false;

  std::size_t in_dim() const { return layers.front().weight.cols(); }
  std::size_t out_dim() const { return layers.back().weight.rows(); }
};

struct TaskParams {
  Mlp encoder;
  Mlp to_manifold;
  Mlp from_manifold;
  Mlp head;
};

// All model parameters: one shared embedder plus one
// (encoder, to_manifold, from_manifold, head) quadruple per task.
class GateParams {
 public:
  static GateParams init(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::vector<TaskId>& tasks() const { return config_.tasks; }
  std::size_t task_count() const { return config_.tasks.size(); }
  int task_index(const TaskId& task) const;

  Mlp& embedder() { return embedder_; }
  const Mlp& embedder() const { return embedder_; }
  TaskParams& task_params(int index) { return per_task_[index]; }
  const TaskParams& task_params(int index) const { return per_task_[index]; }

  // Deterministic enumeration of every parameter tensor; the order is the
  // contract for optimizer state and checkpoints.
  void for_each_param(const std::function<void(Tensor&)>& fn);
  void for_each_param(const std::function<void(const Tensor&)>& fn) const;
  std::size_t param_tensor_count() const;
  std::uint64_t value_checksum() const;

 private:
  ModelConfig config_;
  Mlp embedder_;
  std::vector<TaskParams> per_task_;
  std::unordered_map<std::string, int> index_;
};

// Binds parameter tensors onto a tape, as leaves when trainable and constants
// otherwise. Bindings are memoized by parameter address so each tensor lands
// on the tape once per step.
class ParamBinder {
 public:
  ParamBinder(Tape& tape, bool trainable) : tape_(tape), trainable_(trainable) {}

  const Tensor& bind(const Tensor& param);
  Tape& tape() { return tape_; }
  bool trainable() const { return trainable_; }

 private:
  Tape& tape_;
  bool trainable_;
  std::unordered_map<const Tensor*, Tensor> cache_;
};

// Forward paths. Inputs are row-major batches (n x d); a null binder gives a
// plain untracked evaluation. Predictions come back as length-n vectors.
Tensor eval_mlp(const Mlp& mlp, const Tensor& input, ParamBinder* binder);
Tensor embed(const GateParams& params, const Tensor& x, ParamBinder* binder = nullptr);
Tensor encode(const GateParams& params, const Tensor& z, const TaskId& task,
              ParamBinder* binder = nullptr);
Tensor to_manifold(const GateParams& params, const Tensor& z_task, const TaskId& task,
                   ParamBinder* binder = nullptr);
Tensor from_manifold(const GateParams& params, const Tensor& z_m, const TaskId& task,
                     ParamBinder* binder = nullptr);
Tensor apply_head(const GateParams& params, const Tensor& z_task, const TaskId& task,
                  ParamBinder* binder = nullptr);
Tensor predict_direct(const GateParams& params, const Tensor& x, const TaskId& target,
                      ParamBinder* binder = nullptr);
Tensor predict_via_source(const GateParams& params, const Tensor& x, const TaskId& target,
                          const TaskId& source, ParamBinder* binder = nullptr);

// A stack of the given widths whose layers are identity matrices with zero
// bias; requires equal in/out dims and no hidden layers.
Mlp identity_mlp(std::size_t dim);

}  // namespace gate
