#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace galab {

enum class OutputActivation {
  Identity,    // critics
  ScaledTanh,  // actors: low + (high - low) * (tanh(z) + 1) / 2, per coordinate
};

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  void set_zero();
  MlpGradients& operator+=(const MlpGradients& other);
  MlpGradients& operator*=(double s);
  std::vector<double> flatten() const;
};

/// Dense feed-forward network with rectifier hidden units. Batched calls take
/// one sample per column.
class Mlp {
 public:
  Mlp() = default;
  /// Uniform fan-in initialization: every weight and bias of a layer with
  /// fan-in n is drawn from U(-1/sqrt(n), 1/sqrt(n)).
  Mlp(std::vector<int> layer_sizes, OutputActivation output, std::uint64_t seed,
      std::vector<double> action_low = {}, std::vector<double> action_high = {});

  /// All parameters zero.
  static Mlp zeros(std::vector<int> layer_sizes, OutputActivation output,
                   std::vector<double> action_low = {}, std::vector<double> action_high = {});

  const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(weights_.size()); }
  OutputActivation output_activation() const noexcept { return output_; }
  std::uint64_t seed() const noexcept { return seed_; }
  void set_seed(std::uint64_t seed) noexcept { seed_ = seed; }
  const std::vector<double>& action_low() const noexcept { return low_; }
  const std::vector<double>& action_high() const noexcept { return high_; }

  std::vector<Eigen::MatrixXd>& weights() noexcept { return weights_; }
  const std::vector<Eigen::MatrixXd>& weights() const noexcept { return weights_; }
  std::vector<Eigen::VectorXd>& biases() noexcept { return biases_; }
  const std::vector<Eigen::VectorXd>& biases() const noexcept { return biases_; }

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;
  /// Equals forward_batch, up to rounding, on inputs whose column j*repeat + k is
  /// [lead.col(j); trail.col(j*repeat + k)], without forming that matrix.
  Eigen::MatrixXd forward_repeated(const Eigen::MatrixXd& lead, int repeat,
                                   const Eigen::MatrixXd& trail) const;

  /// Gradient of upstream . output with respect to every parameter.
  MlpGradients grad_params(const Eigen::VectorXd& input, const Eigen::VectorXd& upstream) const;
  /// Gradient of upstream . output with respect to the input.
  Eigen::VectorXd grad_input(const Eigen::VectorXd& input, const Eigen::VectorXd& upstream) const;

  struct Backward {
    Eigen::MatrixXd output;  // forward pass result
    MlpGradients params;     // summed over the batch
    Eigen::MatrixXd input;   // per-sample input gradients
  };
  Backward backward_batch(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& upstream) const;

  MlpGradients zero_gradients() const;
  std::size_t parameter_count() const;
  /// Layer by layer: W row-major, then b.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
  bool same_architecture(const Mlp& other) const;

 private:
  struct Tape {
    std::vector<Eigen::MatrixXd> activations;  // a_0 = input, ..., a_L pre-output
    Eigen::MatrixXd output_pre;
  };
  Tape run(const Eigen::MatrixXd& inputs) const;
  Eigen::MatrixXd apply_output(const Eigen::MatrixXd& z) const;
  Eigen::MatrixXd finish_forward(Eigen::Map<Eigen::MatrixXd> first_hidden) const;
  void check_input(Eigen::Index rows) const;

  std::vector<int> sizes_;
  OutputActivation output_ = OutputActivation::Identity;
  std::uint64_t seed_ = 0;
  std::vector<double> low_, high_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

/// Adam with bias correction.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const Mlp& net, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                     double eps_hat = 1e-8);

  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;

  long step_count() const noexcept { return step_; }
  const MlpGradients& first_moment() const noexcept { return m_; }
  const MlpGradients& second_moment() const noexcept { return v_; }

  friend void adam_step(AdamState& state, Mlp& params, const MlpGradients& grads);

 private:
  long step_ = 0;
  MlpGradients m_, v_;
};

void adam_step(AdamState& state, Mlp& params, const MlpGradients& grads);

/// target <- tau * online + (1 - tau) * target.
void soft_update(Mlp& target, const Mlp& online, double tau);

/// One JSON header line (format, layer sizes, output kind, action box, seed,
/// parameter count) followed by the flattened parameters as little-endian
/// IEEE-754 doubles.
void save_mlp(const Mlp& net, std::ostream& os);
Mlp load_mlp(std::istream& is);
void save_mlp(const Mlp& net, const std::string& path);
Mlp load_mlp(const std::string& path);

}  // namespace galab
