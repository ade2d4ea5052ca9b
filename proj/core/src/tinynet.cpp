#include "galab/tinynet.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <random>

#include "galab/error.hpp"

namespace galab {
namespace {

void shape_error(const std::string& what) { throw Error(ErrorCode::ShapeMismatch, what); }

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0x00000000000000FFull) << 56) | ((v & 0x000000000000FF00ull) << 40) |
        ((v & 0x0000000000FF0000ull) << 24) | ((v & 0x00000000FF000000ull) << 8) |
        ((v & 0x000000FF00000000ull) >> 8) | ((v & 0x0000FF0000000000ull) >> 24) |
        ((v & 0x00FF000000000000ull) >> 40) | ((v & 0xFF00000000000000ull) >> 56);
  }
  return v;
}

}  // namespace

void MlpGradients::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

MlpGradients& MlpGradients::operator+=(const MlpGradients& other) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
  return *this;
}

MlpGradients& MlpGradients::operator*=(double s) {
  for (auto& w : weights) w *= s;
  for (auto& b : biases) b *= s;
  return *this;
}

std::vector<double> MlpGradients::flatten() const {
  std::vector<double> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < weights[l].cols(); ++c) out.push_back(weights[l](r, c));
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) out.push_back(biases[l](r));
  }
  return out;
}

Mlp::Mlp(std::vector<int> layer_sizes, OutputActivation output, std::uint64_t seed,
         std::vector<double> action_low, std::vector<double> action_high)
    : Mlp(zeros(std::move(layer_sizes), output, std::move(action_low), std::move(action_high))) {
  seed_ = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(weights_[l].cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index r = 0; r < weights_[l].rows(); ++r)
      for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) weights_[l](r, c) = u(rng);
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) biases_[l](r) = u(rng);
  }
}

Mlp Mlp::zeros(std::vector<int> layer_sizes, OutputActivation output,
               std::vector<double> action_low, std::vector<double> action_high) {
  if (layer_sizes.size() < 2) shape_error("an MLP needs at least input and output sizes");
  for (int n : layer_sizes) {
    if (n < 1) shape_error("layer sizes must be positive");
  }
  Mlp net;
  net.sizes_ = std::move(layer_sizes);
  net.output_ = output;
  if (output == OutputActivation::ScaledTanh) {
    const auto out_dim = static_cast<std::size_t>(net.sizes_.back());
    if (action_low.empty()) action_low.assign(out_dim, -1.0);
    if (action_high.empty()) action_high.assign(out_dim, 1.0);
    if (action_low.size() != out_dim || action_high.size() != out_dim) {
      shape_error("action box does not match the output size");
    }
    for (std::size_t d = 0; d < out_dim; ++d) {
      if (!(action_low[d] < action_high[d])) {
        throw Error(ErrorCode::InvalidArgument, "action box must have low < high");
      }
    }
  }
  net.low_ = std::move(action_low);
  net.high_ = std::move(action_high);
  for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
    net.weights_.push_back(Eigen::MatrixXd::Zero(net.sizes_[l + 1], net.sizes_[l]));
    net.biases_.push_back(Eigen::VectorXd::Zero(net.sizes_[l + 1]));
  }
  return net;
}

void Mlp::check_input(Eigen::Index rows) const {
  if (weights_.empty()) shape_error("network is empty");
  if (rows != sizes_.front()) {
    shape_error("input has " + std::to_string(rows) + " rows, network expects " +
                std::to_string(sizes_.front()));
  }
}

Mlp::Tape Mlp::run(const Eigen::MatrixXd& inputs) const {
  check_input(inputs.rows());
  Tape tape;
  tape.activations.reserve(weights_.size());
  tape.activations.push_back(inputs);
  const std::size_t last = weights_.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    Eigen::MatrixXd z = weights_[l] * tape.activations.back();
    z.colwise() += biases_[l];
    tape.activations.push_back(z.cwiseMax(0.0));
  }
  tape.output_pre = weights_[last] * tape.activations.back();
  tape.output_pre.colwise() += biases_[last];
  return tape;
}

Eigen::MatrixXd Mlp::apply_output(const Eigen::MatrixXd& z) const {
  if (output_ == OutputActivation::Identity) return z;
  Eigen::MatrixXd out = z.array().tanh().matrix();
  for (Eigen::Index d = 0; d < out.rows(); ++d) {
    const double center = 0.5 * (high_[d] + low_[d]);
    const double half = 0.5 * (high_[d] - low_[d]);
    out.row(d) = (out.row(d).array() * half + center).matrix();
    // tanh saturation can round onto the bound; keep strictly inside the box
    out.row(d) = out.row(d).cwiseMax(low_[d]).cwiseMin(high_[d]);
  }
  return out;
}

namespace {

// Grow-only per-thread buffers: wide and narrow batches alternate during a
// training step, and resizing an Eigen matrix would reallocate each time.
using MapXd = Eigen::Map<Eigen::MatrixXd>;

MapXd scratch(int slot, Eigen::Index rows, Eigen::Index cols) {
  thread_local std::vector<double> store[3];
  auto& v = store[slot];
  const auto need = static_cast<std::size_t>(rows * cols);
  if (v.size() < need) v.resize(need);
  return MapXd(v.data(), rows, cols);
}

}  // namespace

Eigen::MatrixXd Mlp::finish_forward(MapXd z) const {
  const std::size_t last = weights_.size() - 1;
  Eigen::MatrixXd out;
  if (last == 0) {
    out = z;
    out.colwise() += biases_[0];
  } else {
    z.array() = (z.array().colwise() + biases_[0].array()).max(0.0);
    MapXd cur = z;
    for (std::size_t l = 1; l < last; ++l) {
      MapXd next = scratch(1 + static_cast<int>(l % 2), weights_[l].rows(), z.cols());
      next.noalias() = weights_[l] * cur;
      next.array() = (next.array().colwise() + biases_[l].array()).max(0.0);
      new (&cur) MapXd(next.data(), next.rows(), next.cols());
    }
    out.resize(weights_[last].rows(), z.cols());
    out.noalias() = weights_[last] * cur;
    out.colwise() += biases_[last];
  }
  out = apply_output(out);
  if (!out.allFinite()) throw Error(ErrorCode::NonFiniteActivation, "network output is not finite");
  return out;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
  check_input(inputs.rows());
  MapXd z = scratch(0, weights_[0].rows(), inputs.cols());
  z.noalias() = weights_[0] * inputs;
  return finish_forward(z);
}

Eigen::MatrixXd Mlp::forward_repeated(const Eigen::MatrixXd& lead, int repeat,
                                      const Eigen::MatrixXd& trail) const {
  check_input(lead.rows() + trail.rows());
  if (repeat <= 0 || trail.cols() != lead.cols() * repeat) {
    shape_error("trailing inputs must have lead.cols() * repeat columns");
  }
  const Eigen::Index nl = lead.rows();
  const Eigen::MatrixXd head = weights_[0].leftCols(nl) * lead;
  MapXd z = scratch(0, weights_[0].rows(), trail.cols());
  z.noalias() = weights_[0].rightCols(trail.rows()) * trail;
  for (Eigen::Index j = 0; j < lead.cols(); ++j) {
    z.middleCols(j * repeat, repeat).colwise() += head.col(j);
  }
  return finish_forward(z);
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
  return forward_batch(input);
}

Mlp::Backward Mlp::backward_batch(const Eigen::MatrixXd& inputs,
                                  const Eigen::MatrixXd& upstream) const {
  Tape tape = run(inputs);
  if (upstream.rows() != sizes_.back() || upstream.cols() != inputs.cols()) {
    shape_error("upstream gradient shape does not match network output");
  }
  Backward out;
  out.output = apply_output(tape.output_pre);
  if (!out.output.allFinite()) {
    throw Error(ErrorCode::NonFiniteActivation, "network output is not finite");
  }

  Eigen::MatrixXd delta = upstream;
  if (output_ == OutputActivation::ScaledTanh) {
    const Eigen::ArrayXXd t = tape.output_pre.array().tanh();
    for (Eigen::Index d = 0; d < delta.rows(); ++d) {
      const double half = 0.5 * (high_[d] - low_[d]);
      delta.row(d) = (delta.row(d).array() * half * (1.0 - t.row(d).square())).matrix();
    }
  }

  const std::size_t L = weights_.size();
  out.params.weights.resize(L);
  out.params.biases.resize(L);
  for (std::size_t l = L; l-- > 0;) {
    const Eigen::MatrixXd& a_prev = tape.activations[l];
    out.params.weights[l].noalias() = delta * a_prev.transpose();
    out.params.biases[l] = delta.rowwise().sum();
    Eigen::MatrixXd back = weights_[l].transpose() * delta;
    if (l > 0) {
      // rectifier derivative: 1 where the unit was active
      back = (a_prev.array() > 0.0).select(back, 0.0);
    }
    delta = std::move(back);
  }
  out.input = std::move(delta);
  return out;
}

MlpGradients Mlp::grad_params(const Eigen::VectorXd& input, const Eigen::VectorXd& upstream) const {
  return backward_batch(input, upstream).params;
}

Eigen::VectorXd Mlp::grad_input(const Eigen::VectorXd& input, const Eigen::VectorXd& upstream) const {
  return backward_batch(input, upstream).input.col(0);
}

MlpGradients Mlp::zero_gradients() const {
  MlpGradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(biases_[l].size()));
  }
  return g;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (Eigen::Index r = 0; r < weights_[l].rows(); ++r)
      for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) out.push_back(weights_[l](r, c));
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) out.push_back(biases_[l](r));
  }
  return out;
}

void Mlp::unflatten(std::span<const double> flat) {
  if (flat.size() != parameter_count()) shape_error("flat parameter vector has the wrong length");
  std::size_t i = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (Eigen::Index r = 0; r < weights_[l].rows(); ++r)
      for (Eigen::Index c = 0; c < weights_[l].cols(); ++c) weights_[l](r, c) = flat[i++];
    for (Eigen::Index r = 0; r < biases_[l].size(); ++r) biases_[l](r) = flat[i++];
  }
}

bool Mlp::same_architecture(const Mlp& other) const {
  return sizes_ == other.sizes_ && output_ == other.output_ && low_ == other.low_ &&
         high_ == other.high_;
}

AdamState::AdamState(const Mlp& net, double lr_, double beta1_, double beta2_, double eps_hat_)
    : lr(lr_), beta1(beta1_), beta2(beta2_), eps_hat(eps_hat_),
      m_(net.zero_gradients()), v_(net.zero_gradients()) {}

void adam_step(AdamState& st, Mlp& params, const MlpGradients& grads) {
  const auto L = params.weights().size();
  if (grads.weights.size() != L || st.m_.weights.size() != L) {
    throw Error(ErrorCode::ShapeMismatch, "Adam state/gradients do not match the network");
  }
  for (std::size_t l = 0; l < L; ++l) {
    if (grads.weights[l].rows() != params.weights()[l].rows() ||
        grads.weights[l].cols() != params.weights()[l].cols() ||
        grads.biases[l].size() != params.biases()[l].size() ||
        st.m_.weights[l].rows() != params.weights()[l].rows() ||
        st.m_.weights[l].cols() != params.weights()[l].cols() ||
        st.m_.biases[l].size() != params.biases()[l].size()) {
      throw Error(ErrorCode::ShapeMismatch, "gradient or Adam state layer shape mismatch");
    }
  }
  if (!(st.lr >= 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be >= 0");

  ++st.step_;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_));
  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = st.beta1 * m + (1.0 - st.beta1) * g;
    v = st.beta2 * v + (1.0 - st.beta2) * g.cwiseProduct(g);
    p.array() -= st.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + st.eps_hat);
  };
  for (std::size_t l = 0; l < L; ++l) {
    update(params.weights()[l], st.m_.weights[l], st.v_.weights[l], grads.weights[l]);
    update(params.biases()[l], st.m_.biases[l], st.v_.biases[l], grads.biases[l]);
  }
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (!target.same_architecture(online)) {
    throw Error(ErrorCode::ArchitectureMismatch, "soft update between different architectures");
  }
  if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorCode::InvalidArgument, "tau must be in (0, 1]");
  for (std::size_t l = 0; l < target.weights().size(); ++l) {
    if (tau == 1.0) {
      target.weights()[l] = online.weights()[l];
      target.biases()[l] = online.biases()[l];
    } else {
      target.weights()[l] = tau * online.weights()[l] + (1.0 - tau) * target.weights()[l];
      target.biases()[l] = tau * online.biases()[l] + (1.0 - tau) * target.biases()[l];
    }
  }
}

void save_mlp(const Mlp& net, std::ostream& os) {
  nlohmann::json header = {
      {"format", "galab.mlp"},
      {"version", 1},
      {"layers", net.layer_sizes()},
      {"output", net.output_activation() == OutputActivation::Identity ? "identity" : "scaled_tanh"},
      {"action_low", net.action_low()},
      {"action_high", net.action_high()},
      {"seed", net.seed()},
      {"parameters", net.parameter_count()},
  };
  os << header.dump() << '\n';
  for (double v : net.flatten()) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
    char buf[8];
    std::memcpy(buf, &bits, 8);
    os.write(buf, 8);
  }
  if (!os) throw Error(ErrorCode::IoError, "failed to write network snapshot");
}

Mlp load_mlp(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::IoError, "missing snapshot header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad snapshot header: ") + e.what());
  }
  if (header.value("format", "") != "galab.mlp") {
    throw Error(ErrorCode::IoError, "not a galab.mlp snapshot");
  }
  const auto output = header.at("output").get<std::string>() == "identity"
                          ? OutputActivation::Identity
                          : OutputActivation::ScaledTanh;
  Mlp net = Mlp::zeros(header.at("layers").get<std::vector<int>>(), output,
                       header.at("action_low").get<std::vector<double>>(),
                       header.at("action_high").get<std::vector<double>>());
  const auto count = header.at("parameters").get<std::size_t>();
  if (count != net.parameter_count()) throw Error(ErrorCode::IoError, "parameter count mismatch");
  std::vector<double> flat(count);
  for (double& v : flat) {
    char buf[8];
    if (!is.read(buf, 8)) throw Error(ErrorCode::IoError, "truncated snapshot payload");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    v = std::bit_cast<double>(to_little_endian(bits));
  }
  net.unflatten(flat);
  net.set_seed(header.value("seed", std::uint64_t{0}));
  return net;
}

void save_mlp(const Mlp& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path);
  save_mlp(net, os);
}

Mlp load_mlp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path);
  return load_mlp(is);
}

}  // namespace galab
