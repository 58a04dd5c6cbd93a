#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mnav/common.hpp"

namespace mnav {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

enum class Activation { relu, tanh, linear };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
  }
  return "linear";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "linear") return Activation::linear;
  throw Error("checkpoint-incompatible", "unknown activation '" + s + "'");
}

// Parameter exchange format: shape plus flat row-major data.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;
};

struct Layer {
  Eigen::MatrixXd W;   // out x in
  Eigen::VectorXd b;   // out
  Activation act = Activation::linear;
  Eigen::MatrixXd gW;  // gradient buffers, shape-matched
  Eigen::VectorXd gb;
};

// Dense MLP with explicit reverse-mode gradients. Batched inputs are
// column-per-sample. forward() records the tape consumed by backward();
// backward() accumulates into the gradient buffers until zero_grad().
class Mlp {
 public:
  Mlp() = default;

  // dims = [in, h1, ..., out]; acts has one entry per layer.
  Mlp(const std::vector<int>& dims, const std::vector<Activation>& acts, Rng& rng) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1) throw Error("shape");
    layers_.resize(acts.size());
    for (std::size_t k = 0; k < acts.size(); ++k) {
      Layer& l = layers_[k];
      const int in = dims[k], out = dims[k + 1];
      l.W.resize(out, in);
      l.b.resize(out);
      l.act = acts[k];
      const double bound = 1.0 / std::sqrt(static_cast<double>(in));
      for (int r = 0; r < out; ++r)
        for (int c = 0; c < in; ++c) l.W(r, c) = rng.uniform(-bound, bound);
      for (int r = 0; r < out; ++r) l.b(r) = rng.uniform(-bound, bound);
      l.gW = Eigen::MatrixXd::Zero(out, in);
      l.gb = Eigen::VectorXd::Zero(out);
    }
  }

  int input_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().W.cols()); }
  int output_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().W.rows()); }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) {
    if (x.rows() != input_dim()) throw Error("shape");
    inputs_.resize(layers_.size());
    outputs_.resize(layers_.size());
    Eigen::MatrixXd cur = x;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      inputs_[k] = cur;
      cur = apply(layers_[k], cur);
      outputs_[k] = cur;
    }
    has_tape_ = true;
    return cur;
  }

  Eigen::MatrixXd forward_nograd(const Eigen::MatrixXd& x) const {
    if (x.rows() != input_dim()) throw Error("shape");
    Eigen::MatrixXd cur = x;
    for (const Layer& l : layers_) cur = apply(l, cur);
    return cur;
  }

  Eigen::VectorXd forward_one(const Eigen::VectorXd& x) const {
    return forward_nograd(x);
  }

  // Accumulates parameter gradients and returns dL/dinput.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& upstream) {
    if (!has_tape_) throw Error("no-tape");
    if (upstream.rows() != output_dim() || upstream.cols() != inputs_.front().cols())
      throw Error("shape");
    Eigen::MatrixXd grad = upstream;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      Layer& l = layers_[k];
      Eigen::MatrixXd delta;
      switch (l.act) {
        case Activation::relu:
          delta = grad.array() * (outputs_[k].array() > 0.0).cast<double>();
          break;
        case Activation::tanh:
          delta = grad.array() * (1.0 - outputs_[k].array().square());
          break;
        case Activation::linear:
          delta = grad;
          break;
      }
      l.gW.noalias() += delta * inputs_[k].transpose();
      l.gb += delta.rowwise().sum();
      grad.noalias() = l.W.transpose() * delta;
    }
    return grad;
  }

  void zero_grad() {
    for (Layer& l : layers_) {
      l.gW.setZero();
      l.gb.setZero();
    }
  }

  void scale_last_layer(double s) {
    layers_.back().W *= s;
    layers_.back().b *= s;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers_) n += l.W.size() + l.b.size();
    return n;
  }

  bool same_architecture(const Mlp& o) const {
    if (layers_.size() != o.layers_.size()) return false;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      if (layers_[k].W.rows() != o.layers_[k].W.rows() ||
          layers_[k].W.cols() != o.layers_[k].W.cols() ||
          layers_[k].act != o.layers_[k].act)
        return false;
    }
    return true;
  }

  // Per layer: W row-major, then b.
  std::vector<Tensor> export_tensors() const {
    std::vector<Tensor> out;
    for (const Layer& l : layers_) {
      Tensor w{{static_cast<std::size_t>(l.W.rows()), static_cast<std::size_t>(l.W.cols())}, {}};
      w.data.reserve(l.W.size());
      for (Eigen::Index r = 0; r < l.W.rows(); ++r)
        for (Eigen::Index c = 0; c < l.W.cols(); ++c) w.data.push_back(l.W(r, c));
      out.push_back(std::move(w));
      Tensor bv{{static_cast<std::size_t>(l.b.size())}, {}};
      bv.data.assign(l.b.data(), l.b.data() + l.b.size());
      out.push_back(std::move(bv));
    }
    return out;
  }

  void append_params(std::vector<double>& out) const {
    for (const Tensor& t : export_tensors()) out.insert(out.end(), t.data.begin(), t.data.end());
  }

  // Consumes param_count() doubles in append_params() order.
  const double* load_params(const double* data, const double* end) {
    for (Layer& l : layers_) {
      if (end - data < l.W.size() + l.b.size()) throw Error("checkpoint-incompatible", "truncated parameters");
      for (Eigen::Index r = 0; r < l.W.rows(); ++r)
        for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = *data++;
      for (Eigen::Index r = 0; r < l.b.size(); ++r) l.b(r) = *data++;
    }
    return data;
  }

 private:
  static Eigen::MatrixXd apply(const Layer& l, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd z = (l.W * x).colwise() + l.b;
    switch (l.act) {
      case Activation::relu: return z.cwiseMax(0.0);
      case Activation::tanh: return z.array().tanh().matrix();
      case Activation::linear: return z;
    }
    return z;
  }

  std::vector<Layer> layers_;
  std::vector<Eigen::MatrixXd> inputs_;
  std::vector<Eigen::MatrixXd> outputs_;
  bool has_tape_ = false;
};

// Adam with bias correction over one network's parameters.
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Eigen::MatrixXd> mW, vW;
  std::vector<Eigen::VectorXd> mb, vb;

  AdamState() = default;
  AdamState(const Mlp& net, double learning_rate) : lr(learning_rate) {
    for (const Layer& l : net.layers()) {
      mW.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
      vW.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
      mb.push_back(Eigen::VectorXd::Zero(l.b.size()));
      vb.push_back(Eigen::VectorXd::Zero(l.b.size()));
    }
  }
};

inline void adam_step(Mlp& net, AdamState& s) {
  if (s.mW.size() != net.layers().size()) throw Error("shape");
  ++s.step;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    Layer& l = net.layers()[k];
    s.mW[k] = s.beta1 * s.mW[k] + (1.0 - s.beta1) * l.gW;
    s.vW[k] = s.beta2 * s.vW[k].array().matrix() + (1.0 - s.beta2) * l.gW.array().square().matrix();
    l.W.array() -= s.lr * (s.mW[k].array() / bc1) / ((s.vW[k].array() / bc2).sqrt() + s.eps);
    s.mb[k] = s.beta1 * s.mb[k] + (1.0 - s.beta1) * l.gb;
    s.vb[k] = s.beta2 * s.vb[k].array().matrix() + (1.0 - s.beta2) * l.gb.array().square().matrix();
    l.b.array() -= s.lr * (s.mb[k].array() / bc1) / ((s.vb[k].array() / bc2).sqrt() + s.eps);
  }
}

// Scalar Adam, used for the SAC temperature.
struct AdamScalar {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  double m = 0.0;
  double v = 0.0;

  void update(double& param, double grad) {
    ++step;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad * grad;
    const double mh = m / (1.0 - std::pow(beta1, static_cast<double>(step)));
    const double vh = v / (1.0 - std::pow(beta2, static_cast<double>(step)));
    param -= lr * mh / (std::sqrt(vh) + eps);
  }
};

// target <- rho*target + (1-rho)*online, elementwise.
inline void polyak_update(Mlp& target, const Mlp& online, double rho) {
  if (!target.same_architecture(online)) throw Error("shape");
  for (std::size_t k = 0; k < target.layers().size(); ++k) {
    target.layers()[k].W = rho * target.layers()[k].W + (1.0 - rho) * online.layers()[k].W;
    target.layers()[k].b = rho * target.layers()[k].b + (1.0 - rho) * online.layers()[k].b;
  }
}

inline nlohmann::json describe_architecture(const Mlp& net) {
  nlohmann::json dims = nlohmann::json::array();
  nlohmann::json acts = nlohmann::json::array();
  dims.push_back(net.input_dim());
  for (const Layer& l : net.layers()) {
    dims.push_back(l.W.rows());
    acts.push_back(to_string(l.act));
  }
  return {{"dims", dims}, {"activations", acts}};
}

inline bool architecture_matches(const Mlp& net, const nlohmann::json& desc) {
  return describe_architecture(net) == desc;
}

// Checkpoint file layout: 8-byte magic, little-endian u64 header length,
// JSON header, then the declared networks' parameters as raw little-endian
// 64-bit floats in header order.
inline constexpr char kCheckpointMagic[8] = {'M', 'N', 'A', 'V', 'C', 'K', 'P', 'T'};

inline void write_checkpoint(const std::string& path, nlohmann::json header,
                             const std::vector<std::pair<std::string, const Mlp*>>& nets) {
  header["format_version"] = 1;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& [name, net] : nets) {
    nlohmann::json entry = describe_architecture(*net);
    entry["name"] = name;
    list.push_back(entry);
  }
  header["networks"] = list;

  std::vector<double> params;
  for (const auto& [name, net] : nets) net->append_params(params);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write '" + path + "'");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::string htext = header.dump();
  const std::uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!out) throw Error("io", "write failed for '" + path + "'");
}

struct LoadedCheckpoint {
  nlohmann::json header;
  std::vector<double> params;

  // Loads the named network; architecture must match exactly.
  const double* cursor_for(const std::string& name) const {
    std::size_t offset = 0;
    for (const auto& entry : header.at("networks")) {
      std::size_t count = 0;
      const auto& dims = entry.at("dims");
      for (std::size_t k = 0; k + 1 < dims.size(); ++k)
        count += dims[k].get<std::size_t>() * dims[k + 1].get<std::size_t>() + dims[k + 1].get<std::size_t>();
      if (entry.at("name") == name) {
        if (offset + count > params.size()) throw Error("checkpoint-incompatible", "truncated parameters");
        return params.data() + offset;
      }
      offset += count;
    }
    throw Error("checkpoint-incompatible", "missing network '" + name + "'");
  }

  void load_into(const std::string& name, Mlp& net) const {
    for (const auto& entry : header.at("networks")) {
      if (entry.at("name") != name) continue;
      nlohmann::json desc = {{"dims", entry.at("dims")}, {"activations", entry.at("activations")}};
      if (!architecture_matches(net, desc)) throw Error("checkpoint-incompatible", "architecture mismatch for '" + name + "'");
      net.load_params(cursor_for(name), params.data() + params.size());
      return;
    }
    throw Error("checkpoint-incompatible", "missing network '" + name + "'");
  }
};

inline LoadedCheckpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw Error("checkpoint-incompatible", "bad magic");
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  LoadedCheckpoint ck;
  try {
    ck.header = nlohmann::json::parse(htext);
  } catch (const nlohmann::json::exception& e) {
    throw Error("checkpoint-incompatible", e.what());
  }
  if (ck.header.value("format_version", 0) != 1)
    throw Error("checkpoint-incompatible", "unsupported format_version");
  std::vector<char> rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (rest.size() % sizeof(double) != 0) throw Error("checkpoint-incompatible", "odd parameter payload");
  ck.params.resize(rest.size() / sizeof(double));
  std::memcpy(ck.params.data(), rest.data(), rest.size());
  return ck;
}

}  // namespace mnav
