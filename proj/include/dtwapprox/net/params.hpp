#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtwapprox/net/spec.hpp"
#include "dtwapprox/rng.hpp"

namespace dtwapprox {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// One named tensor, stored flat. Matrix-shaped arrays are viewed through
// Eigen maps; layout is column-major over (rows, cols) = (shape[0], rest).
template <typename Scalar>
struct ParamArray {
  std::string name;
  std::vector<int> shape;
  VecX<Scalar> values;
  bool trainable = true;

  Eigen::Index count() const { return values.size(); }

  Eigen::Map<MatX<Scalar>> matrix(Eigen::Index rows, Eigen::Index cols) {
    return Eigen::Map<MatX<Scalar>>(values.data(), rows, cols);
  }
  Eigen::Map<const MatX<Scalar>> matrix(Eigen::Index rows, Eigen::Index cols) const {
    return Eigen::Map<const MatX<Scalar>>(values.data(), rows, cols);
  }
};

// Ordered, name-addressable parameter set. The version counter advances on
// every optimizer step so gradient caches can detect staleness.
template <typename Scalar>
class ParamStore {
 public:
  std::size_t add(ParamArray<Scalar> a) {
    if (index_.count(a.name))
      throw std::invalid_argument("duplicate parameter name: " + a.name);
    const Eigen::Index expect = std::accumulate(a.shape.begin(), a.shape.end(),
                                                Eigen::Index(1), std::multiplies<>());
    if (expect != a.count())
      throw std::invalid_argument("parameter " + a.name + ": shape does not match size");
    index_.emplace(a.name, arrays_.size());
    arrays_.push_back(std::move(a));
    return arrays_.size() - 1;
  }

  ParamArray<Scalar>& at(const std::string& name) {
    return arrays_[index_of(name)];
  }
  const ParamArray<Scalar>& at(const std::string& name) const {
    return arrays_[index_of(name)];
  }
  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("unknown parameter: " + name);
    return it->second;
  }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  ParamArray<Scalar>& operator[](std::size_t i) { return arrays_[i]; }
  const ParamArray<Scalar>& operator[](std::size_t i) const { return arrays_[i]; }
  std::size_t size() const { return arrays_.size(); }

  Eigen::Index total_count() const {
    Eigen::Index n = 0;
    for (const auto& a : arrays_) n += a.count();
    return n;
  }

  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }

  template <typename Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (const auto& a : arrays_) {
      ParamArray<Other> b;
      b.name = a.name;
      b.shape = a.shape;
      b.trainable = a.trainable;
      b.values = a.values.template cast<Other>();
      out.add(std::move(b));
    }
    return out;
  }

 private:
  std::vector<ParamArray<Scalar>> arrays_;
  std::map<std::string, std::size_t> index_;
  std::uint64_t version_ = 0;
};

// Per-array gradient buffers aligned with a store's indices.
template <typename Scalar>
using GradArrays = std::vector<VecX<Scalar>>;

template <typename Scalar>
GradArrays<Scalar> zero_grads(const ParamStore<Scalar>& store) {
  GradArrays<Scalar> g(store.size());
  for (std::size_t i = 0; i < store.size(); ++i)
    g[i] = VecX<Scalar>::Zero(store[i].count());
  return g;
}

// Uniform fan-in initialization: weights U(-1/sqrt(fan_in), +1/sqrt(fan_in)),
// biases zero, norm scales one. Draws happen in layer order from the given
// stream, always in double, so float and double stores from one seed hold
// the same numbers.
template <typename Scalar>
void init_params(const NetworkSpec& spec, ParamStore<Scalar>& store, Rng& rng) {
  const auto uniform_fill = [&rng](VecX<Scalar>& v, double bound) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      v(i) = static_cast<Scalar>(rng.uniform(-bound, bound));
  };
  for (const LayerSpec& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::conv1d: {
        ParamArray<Scalar> w{param_name(l, "w"), {l.out_ch, l.in_ch, l.kernel},
                             VecX<Scalar>(Eigen::Index(l.out_ch) * l.in_ch * l.kernel), true};
        uniform_fill(w.values, 1.0 / std::sqrt(double(l.in_ch) * l.kernel));
        store.add(std::move(w));
        store.add({param_name(l, "b"), {l.out_ch}, VecX<Scalar>::Zero(l.out_ch), true});
        break;
      }
      case LayerKind::dense: {
        ParamArray<Scalar> w{param_name(l, "w"), {l.out, l.in},
                             VecX<Scalar>(Eigen::Index(l.out) * l.in), true};
        uniform_fill(w.values, 1.0 / std::sqrt(double(l.in)));
        store.add(std::move(w));
        store.add({param_name(l, "b"), {l.out}, VecX<Scalar>::Zero(l.out), true});
        break;
      }
      case LayerKind::batchnorm1d: {
        store.add({param_name(l, "gamma"), {l.channels}, VecX<Scalar>::Ones(l.channels), true});
        store.add({param_name(l, "beta"), {l.channels}, VecX<Scalar>::Zero(l.channels), true});
        store.add({param_name(l, "running_mean"), {l.channels},
                   VecX<Scalar>::Zero(l.channels), false});
        store.add({param_name(l, "running_var"), {l.channels},
                   VecX<Scalar>::Ones(l.channels), false});
        break;
      }
      default:
        break;  // no parameters
    }
  }
}

}  // namespace dtwapprox
