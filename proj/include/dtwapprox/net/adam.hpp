#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "dtwapprox/net/params.hpp"

namespace dtwapprox {

// Bias-corrected adaptive moment optimizer state, one moment pair per
// parameter array. The step counter advances before each use, so the first
// update moves every weight by about lr in the direction opposite its
// gradient sign.
template <typename Scalar>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t t = 0;
  GradArrays<Scalar> m, v;

  static AdamState init(const ParamStore<Scalar>& store, double lr, double beta1 = 0.9,
                        double beta2 = 0.999, double eps = 1e-8) {
    AdamState s;
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    s.m = zero_grads(store);
    s.v = zero_grads(store);
    return s;
  }
};

// One in-place update; non-trainable arrays are skipped. Rejects non-finite
// gradients by name so training aborts with a pointer to the culprit.
template <typename Scalar>
void adam_step(ParamStore<Scalar>& params, const GradArrays<Scalar>& grads,
               AdamState<Scalar>& st) {
  if (grads.size() != params.size() || st.m.size() != params.size())
    throw std::invalid_argument("optimizer state does not match the parameter store");
  ++st.t;
  const Scalar bc1 = Scalar(1.0 - std::pow(st.beta1, double(st.t)));
  const Scalar bc2 = Scalar(1.0 - std::pow(st.beta2, double(st.t)));
  const Scalar b1 = Scalar(st.beta1), b2 = Scalar(st.beta2);
  const Scalar lr = Scalar(st.lr), eps = Scalar(st.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    const auto& g = grads[i];
    if (g.size() != params[i].count())
      throw std::invalid_argument("gradient shape mismatch for " + params[i].name);
    if (!g.allFinite())
      throw std::runtime_error("non-finite gradient for parameter " + params[i].name);
    st.m[i] = b1 * st.m[i] + (Scalar(1) - b1) * g;
    st.v[i] = b2 * st.v[i].array() + (Scalar(1) - b2) * g.array().square();
    params[i].values.array() -=
        lr * (st.m[i].array() / bc1) / ((st.v[i].array() / bc2).sqrt() + eps);
  }
  params.bump_version();
}

}  // namespace dtwapprox
