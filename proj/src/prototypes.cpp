#include "dtwapprox/eval/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "dtwapprox/net/adam.hpp"
#include "dtwapprox/net/network.hpp"
#include "dtwapprox/net/topologies.hpp"
#include "dtwapprox/util/fs.hpp"

namespace dtwapprox {

namespace {

enum class ModelPath { siamese, direct };

ModelPath model_path_of(const MetricHandle& metric) {
  if (!metric.model)
    throw std::invalid_argument("prototypes: metric '" + metric.name +
                                "' is not model-backed; gradients need the network");
  if (metric.model->has_section("encoder")) return ModelPath::siamese;
  if (metric.model->has_section("direct")) return ModelPath::direct;
  throw std::invalid_argument(
      "prototypes: checkpoint holds neither an encoder nor a direct section");
}

void check_proto_set(const PrototypeSet& protos) {
  if (protos.values.empty()) throw std::invalid_argument("prototypes: empty prototype set");
  if (protos.class_ids.size() != protos.values.size())
    throw std::invalid_argument("prototypes: class ids and values disagree in count");
  for (const auto& v : protos.values)
    if (v.size() != protos.length())
      throw std::invalid_argument("prototypes: prototypes disagree in length");
}

// Softmax over negative distances per row of D (samples x prototypes).
// Returns the mean cross-entropy and fills S with the softmax weights.
double cross_entropy(const Eigen::MatrixXd& D, const std::vector<int>& class_index,
                     Eigen::MatrixXd& S) {
  const Eigen::Index B = D.rows(), K = D.cols();
  S.resize(B, K);
  double loss = 0.0;
  for (Eigen::Index n = 0; n < B; ++n) {
    const double m = D.row(n).minCoeff();
    const Eigen::ArrayXd e = (m - D.row(n).transpose().array()).exp();
    const double z = e.sum();
    S.row(n) = (e / z).transpose();
    loss += D(n, class_index[std::size_t(n)]) - m + std::log(z);
  }
  return loss / double(B);
}

// d(loss)/d(distance) for the cross-entropy averaged over the batch.
Eigen::MatrixXd ce_distance_grad(const Eigen::MatrixXd& S, const std::vector<int>& class_index) {
  Eigen::MatrixXd dD = -S / double(S.rows());
  for (Eigen::Index n = 0; n < S.rows(); ++n)
    dD(n, class_index[std::size_t(n)]) += 1.0 / double(S.rows());
  return dD;
}

Eigen::MatrixXf embed_series(const ModelSection& enc, const MetricHandle& metric,
                             const std::vector<const TimeSeries*>& series) {
  if (metric.batch_embed) {
    std::vector<TimeSeries> copy;
    copy.reserve(series.size());
    for (const TimeSeries* s : series) copy.push_back(*s);
    return metric.batch_embed(copy);
  }
  const int H = enc.spec.layers.back().out;
  Eigen::MatrixXf Z(H, Eigen::Index(series.size()));
  for (std::size_t i = 0; i < series.size(); ++i)
    Z.col(Eigen::Index(i)) = embed(enc.spec, enc.params, series[i]->values);
  return Z;
}

double siamese_loss_and_grad(const MetricHandle& metric, const PrototypeSet& protos,
                             const std::vector<const TimeSeries*>& batch,
                             const std::vector<int>& class_index, double beta,
                             std::vector<Eigen::VectorXf>* grads) {
  const ModelSection& enc = metric.model->section("encoder");
  const Eigen::Index K = Eigen::Index(protos.size());
  const Eigen::Index B = Eigen::Index(batch.size());
  const Eigen::Index Lp = protos.length();

  Batch<float> pin;
  pin.count = K;
  pin.len = Lp;
  pin.data.resize(1, K * Lp);
  for (Eigen::Index k = 0; k < K; ++k)
    pin.data.row(0).segment(k * Lp, Lp) = protos.values[std::size_t(k)].transpose();
  ForwardCache<float> cache;
  const Batch<float> pout =
      forward(enc.spec, enc.params, std::move(pin), grads ? &cache : nullptr);
  const Eigen::MatrixXd Ep = pout.data.cast<double>();
  const Eigen::MatrixXd Ex = embed_series(enc, metric, batch).cast<double>();

  Eigen::MatrixXd D(B, K);
  for (Eigen::Index n = 0; n < B; ++n)
    for (Eigen::Index k = 0; k < K; ++k) D(n, k) = (Ex.col(n) - Ep.col(k)).norm();

  Eigen::MatrixXd S;
  double loss = cross_entropy(D, class_index, S);

  Eigen::MatrixXd dEp = Eigen::MatrixXd::Zero(Ep.rows(), K);
  if (grads) {
    const Eigen::MatrixXd dD = ce_distance_grad(S, class_index);
    for (Eigen::Index n = 0; n < B; ++n)
      for (Eigen::Index k = 0; k < K; ++k)
        if (D(n, k) > 0.0) dEp.col(k) += dD(n, k) / D(n, k) * (Ep.col(k) - Ex.col(n));
  }

  if (K >= 2) {
    const double npairs = double(K) * double(K - 1) / 2.0;
    double repulsion = 0.0;
    for (Eigen::Index i = 0; i < K; ++i)
      for (Eigen::Index j = i + 1; j < K; ++j) {
        const double d = (Ep.col(i) - Ep.col(j)).norm();
        repulsion += d;
        if (grads && d > 0.0) {
          const Eigen::VectorXd dir = (-beta / npairs / d) * (Ep.col(i) - Ep.col(j));
          dEp.col(i) += dir;
          dEp.col(j) -= dir;
        }
      }
    loss -= beta * repulsion / npairs;
  }

  if (grads) {
    Batch<float> dout;
    dout.count = K;
    dout.len = 1;
    dout.data = dEp.cast<float>();
    const BackwardResult<float> back = backward(enc.spec, enc.params, cache, std::move(dout));
    grads->assign(std::size_t(K), Eigen::VectorXf());
    for (Eigen::Index k = 0; k < K; ++k)
      (*grads)[std::size_t(k)] = back.input_grad.data.row(0).segment(k * Lp, Lp).transpose();
  }
  return loss;
}

// One scored pair of the direct model; accumulates input gradients scaled by
// `w` into the prototype slots when asked (`gx` for channel one, `gy` for
// channel two; either may be null).
double direct_pair(const ModelSection& dir, const Eigen::VectorXf& x, const Eigen::VectorXf& y,
                   double w, Eigen::VectorXf* gx, Eigen::VectorXf* gy) {
  Batch<float> in = pair_input<float>(x, y);
  const bool want = gx || gy;
  ForwardCache<float> cache;
  const Batch<float> out = forward(dir.spec, dir.params, std::move(in), want ? &cache : nullptr);
  const double value = double(out.data(0, 0));
  if (want) {
    Batch<float> dout;
    dout.count = 1;
    dout.len = 1;
    dout.data.resize(1, 1);
    dout.data(0, 0) = float(w);
    const BackwardResult<float> back = backward(dir.spec, dir.params, cache, std::move(dout));
    if (gx) *gx += back.input_grad.data.row(0).head(gx->size()).transpose();
    if (gy) *gy += back.input_grad.data.row(1).head(gy->size()).transpose();
  }
  return value;
}

double direct_loss_and_grad(const MetricHandle& metric, const PrototypeSet& protos,
                            const std::vector<const TimeSeries*>& batch,
                            const std::vector<int>& class_index, double beta,
                            std::vector<Eigen::VectorXf>* grads) {
  const ModelSection& dir = metric.model->section("direct");
  const Eigen::Index K = Eigen::Index(protos.size());
  const Eigen::Index B = Eigen::Index(batch.size());
  const bool sym = metric.symmetric;

  const auto pair_distance = [&](const Eigen::VectorXf& x, const Eigen::VectorXf& y) {
    const double fxy = direct_pair(dir, x, y, 0.0, nullptr, nullptr);
    if (!sym) return fxy;
    return 0.5 * (fxy + direct_pair(dir, y, x, 0.0, nullptr, nullptr));
  };
  // Gradient of the same value with respect to the prototype slot(s).
  const auto pair_grad = [&](const Eigen::VectorXf& x, const Eigen::VectorXf& y, double w,
                             Eigen::VectorXf* gx, Eigen::VectorXf* gy) {
    if (!sym) {
      direct_pair(dir, x, y, w, gx, gy);
      return;
    }
    direct_pair(dir, x, y, 0.5 * w, gx, gy);
    direct_pair(dir, y, x, 0.5 * w, gy, gx);
  };

  Eigen::MatrixXd D(B, K);
  for (Eigen::Index n = 0; n < B; ++n)
    for (Eigen::Index k = 0; k < K; ++k)
      D(n, k) = pair_distance(batch[std::size_t(n)]->values, protos.values[std::size_t(k)]);

  Eigen::MatrixXd S;
  double loss = cross_entropy(D, class_index, S);

  if (grads) grads->assign(std::size_t(K), Eigen::VectorXf::Zero(protos.length()));

  if (grads) {
    const Eigen::MatrixXd dD = ce_distance_grad(S, class_index);
    for (Eigen::Index n = 0; n < B; ++n)
      for (Eigen::Index k = 0; k < K; ++k)
        pair_grad(batch[std::size_t(n)]->values, protos.values[std::size_t(k)], dD(n, k),
                  nullptr, &(*grads)[std::size_t(k)]);
  }

  if (K >= 2) {
    const double npairs = double(K) * double(K - 1) / 2.0;
    double repulsion = 0.0;
    for (Eigen::Index i = 0; i < K; ++i)
      for (Eigen::Index j = i + 1; j < K; ++j) {
        repulsion += pair_distance(protos.values[std::size_t(i)], protos.values[std::size_t(j)]);
        if (grads)
          pair_grad(protos.values[std::size_t(i)], protos.values[std::size_t(j)],
                    -beta / npairs, &(*grads)[std::size_t(i)], &(*grads)[std::size_t(j)]);
      }
    loss -= beta * repulsion / npairs;
  }
  return loss;
}

double nearest_prototype_accuracy(const MetricHandle& metric, const PrototypeSet& protos,
                                  const std::vector<const TimeSeries*>& val) {
  if (val.empty()) return 0.0;
  std::size_t hits = 0;
  for (const TimeSeries* s : val)
    if (classify_by_prototype(protos, metric, *s) == *s->label) ++hits;
  return double(hits) / double(val.size());
}

}  // namespace

double prototype_loss_and_grad(const MetricHandle& metric, const PrototypeSet& protos,
                               const std::vector<const TimeSeries*>& batch,
                               const std::vector<int>& batch_class_index, double beta,
                               std::vector<Eigen::VectorXf>* grads) {
  check_proto_set(protos);
  if (batch.empty()) throw std::invalid_argument("prototypes: empty batch");
  if (batch.size() != batch_class_index.size())
    throw std::invalid_argument("prototypes: batch and class indices disagree in count");
  for (const int c : batch_class_index)
    if (c < 0 || std::size_t(c) >= protos.size())
      throw std::invalid_argument("prototypes: class index out of range");
  if (!(beta >= 0.0)) throw std::invalid_argument("prototypes: beta must be non-negative");

  return model_path_of(metric) == ModelPath::siamese
             ? siamese_loss_and_grad(metric, protos, batch, batch_class_index, beta, grads)
             : direct_loss_and_grad(metric, protos, batch, batch_class_index, beta, grads);
}

int classify_by_prototype(const PrototypeSet& protos, const MetricHandle& metric,
                          const TimeSeries& x) {
  check_proto_set(protos);
  TimeSeries proto;
  int best = protos.class_ids.front();
  double best_d = 0.0;
  for (std::size_t k = 0; k < protos.size(); ++k) {
    proto.values = protos.values[k];
    proto.id = "prototype_" + std::to_string(protos.class_ids[k]);
    const double d = metric.distance(x, proto);
    if (k == 0 || d < best_d) {
      best = protos.class_ids[k];
      best_d = d;
    }
  }
  return best;
}

PrototypeResult train_prototypes(const MetricHandle& metric, const Dataset& ds,
                                 const PrototypeConfig& cfg, const Rng& rng) {
  model_path_of(metric);  // validates the handle up front
  if (cfg.epochs < 0) throw std::invalid_argument("prototypes: epochs must be non-negative");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("prototypes: lr must be positive");
  if (!(cfg.beta >= 0.0)) throw std::invalid_argument("prototypes: beta must be non-negative");
  if (cfg.batch_size < 1) throw std::invalid_argument("prototypes: batch_size must be positive");
  if (cfg.init_members < 1)
    throw std::invalid_argument("prototypes: init_members must be positive");
  ds.validate();

  const std::vector<std::size_t> train_idx = ds.indices_of(Split::train);
  const std::vector<std::size_t> val_idx = ds.indices_of(Split::val);
  if (train_idx.empty()) throw std::invalid_argument("prototypes: no train-tagged signals");
  if (val_idx.empty())
    throw std::invalid_argument("prototypes: no val-tagged signals to track accuracy on");

  const Eigen::Index Lp = ds.signals[train_idx.front()].length();
  std::map<int, std::vector<std::size_t>> members;
  for (const std::size_t i : train_idx) {
    const TimeSeries& s = ds.signals[i];
    if (!s.label)
      throw std::invalid_argument("prototypes: train signal '" + s.id + "' has no label");
    if (s.length() != Lp)
      throw std::invalid_argument(
          "prototypes: train signals must share one length to be averaged");
    members[*s.label].push_back(i);
  }
  std::vector<const TimeSeries*> val;
  for (const std::size_t i : val_idx) {
    if (!ds.signals[i].label)
      throw std::invalid_argument("prototypes: val signal '" + ds.signals[i].id +
                                  "' has no label");
    val.push_back(&ds.signals[i]);
  }

  PrototypeResult out;
  out.report.model_hash_before = checkpoint_param_hash(*metric.model);

  // Mean of up to init_members random class members (all of them when the
  // class is smaller).
  Rng init_rng = rng.fork(1);
  ParamStore<float> store;
  for (auto& [cls, idx] : members) {
    for (std::size_t i = 0; i + 1 < idx.size(); ++i)
      std::swap(idx[i], idx[i + std::size_t(init_rng.below(idx.size() - i))]);
    const std::size_t take = std::min<std::size_t>(std::size_t(cfg.init_members), idx.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(Lp);
    for (std::size_t i = 0; i < take; ++i)
      mean += ds.signals[idx[i]].values.cast<double>();
    mean /= double(take);

    out.prototypes.class_ids.push_back(cls);
    out.prototypes.values.push_back(mean.cast<float>());
    store.add({"prototype_" + std::to_string(cls), {int(Lp)},
               out.prototypes.values.back(), true});
  }

  const std::size_t K = out.prototypes.size();
  std::map<int, int> class_pos;
  for (std::size_t k = 0; k < K; ++k) class_pos[out.prototypes.class_ids[k]] = int(k);

  AdamState<float> adam = AdamState<float>::init(store, cfg.lr);
  out.report.val_accuracy.push_back(nearest_prototype_accuracy(metric, out.prototypes, val));

  std::vector<std::size_t> order = train_idx;
  const Rng shuffle_base = rng.fork(2);
  for (long epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng er = shuffle_base.fork(std::uint64_t(epoch));
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
      std::swap(order[i], order[i + std::size_t(er.below(order.size() - i))]);

    double loss_sum = 0.0;
    for (std::size_t lo = 0; lo < order.size(); lo += std::size_t(cfg.batch_size)) {
      const std::size_t hi = std::min(order.size(), lo + std::size_t(cfg.batch_size));
      std::vector<const TimeSeries*> batch;
      std::vector<int> cls_index;
      for (std::size_t i = lo; i < hi; ++i) {
        batch.push_back(&ds.signals[order[i]]);
        cls_index.push_back(class_pos.at(*ds.signals[order[i]].label));
      }
      std::vector<Eigen::VectorXf> grads;
      const double loss =
          prototype_loss_and_grad(metric, out.prototypes, batch, cls_index, cfg.beta, &grads);
      loss_sum += loss * double(batch.size());

      GradArrays<float> g(K);
      for (std::size_t k = 0; k < K; ++k) g[k] = grads[k];
      adam_step(store, g, adam);
      for (std::size_t k = 0; k < K; ++k) out.prototypes.values[k] = store[k].values;
    }
    out.report.train_loss.push_back(loss_sum / double(order.size()));
    out.report.val_accuracy.push_back(
        nearest_prototype_accuracy(metric, out.prototypes, val));
  }

  out.report.model_hash_after = checkpoint_param_hash(*metric.model);
  if (out.report.model_hash_after != out.report.model_hash_before)
    throw std::logic_error("prototypes: the frozen model's parameters changed during training");
  return out;
}

nlohmann::json prototypes_to_json(const PrototypeResult& result) {
  nlohmann::json protos = nlohmann::json::array();
  for (std::size_t k = 0; k < result.prototypes.size(); ++k) {
    std::vector<float> vals(result.prototypes.values[k].begin(),
                            result.prototypes.values[k].end());
    protos.push_back(
        {{"class_id", result.prototypes.class_ids[k]}, {"values", std::move(vals)}});
  }
  return nlohmann::json{{"prototypes", protos},
                        {"length", result.prototypes.length()},
                        {"val_accuracy", result.report.val_accuracy},
                        {"train_loss", result.report.train_loss},
                        {"model_hash_before", result.report.model_hash_before},
                        {"model_hash_after", result.report.model_hash_after}};
}

std::string prototype_csv(const PrototypeReport& report) {
  std::string out = "epoch,train_loss,val_accuracy\n";
  for (std::size_t e = 0; e < report.val_accuracy.size(); ++e) {
    out += std::to_string(e) + ",";
    if (e > 0 && e - 1 < report.train_loss.size()) out += fmt_g9(report.train_loss[e - 1]);
    out += "," + fmt_g9(report.val_accuracy[e]) + "\n";
  }
  return out;
}

}  // namespace dtwapprox
