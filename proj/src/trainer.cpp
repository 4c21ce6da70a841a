#include "dtwapprox/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "dtwapprox/net/network.hpp"
#include "dtwapprox/net/topologies.hpp"
#include "dtwapprox/rng.hpp"
#include "dtwapprox/train/early_stopping.hpp"
#include "dtwapprox/util/fs.hpp"

namespace dtwapprox {

namespace {

using Entry = PairGroundTruth::Entry;
using BatchF = Batch<float>;
using StoreF = ParamStore<float>;

// Decoding a batch all at once would materialize an im2col matrix of
// embed_dim * kernel rows by samples * length columns; chunking caps that.
constexpr int kDecodeChunk = 32;

// Salts for the independent random streams derived from cfg.seed.
constexpr std::uint64_t kSaltEncoderInit = 1;
constexpr std::uint64_t kSaltDecoderInit = 2;
constexpr std::uint64_t kSaltShuffle = 3;

void check_entry(const Dataset& ds, const Entry& e) {
  if (e.a >= ds.signals.size() || e.b >= ds.signals.size())
    throw std::invalid_argument("training: ground-truth pair (" + std::to_string(e.a) + ", " +
                                std::to_string(e.b) + ") is out of range for this dataset");
  if (!(e.value >= 0.0f && e.value <= 1.0f))
    throw std::invalid_argument("training: ground-truth value " + fmt_g9(e.value) +
                                " for pair (" + std::to_string(e.a) + ", " + std::to_string(e.b) +
                                ") lies outside [0, 1]");
}

struct PairPiles {
  std::vector<Entry> train, val;
};

// Pairs inside the train split are trained on; pairs inside the val split
// drive early stopping. Pairs straddling splits or touching test are unused.
PairPiles split_pairs(const Dataset& ds, const PairGroundTruth& gt) {
  ds.validate();
  PairPiles piles;
  for (const Entry& e : gt.entries) {
    check_entry(ds, e);
    const Split sa = ds.split[e.a], sb = ds.split[e.b];
    if (sa == Split::train && sb == Split::train)
      piles.train.push_back(e);
    else if (sa == Split::val && sb == Split::val)
      piles.val.push_back(e);
  }
  if (piles.train.empty())
    throw std::invalid_argument("training: no ground-truth pairs lie inside the train split");
  if (piles.val.empty())
    throw std::invalid_argument("training: no ground-truth pairs lie inside the val split");
  return piles;
}

// Contiguous mini-batch ranges; a trailing single-pair batch is folded into
// its predecessor so batch statistics never run over one sample.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t total, long bsz) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < total; b += std::size_t(bsz))
    out.emplace_back(b, std::min(total, b + std::size_t(bsz)));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out.pop_back();
    out.back().second = total;
  }
  return out;
}

void check_finite(double approx, double recon, const char* what, long epoch) {
  if (std::isfinite(approx) && std::isfinite(recon)) return;
  throw std::runtime_error(std::string("training diverged: non-finite ") + what + " at epoch " +
                           std::to_string(epoch) + " (approx=" + fmt_g17(approx) +
                           ", recon=" + fmt_g17(recon) + "); lower the learning rate");
}

void add_grads(GradArrays<float>& into, const GradArrays<float>& g) {
  if (into.empty()) {
    into = g;
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) into[i] += g[i];
}

// ---- siamese batching ------------------------------------------------------

// Slots are embedding columns: slot 2k is pair k's left signal, 2k+1 its
// right. Equal-length slots share one network batch.
struct LengthGroup {
  Eigen::Index len = 0;
  std::vector<int> slots;
  std::vector<std::size_t> signals;
};

std::vector<LengthGroup> group_slots(const Dataset& ds, const std::vector<std::size_t>& sig) {
  std::vector<LengthGroup> groups;
  for (int slot = 0; slot < int(sig.size()); ++slot) {
    const Eigen::Index len = ds.signals[sig[slot]].length();
    auto it = std::find_if(groups.begin(), groups.end(),
                           [len](const LengthGroup& g) { return g.len == len; });
    if (it == groups.end()) {
      groups.push_back({len, {}, {}});
      it = groups.end() - 1;
    }
    it->slots.push_back(slot);
    it->signals.push_back(sig[slot]);
  }
  return groups;
}

BatchF group_input(const Dataset& ds, const LengthGroup& g) {
  BatchF b;
  b.count = int(g.slots.size());
  b.len = g.len;
  b.data.resize(1, Eigen::Index(b.count) * g.len);
  for (int s = 0; s < b.count; ++s)
    b.data.row(0).segment(Eigen::Index(s) * g.len, g.len) =
        ds.signals[g.signals[std::size_t(s)]].values.transpose();
  return b;
}

// Squared distances between slot pairs and their error gradient w.r.t. the
// embedding matrix; approx loss uses the batch mean.
double approx_loss_and_grad(const MatX<float>& Z, const Entry* pairs, std::size_t n,
                            MatX<float>* dZ) {
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const VecX<float> d = Z.col(Eigen::Index(2 * k)) - Z.col(Eigen::Index(2 * k + 1));
    const double dist = std::sqrt(double(d.squaredNorm()));
    const double err = dist - double(pairs[k].value);
    sum += err * err;
    if (dZ && dist > 0.0) {
      const float g = float(2.0 * err / double(n) / dist);
      dZ->col(Eigen::Index(2 * k)) += g * d;
      dZ->col(Eigen::Index(2 * k + 1)) -= g * d;
    }
  }
  return sum;
}

struct SiameseNets {
  NetworkSpec enc_spec, dec_spec;
  StoreF enc, dec;
};

// Decodes the given slots back to their signals in chunks. Accumulates the
// per-slot reconstruction MSE sum; in training mode also accumulates decoder
// gradients (scaled by lambda / batch) and the embedding gradient.
double decode_slots(const SiameseNets& nets, const Dataset& ds, const MatX<float>& Z,
                    const LengthGroup& g, double grad_scale, GradArrays<float>* dec_grads,
                    MatX<float>* dZ) {
  double recon_sum = 0.0;
  auto& dec_store = const_cast<StoreF&>(nets.dec);  // train-mode forward; no BN in the decoder
  const Eigen::Index H = Z.rows();  // the decoder reads embeddings as 1-channel length-H input
  const int n = int(g.slots.size());
  for (int c0 = 0; c0 < n; c0 += kDecodeChunk) {
    const int m = std::min(kDecodeChunk, n - c0);
    BatchF zin;
    zin.count = m;
    zin.len = H;
    zin.data.resize(1, Eigen::Index(m) * H);
    for (int j = 0; j < m; ++j)
      zin.data.row(0).segment(Eigen::Index(j) * H, H) =
          Z.col(g.slots[std::size_t(c0 + j)]).transpose();

    ForwardCache<float> cache;
    const bool want_grad = dec_grads != nullptr;
    BatchF xhat = forward(nets.dec_spec, dec_store, std::move(zin),
                          want_grad ? Mode::train : Mode::infer, want_grad ? &cache : nullptr,
                          g.len);

    BatchF dxh;
    if (want_grad) {
      dxh.count = m;
      dxh.len = g.len;
      dxh.data.resize(1, Eigen::Index(m) * g.len);
    }
    for (int j = 0; j < m; ++j) {
      const auto& x = ds.signals[g.signals[std::size_t(c0 + j)]].values;
      const Eigen::RowVectorXf res =
          xhat.data.row(0).segment(Eigen::Index(j) * g.len, g.len) - x.transpose();
      recon_sum += double(res.squaredNorm()) / double(g.len);
      if (want_grad)
        dxh.data.row(0).segment(Eigen::Index(j) * g.len, g.len) =
            res * float(2.0 * grad_scale / double(g.len));
    }
    if (want_grad) {
      BackwardResult<float> back = backward(nets.dec_spec, nets.dec, cache, std::move(dxh));
      add_grads(*dec_grads, back.grads);
      for (int j = 0; j < m; ++j)
        dZ->col(g.slots[std::size_t(c0 + j)]) +=
            back.input_grad.data.row(0).segment(Eigen::Index(j) * H, H).transpose();
    }
  }
  return recon_sum;
}

// One training step over a pair batch: encode, score, decode, joint update.
// Returns the batch loss sums (over pairs, not yet divided).
std::pair<double, double> siamese_step(SiameseNets& nets, AdamState<float>& enc_adam,
                                       AdamState<float>& dec_adam, const TrainConfig& cfg,
                                       const Dataset& ds, const Entry* pairs, std::size_t n) {
  std::vector<std::size_t> sig(2 * n);
  for (std::size_t k = 0; k < n; ++k) {
    sig[2 * k] = pairs[k].a;
    sig[2 * k + 1] = pairs[k].b;
  }
  const std::vector<LengthGroup> groups = group_slots(ds, sig);

  MatX<float> Z(cfg.H, Eigen::Index(2 * n));
  std::vector<ForwardCache<float>> caches(groups.size());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    BatchF out = forward(nets.enc_spec, nets.enc, group_input(ds, groups[gi]), Mode::train,
                         &caches[gi]);
    for (std::size_t s = 0; s < groups[gi].slots.size(); ++s)
      Z.col(groups[gi].slots[s]) = out.data.col(Eigen::Index(s));
  }

  MatX<float> dZ = MatX<float>::Zero(Z.rows(), Z.cols());
  const double approx_sum = approx_loss_and_grad(Z, pairs, n, &dZ);

  double recon_sum = 0.0;
  GradArrays<float> dec_grads;
  if (cfg.lambda > 0.0) {
    const double grad_scale = cfg.lambda / double(n);
    for (const LengthGroup& g : groups)
      recon_sum += decode_slots(nets, ds, Z, g, grad_scale, &dec_grads, &dZ);
  }

  GradArrays<float> enc_grads;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    BatchF dout;
    dout.count = int(groups[gi].slots.size());
    dout.len = 1;
    dout.data.resize(Z.rows(), dout.count);
    for (std::size_t s = 0; s < groups[gi].slots.size(); ++s)
      dout.data.col(Eigen::Index(s)) = dZ.col(groups[gi].slots[s]);
    BackwardResult<float> back = backward(nets.enc_spec, nets.enc, caches[gi], std::move(dout));
    add_grads(enc_grads, back.grads);
  }

  adam_step(nets.enc, enc_grads, enc_adam);
  if (cfg.lambda > 0.0) adam_step(nets.dec, dec_grads, dec_adam);
  return {approx_sum, recon_sum};
}

ValLosses validate_siamese(const SiameseNets& nets, const TrainConfig& cfg, const Dataset& ds,
                           const std::vector<Entry>& pairs) {
  double approx_sum = 0.0, recon_sum = 0.0;
  for (std::size_t b = 0; b < pairs.size(); b += std::size_t(cfg.batch_size)) {
    const std::size_t n = std::min(pairs.size() - b, std::size_t(cfg.batch_size));
    std::vector<std::size_t> sig(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
      sig[2 * k] = pairs[b + k].a;
      sig[2 * k + 1] = pairs[b + k].b;
    }
    const std::vector<LengthGroup> groups = group_slots(ds, sig);
    MatX<float> Z(cfg.H, Eigen::Index(2 * n));
    for (const LengthGroup& g : groups) {
      BatchF out = forward(nets.enc_spec, nets.enc, group_input(ds, g));
      for (std::size_t s = 0; s < g.slots.size(); ++s)
        Z.col(g.slots[s]) = out.data.col(Eigen::Index(s));
    }
    approx_sum += approx_loss_and_grad(Z, pairs.data() + b, n, nullptr);
    for (const LengthGroup& g : groups)
      recon_sum += decode_slots(nets, ds, Z, g, 0.0, nullptr, nullptr);
  }
  return {approx_sum / double(pairs.size()), recon_sum / double(pairs.size())};
}

// ---- direct-regression batching --------------------------------------------

// Stacks each pair as one two-channel sample, zero-padded on the right to the
// longest signal in the batch.
BatchF direct_input(const Dataset& ds, const Entry* pairs, std::size_t n) {
  Eigen::Index len = 0;
  for (std::size_t k = 0; k < n; ++k)
    len = std::max({len, ds.signals[pairs[k].a].length(), ds.signals[pairs[k].b].length()});
  BatchF b;
  b.count = int(n);
  b.len = len;
  b.data = MatX<float>::Zero(2, Eigen::Index(n) * len);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& xa = ds.signals[pairs[k].a].values;
    const auto& xb = ds.signals[pairs[k].b].values;
    b.data.row(0).segment(Eigen::Index(k) * len, xa.size()) = xa.transpose();
    b.data.row(1).segment(Eigen::Index(k) * len, xb.size()) = xb.transpose();
  }
  return b;
}

double direct_step(const NetworkSpec& spec, StoreF& store, AdamState<float>& adam,
                   const Dataset& ds, const Entry* pairs, std::size_t n) {
  ForwardCache<float> cache;
  BatchF out = forward(spec, store, direct_input(ds, pairs, n), Mode::train, &cache);

  double sum = 0.0;
  BatchF dout;
  dout.count = int(n);
  dout.len = 1;
  dout.data.resize(1, Eigen::Index(n));
  for (std::size_t k = 0; k < n; ++k) {
    const double err = double(out.data(0, Eigen::Index(k))) - double(pairs[k].value);
    sum += err * err;
    dout.data(0, Eigen::Index(k)) = float(2.0 * err / double(n));
  }
  BackwardResult<float> back = backward(spec, store, cache, std::move(dout));
  adam_step(store, back.grads, adam);
  return sum;
}

ValLosses validate_direct(const NetworkSpec& spec, const StoreF& store, const Dataset& ds,
                          const std::vector<Entry>& pairs, long batch_size) {
  double sum = 0.0;
  for (std::size_t b = 0; b < pairs.size(); b += std::size_t(batch_size)) {
    const std::size_t n = std::min(pairs.size() - b, std::size_t(batch_size));
    BatchF out = forward(spec, store, direct_input(ds, pairs.data() + b, n));
    for (std::size_t k = 0; k < n; ++k) {
      const double err = double(out.data(0, Eigen::Index(k))) - double(pairs[b + k].value);
      sum += err * err;
    }
  }
  return {sum / double(pairs.size()), 0.0};
}

EpochLosses to_epoch(double approx, double recon, double lambda) {
  return {approx, recon, approx + lambda * recon};
}

}  // namespace

TrainResult train_siamese(const TrainConfig& cfg, const Dataset& ds, const PairGroundTruth& gt) {
  cfg.validate();
  PairPiles piles = split_pairs(ds, gt);
  const auto t0 = std::chrono::steady_clock::now();

  SiameseNets nets;
  nets.enc_spec = build_encoder(int(cfg.H));
  nets.dec_spec = build_decoder(int(cfg.H));
  const Rng base(cfg.seed);
  {
    Rng r = base.fork(kSaltEncoderInit);
    init_params(nets.enc_spec, nets.enc, r);
  }
  {
    Rng r = base.fork(kSaltDecoderInit);
    init_params(nets.dec_spec, nets.dec, r);
  }
  AdamState<float> enc_adam = AdamState<float>::init(nets.enc, cfg.lr);
  AdamState<float> dec_adam = AdamState<float>::init(nets.dec, cfg.lr);

  TrainReport rep;
  rep.model_kind = "siamese";
  rep.n_train_pairs = piles.train.size();
  rep.n_val_pairs = piles.val.size();
  EarlyStopper stopper(cfg.patience);

  StoreF best_enc, best_dec;
  AdamState<float> best_enc_adam, best_dec_adam;
  const auto snapshot = [&]() {
    best_enc = nets.enc;
    best_dec = nets.dec;
    best_enc_adam = enc_adam;
    best_dec_adam = dec_adam;
  };
  const auto run_val = [&](long epoch) {
    const ValLosses v = validate_siamese(nets, cfg, ds, piles.val);
    check_finite(v.approx_mse, v.recon_mse, "validation loss", epoch);
    return to_epoch(v.approx_mse, v.recon_mse, cfg.lambda);
  };

  const EpochLosses v0 = run_val(0);
  rep.epochs.push_back({0, std::nullopt, v0});
  stopper.observe(0, v0.total);
  snapshot();

  std::vector<Entry> order = piles.train;
  const Rng shuffle_base = base.fork(kSaltShuffle);
  for (long epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng erng = shuffle_base.fork(std::uint64_t(epoch));
    std::shuffle(order.begin(), order.end(), erng.engine());

    double approx_sum = 0.0, recon_sum = 0.0;
    for (const auto& [lo, hi] : batch_ranges(order.size(), cfg.batch_size)) {
      const auto [a, r] =
          siamese_step(nets, enc_adam, dec_adam, cfg, ds, order.data() + lo, hi - lo);
      check_finite(a, r, "training loss", epoch);
      approx_sum += a;
      recon_sum += r;
    }
    const EpochLosses tr =
        to_epoch(approx_sum / double(order.size()), recon_sum / double(order.size()), cfg.lambda);

    const EpochLosses va = run_val(epoch);
    rep.epochs.push_back({epoch, tr, va});
    if (stopper.observe(epoch, va.total)) snapshot();
    if (stopper.should_stop()) break;
  }

  rep.best_epoch = stopper.best_epoch();
  rep.best_val_loss = stopper.best();
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  TrainResult res;
  res.checkpoint.kind = "siamese";
  res.checkpoint.best_val_loss = stopper.best();
  res.checkpoint.config_echo = cfg.to_map();
  res.checkpoint.sections.push_back(
      {"encoder", nets.enc_spec, std::move(best_enc), std::move(best_enc_adam)});
  res.checkpoint.sections.push_back(
      {"decoder", nets.dec_spec, std::move(best_dec), std::move(best_dec_adam)});
  res.report = std::move(rep);
  return res;
}

TrainResult train_direct(const TrainConfig& cfg, const Dataset& ds, const PairGroundTruth& gt) {
  cfg.validate();
  PairPiles piles = split_pairs(ds, gt);
  if (piles.train.size() < 2)
    throw std::invalid_argument("training: the direct model needs at least two training pairs");
  const auto t0 = std::chrono::steady_clock::now();

  const NetworkSpec spec = build_direct(int(cfg.H));
  StoreF store;
  const Rng base(cfg.seed);
  {
    Rng r = base.fork(kSaltEncoderInit);
    init_params(spec, store, r);
  }
  AdamState<float> adam = AdamState<float>::init(store, cfg.lr);

  TrainReport rep;
  rep.model_kind = "direct";
  rep.n_train_pairs = piles.train.size();
  rep.n_val_pairs = piles.val.size();
  EarlyStopper stopper(cfg.patience);

  StoreF best_store;
  AdamState<float> best_adam;
  const auto run_val = [&](long epoch) {
    const ValLosses v = validate_direct(spec, store, ds, piles.val, cfg.batch_size);
    check_finite(v.approx_mse, v.recon_mse, "validation loss", epoch);
    return to_epoch(v.approx_mse, v.recon_mse, cfg.lambda);
  };

  const EpochLosses v0 = run_val(0);
  rep.epochs.push_back({0, std::nullopt, v0});
  stopper.observe(0, v0.total);
  best_store = store;
  best_adam = adam;

  std::vector<Entry> order = piles.train;
  const Rng shuffle_base = base.fork(kSaltShuffle);
  for (long epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng erng = shuffle_base.fork(std::uint64_t(epoch));
    std::shuffle(order.begin(), order.end(), erng.engine());

    double sum = 0.0;
    for (const auto& [lo, hi] : batch_ranges(order.size(), cfg.batch_size)) {
      const double s = direct_step(spec, store, adam, ds, order.data() + lo, hi - lo);
      check_finite(s, 0.0, "training loss", epoch);
      sum += s;
    }
    const EpochLosses tr = to_epoch(sum / double(order.size()), 0.0, cfg.lambda);

    const EpochLosses va = run_val(epoch);
    rep.epochs.push_back({epoch, tr, va});
    if (stopper.observe(epoch, va.total)) {
      best_store = store;
      best_adam = adam;
    }
    if (stopper.should_stop()) break;
  }

  rep.best_epoch = stopper.best_epoch();
  rep.best_val_loss = stopper.best();
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  TrainResult res;
  res.checkpoint.kind = "direct";
  res.checkpoint.best_val_loss = stopper.best();
  res.checkpoint.config_echo = cfg.to_map();
  res.checkpoint.sections.push_back({"direct", spec, std::move(best_store), std::move(best_adam)});
  res.report = std::move(rep);
  return res;
}

TrainResult train_model(const TrainConfig& cfg, const Dataset& ds, const PairGroundTruth& gt) {
  cfg.validate();
  return cfg.model_kind == "direct" ? train_direct(cfg, ds, gt) : train_siamese(cfg, ds, gt);
}

ValLosses validate(const Checkpoint& ckpt, const Dataset& ds, const std::vector<Entry>& pairs,
                   long batch_size) {
  if (pairs.empty()) throw std::invalid_argument("validate: empty pair subset");
  if (batch_size < 1) throw std::invalid_argument("validate: batch_size must be positive");
  for (const Entry& e : pairs) check_entry(ds, e);

  if (ckpt.kind == "direct") {
    const ModelSection& s = ckpt.section("direct");
    return validate_direct(s.spec, s.params, ds, pairs, batch_size);
  }
  if (ckpt.kind == "siamese") {
    const ModelSection& enc = ckpt.section("encoder");
    const ModelSection& dec = ckpt.section("decoder");
    SiameseNets nets{enc.spec, dec.spec, enc.params, dec.params};
    TrainConfig cfg;  // only H and batch_size are read here
    cfg.H = enc.spec.layers.back().out;
    cfg.batch_size = batch_size;
    return validate_siamese(nets, cfg, ds, pairs);
  }
  throw std::invalid_argument("validate: unknown checkpoint kind '" + ckpt.kind + "'");
}

double mean_squared_error(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
  if (pred.size() != target.size() || pred.size() == 0)
    throw std::invalid_argument("mean_squared_error: size mismatch or empty input");
  return (pred - target).squaredNorm() / double(pred.size());
}

nlohmann::json report_to_json(const TrainReport& rep) {
  const auto losses = [](const EpochLosses& e) {
    return nlohmann::json{{"approx", e.approx}, {"recon", e.recon}, {"total", e.total}};
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const EpochRow& r : rep.epochs) {
    nlohmann::json jr{{"epoch", r.epoch}, {"val", losses(r.val)}};
    jr["train"] = r.train ? losses(*r.train) : nlohmann::json(nullptr);
    rows.push_back(std::move(jr));
  }
  return nlohmann::json{{"model_kind", rep.model_kind},
                        {"best_epoch", rep.best_epoch},
                        {"best_val_loss", rep.best_val_loss},
                        {"wall_seconds", rep.wall_seconds},
                        {"n_train_pairs", rep.n_train_pairs},
                        {"n_val_pairs", rep.n_val_pairs},
                        {"epochs", std::move(rows)}};
}

std::string losses_csv(const TrainReport& rep) {
  std::string out = "epoch,train_approx,train_recon,train_total,val_approx,val_recon,val_total\n";
  for (const EpochRow& r : rep.epochs) {
    out += std::to_string(r.epoch) + ",";
    if (r.train)
      out += fmt_g9(r.train->approx) + "," + fmt_g9(r.train->recon) + "," +
             fmt_g9(r.train->total) + ",";
    else
      out += ",,,";
    out += fmt_g9(r.val.approx) + "," + fmt_g9(r.val.recon) + "," + fmt_g9(r.val.total) + "\n";
  }
  return out;
}

}  // namespace dtwapprox
