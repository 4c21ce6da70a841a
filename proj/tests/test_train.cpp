#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "dtwapprox/data/sampling.hpp"
#include "dtwapprox/data/synth.hpp"
#include "dtwapprox/metrics/ground_truth.hpp"
#include "dtwapprox/net/checkpoint.hpp"
#include "dtwapprox/train/config.hpp"
#include "dtwapprox/train/early_stopping.hpp"
#include "dtwapprox/train/trainer.hpp"

using namespace dtwapprox;

namespace {

// Tiny preprocessed-and-sliced corpus plus ground truth inside each split.
struct TrainFixture {
  Dataset ds;
  PairGroundTruth gt;
};

TrainFixture make_fixture(std::uint64_t seed, std::uint64_t train_pairs = 60,
                          std::uint64_t val_pairs = 24, bool ragged = false) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.signals_per_class = 12;
  cfg.signals_per_subject = 2;
  TrainFixture f;
  Dataset raw = synth_gen(cfg);
  // Squash into [0,1] crudely; the trainer only requires bounded inputs.
  for (auto& s : raw.signals)
    s.values = ((s.values.array() * 0.2f) + 0.5f).cwiseMax(0.f).cwiseMin(1.f);
  Rng slice_rng(seed + 1);
  f.ds = ragged ? sample_lengths(raw, 256, 280, slice_rng) : slice_fixed(raw, 256, slice_rng);

  Rng pair_rng(seed + 2);
  auto pairs = sample_split_pairs(f.ds, Split::train, train_pairs, pair_rng);
  const auto val = sample_split_pairs(f.ds, Split::val, val_pairs, pair_rng);
  pairs.insert(pairs.end(), val.begin(), val.end());
  f.gt = build_ground_truth(f.ds.signals, pairs);
  return f;
}

TrainConfig desk_config() {
  TrainConfig cfg;
  cfg.L = 256;
  cfg.H = 16;
  cfg.batch_size = 16;
  cfg.lr = 1e-3;
  cfg.max_epochs = 3;
  cfg.patience = 3;
  cfg.seed = 5;
  cfg.n_signals = 36;
  cfg.n_pairs = 60;
  cfg.n_signals_val = 6;
  cfg.n_pairs_val = 24;
  cfg.n_signals_test = 6;
  cfg.n_pairs_test = 1;
  return cfg;
}

std::vector<PairGroundTruth::Entry> val_entries(const TrainFixture& f) {
  std::vector<PairGroundTruth::Entry> out;
  for (const auto& e : f.gt.entries)
    if (f.ds.split[e.a] == Split::val && f.ds.split[e.b] == Split::val) out.push_back(e);
  return out;
}

void check_report_invariants(const TrainReport& rep, double lambda) {
  REQUIRE(rep.epochs.size() >= 2);
  CHECK(rep.epochs[0].epoch == 0);
  CHECK(!rep.epochs[0].train.has_value());
  double best = 1e300;
  long best_epoch = -1;
  for (const auto& row : rep.epochs) {
    CHECK(row.val.total == row.val.approx + lambda * row.val.recon);
    CHECK(row.val.approx >= 0.0);
    CHECK(row.val.recon >= 0.0);
    if (row.train) {
      CHECK(row.train->total == row.train->approx + lambda * row.train->recon);
      CHECK(row.train->approx >= 0.0);
    }
    if (row.val.total < best) {
      best = row.val.total;
      best_epoch = row.epoch;
    }
  }
  CHECK(rep.best_val_loss == best);
  CHECK(rep.best_epoch == best_epoch);
  CHECK(rep.wall_seconds > 0.0);
}

}  // namespace

TEST_CASE("training configuration parses, echoes and validates") {
  const TrainConfig def;
  CHECK(def.L == 1000);
  CHECK(def.H == 500);
  CHECK(def.batch_size == 128);
  CHECK(def.lambda == 1.0);
  CHECK(def.lr == 1e-5);
  CHECK(def.max_epochs == 50);
  CHECK(def.patience == 8);
  CHECK(def.n_signals == 10000);
  CHECK(def.n_pairs == 1000000);

  const TrainConfig parsed = parse_train_config(
      "# a comment\n"
      "model_kind = direct\n"
      "L=256   # trailing comment\n"
      "lambda = 0.5\n"
      "\n"
      "seed = 42\n");
  CHECK(parsed.model_kind == "direct");
  CHECK(parsed.L == 256);
  CHECK(parsed.lambda == 0.5);
  CHECK(parsed.seed == 42);
  CHECK(parsed.H == 500);  // untouched keys keep defaults

  // Echo and re-parse agree field for field.
  std::string text;
  for (const auto& [k, v] : parsed.to_map()) text += k + "=" + v + "\n";
  const TrainConfig round = parse_train_config(text);
  CHECK(round.to_map() == parsed.to_map());

  CHECK_THROWS_AS(parse_train_config("no_such_key=1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_train_config("L=abc\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_train_config("L=12junk\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_train_config("just a line\n"), std::invalid_argument);

  TrainConfig bad = def;
  bad.model_kind = "mystery";
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = def;
  bad.patience = bad.max_epochs + 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = def;
  bad.lambda = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = def;
  bad.lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = def;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  TrainConfig ovr = def;
  apply_override(ovr, "H", "64");
  CHECK(ovr.H == 64);
  CHECK_THROWS_AS(apply_override(ovr, "bogus", "1"), std::invalid_argument);
  CHECK_THROWS_AS(apply_override(ovr, "seed", "-3"), std::invalid_argument);
}

TEST_CASE("early stopping fires after exactly `patience` stale epochs") {
  {
    EarlyStopper s(3);
    const double seq[] = {5, 4, 4, 4, 4};
    long stopped_at = -1;
    for (long e = 0; e < 5; ++e) {
      s.observe(e, seq[e]);
      if (s.should_stop()) {
        stopped_at = e;
        break;
      }
    }
    CHECK(stopped_at == 4);  // epochs 2,3,4 stale
    CHECK(s.best_epoch() == 1);
    CHECK(s.best() == 4.0);
  }
  {
    EarlyStopper s(2);
    for (long e = 0; e < 10; ++e) {
      s.observe(e, 10.0 - double(e));  // strictly improving
      CHECK(!s.should_stop());
    }
    CHECK(s.best_epoch() == 9);
  }
  {
    EarlyStopper s(2);  // ties never count as improvement
    s.observe(0, 3.0);
    CHECK(!s.should_stop());
    s.observe(1, 3.0);
    CHECK(!s.should_stop());
    s.observe(2, 3.0);
    CHECK(s.should_stop());
    CHECK(s.best_epoch() == 0);
  }
  {
    EarlyStopper s(2);  // improvement resets the counter
    const double seq[] = {5, 4, 4, 3, 3, 3};
    long stopped_at = -1;
    for (long e = 0; e < 6; ++e) {
      s.observe(e, seq[e]);
      if (s.should_stop()) {
        stopped_at = e;
        break;
      }
    }
    CHECK(stopped_at == 5);
    CHECK(s.best_epoch() == 3);
  }
}

TEST_CASE("mean squared error matches the analytic uniform-target value") {
  Eigen::VectorXd pred(3), target(3);
  pred << 1, 2, 3;
  target << 1, 2, 5;
  CHECK(mean_squared_error(pred, target) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

  // Constant 0.5 against uniform targets: E[(0.5 - U)^2] = 1/12.
  Rng rng(8);
  const Eigen::Index n = 20000;
  Eigen::VectorXd u(n);
  for (Eigen::Index i = 0; i < n; ++i) u(i) = rng.uniform(0.0, 1.0);
  const double mse = mean_squared_error(Eigen::VectorXd::Constant(n, 0.5), u);
  CHECK(std::abs(mse - 1.0 / 12.0) < 0.005);

  CHECK_THROWS_AS(mean_squared_error(pred, Eigen::VectorXd(2)), std::invalid_argument);
}

TEST_CASE("siamese training reports a consistent curve and best checkpoint") {
  const TrainFixture f = make_fixture(21);
  TrainConfig cfg = desk_config();
  const TrainResult res = train_siamese(cfg, f.ds, f.gt);

  check_report_invariants(res.report, cfg.lambda);
  CHECK(res.report.model_kind == "siamese");
  CHECK(res.report.n_train_pairs == 60);
  CHECK(res.report.n_val_pairs == 24);

  CHECK(res.checkpoint.kind == "siamese");
  REQUIRE(res.checkpoint.has_section("encoder"));
  REQUIRE(res.checkpoint.has_section("decoder"));
  CHECK(res.checkpoint.best_val_loss == res.report.best_val_loss);
  CHECK(res.checkpoint.config_echo == cfg.to_map());

  // The checkpoint holds the parameters of the best epoch: re-evaluating it
  // reproduces that epoch's recorded validation losses exactly.
  const auto val = val_entries(f);
  REQUIRE(val.size() == 24);
  const ValLosses v = validate(res.checkpoint, f.ds, val, cfg.batch_size);
  const EpochRow& best_row = res.report.epochs[std::size_t(res.report.best_epoch)];
  CHECK(v.approx_mse == best_row.val.approx);
  CHECK(v.recon_mse == best_row.val.recon);

  // Repeated validation is bitwise stable.
  const ValLosses v2 = validate(res.checkpoint, f.ds, val, cfg.batch_size);
  CHECK(v2.approx_mse == v.approx_mse);
  CHECK(v2.recon_mse == v.recon_mse);
}

TEST_CASE("same seed, same siamese loss curve and parameters") {
  const TrainFixture f = make_fixture(22);
  TrainConfig cfg = desk_config();
  cfg.max_epochs = 2;
  cfg.patience = 2;
  const TrainResult a = train_model(cfg, f.ds, f.gt);
  const TrainResult b = train_model(cfg, f.ds, f.gt);
  CHECK(losses_csv(a.report) == losses_csv(b.report));
  CHECK(checkpoint_param_hash(a.checkpoint) == checkpoint_param_hash(b.checkpoint));

  TrainConfig other = cfg;
  other.seed = 999;
  const TrainResult c = train_model(other, f.ds, f.gt);
  CHECK(losses_csv(c.report) != losses_csv(a.report));
}

TEST_CASE("lambda zero trains the encoder and leaves the decoder untouched") {
  const TrainFixture f = make_fixture(23);
  TrainConfig cfg = desk_config();
  cfg.lambda = 0.0;
  cfg.max_epochs = 2;
  cfg.patience = 2;
  const TrainResult res = train_siamese(cfg, f.ds, f.gt);
  check_report_invariants(res.report, 0.0);

  const ModelSection& dec = res.checkpoint.section("decoder");
  CHECK(dec.adam.t == 0);  // the optimizer never touched it
  for (const auto& m : dec.adam.m) CHECK(m.isZero(0.f));
  CHECK(res.checkpoint.section("encoder").adam.t > 0);

  // Validation still reports reconstruction (the untrained decoder's).
  CHECK(res.report.epochs.back().val.recon > 0.0);
  // Training-loss rows carry no reconstruction term when lambda is zero.
  CHECK(res.report.epochs.back().train->recon == 0.0);
}

TEST_CASE("with lambda positive the decoder receives gradient") {
  const TrainFixture f = make_fixture(24, 20, 8);
  TrainConfig cfg = desk_config();
  cfg.max_epochs = 1;
  cfg.patience = 1;
  const TrainResult res = train_siamese(cfg, f.ds, f.gt);
  const ModelSection& dec = res.checkpoint.section("decoder");
  if (res.report.best_epoch == 0) {
    // Best snapshot predates training; gradient flow is still visible in the
    // report row for epoch 1.
    CHECK(res.report.epochs.size() >= 2);
  } else {
    CHECK(dec.adam.t > 0);
    bool any_nonzero = false;
    for (const auto& m : dec.adam.m) any_nonzero = any_nonzero || !m.isZero(0.f);
    CHECK(any_nonzero);
  }
}

TEST_CASE("direct training mirrors the siamese contract") {
  const TrainFixture f = make_fixture(25);
  TrainConfig cfg = desk_config();
  cfg.model_kind = "direct";
  const TrainResult res = train_model(cfg, f.ds, f.gt);

  check_report_invariants(res.report, cfg.lambda);
  CHECK(res.report.model_kind == "direct");
  CHECK(res.checkpoint.kind == "direct");
  REQUIRE(res.checkpoint.has_section("direct"));
  for (const auto& row : res.report.epochs) CHECK(row.val.recon == 0.0);

  const auto val = val_entries(f);
  const ValLosses v = validate(res.checkpoint, f.ds, val, cfg.batch_size);
  const EpochRow& best_row = res.report.epochs[std::size_t(res.report.best_epoch)];
  CHECK(v.approx_mse == best_row.val.approx);
  CHECK(v.recon_mse == 0.0);

  const TrainResult again = train_model(cfg, f.ds, f.gt);
  CHECK(losses_csv(again.report) == losses_csv(res.report));
  CHECK(checkpoint_param_hash(again.checkpoint) == checkpoint_param_hash(res.checkpoint));
}

TEST_CASE("both trainers handle ragged signal lengths") {
  const TrainFixture f = make_fixture(26, 20, 8, /*ragged=*/true);
  TrainConfig cfg = desk_config();
  cfg.max_epochs = 1;
  cfg.patience = 1;
  cfg.batch_size = 8;

  const TrainResult s = train_siamese(cfg, f.ds, f.gt);
  CHECK(s.report.epochs.size() == 2);
  cfg.model_kind = "direct";
  const TrainResult d = train_direct(cfg, f.ds, f.gt);
  CHECK(d.report.epochs.size() == 2);
}

TEST_CASE("trainers reject bad ground truth and missing validation pairs") {
  const TrainFixture f = make_fixture(27, 10, 4);
  TrainConfig cfg = desk_config();
  cfg.max_epochs = 1;
  cfg.patience = 1;

  PairGroundTruth bad = f.gt;
  bad.entries[0].value = 1.5f;
  CHECK_THROWS_AS(train_siamese(cfg, f.ds, bad), std::invalid_argument);

  PairGroundTruth oob = f.gt;
  oob.entries[0].a = 10000;
  CHECK_THROWS_AS(train_direct(cfg, f.ds, oob), std::invalid_argument);

  // Strip the val-split pairs: early stopping has nothing to observe.
  PairGroundTruth train_only;
  for (const auto& e : f.gt.entries)
    if (f.ds.split[e.a] == Split::train && f.ds.split[e.b] == Split::train)
      train_only.entries.push_back(e);
  CHECK_THROWS_AS(train_siamese(cfg, f.ds, train_only), std::invalid_argument);

  TrainConfig unknown = cfg;
  unknown.model_kind = "mystery";
  CHECK_THROWS_AS(train_model(unknown, f.ds, f.gt), std::invalid_argument);
}

TEST_CASE("an absurd learning rate aborts with a diagnostic instead of NaN spam") {
  const TrainFixture f = make_fixture(28, 12, 6);
  TrainConfig cfg = desk_config();
  cfg.lr = 1e12;
  cfg.max_epochs = 4;
  cfg.patience = 4;
  CHECK_THROWS_AS(train_siamese(cfg, f.ds, f.gt), std::runtime_error);
}

TEST_CASE("loss curve serializations carry the full report") {
  const TrainFixture f = make_fixture(29, 12, 6);
  TrainConfig cfg = desk_config();
  cfg.max_epochs = 2;
  cfg.patience = 2;
  const TrainResult res = train_siamese(cfg, f.ds, f.gt);

  const std::string csv = losses_csv(res.report);
  CHECK(csv.rfind("epoch,train_approx,train_recon,train_total,val_approx,val_recon,val_total\n",
                  0) == 0);
  CHECK(csv.find("\n0,,,,") != std::string::npos);  // baseline row has no train columns
  const std::size_t rows = std::count(csv.begin(), csv.end(), '\n');
  CHECK(rows == res.report.epochs.size() + 1);

  const nlohmann::json j = report_to_json(res.report);
  CHECK(j.at("model_kind") == "siamese");
  CHECK(j.at("epochs").size() == res.report.epochs.size());
  CHECK(j.at("epochs")[0].at("train").is_null());
  CHECK(!j.at("epochs")[1].at("train").is_null());
  CHECK(j.at("best_epoch").get<long>() == res.report.best_epoch);
  CHECK(j.at("best_val_loss").get<double>() == res.report.best_val_loss);
}
