#include "dtwapprox/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dtwapprox/rng.hpp"

namespace dtwapprox {

namespace {

std::vector<std::pair<double, double>> default_bands(int n_classes, double sample_rate) {
  std::vector<std::pair<double, double>> bands;
  for (int c = 0; c < n_classes; ++c) {
    const double center = 1.5 * std::pow(1.9, c);
    bands.emplace_back(center / 1.25, center * 1.25);
  }
  if (bands.back().second >= sample_rate / 2.0)
    throw std::invalid_argument(
        "synth_gen: too many classes for the sample rate, bands reach the Nyquist limit");
  return bands;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_classes < 1) throw std::invalid_argument("synth_gen: need at least one class");
  if (signals_per_class < 1 && total_signals == 0)
    throw std::invalid_argument("synth_gen: need a positive signal count");
  if (min_len < 2 || max_len < min_len)
    throw std::invalid_argument("synth_gen: need 2 <= min_len <= max_len");
  if (sample_rate <= 0) throw std::invalid_argument("synth_gen: sample rate must be positive");
  if (waves_per_signal < 1) throw std::invalid_argument("synth_gen: need at least one wave");
  if (noise_level < 0 || outlier_rate < 0 || outlier_rate > 1)
    throw std::invalid_argument("synth_gen: bad noise or outlier setting");
  if (signals_per_subject < 1)
    throw std::invalid_argument("synth_gen: need at least one signal per subject");
  if (train_frac <= 0 || val_frac < 0 || train_frac + val_frac >= 1)
    throw std::invalid_argument("synth_gen: split fractions must leave room for a test set");
  if (!class_bands.empty() && int(class_bands.size()) != n_classes)
    throw std::invalid_argument("synth_gen: one frequency band per class required");
}

Dataset synth_gen(const SynthConfig& cfg) {
  cfg.validate();
  const auto bands =
      cfg.class_bands.empty() ? default_bands(cfg.n_classes, cfg.sample_rate) : cfg.class_bands;
  for (const auto& [lo, hi] : bands)
    if (lo <= 0 || hi <= lo || hi >= cfg.sample_rate / 2.0)
      throw std::invalid_argument("synth_gen: class band outside (0, sample_rate/2)");

  const std::uint64_t total = cfg.total_signals > 0
                                  ? cfg.total_signals
                                  : std::uint64_t(cfg.n_classes) * cfg.signals_per_class;

  Dataset ds;
  ds.provenance = "synthetic banded oscillators, seed " + std::to_string(cfg.seed);
  ds.signals.reserve(total);
  ds.split.assign(total, Split::train);

  Rng rng(cfg.seed);
  std::vector<int> per_class_count(cfg.n_classes, 0);
  for (std::uint64_t i = 0; i < total; ++i) {
    const int cls = int(i % std::uint64_t(cfg.n_classes));
    const auto [f_lo, f_hi] = bands[cls];
    Rng sig_rng = rng.fork(i + 1);

    const Eigen::Index len = Eigen::Index(sig_rng.uniform_int(long(cfg.min_len), long(cfg.max_len)));
    Eigen::VectorXf v = Eigen::VectorXf::Zero(len);

    const double baseline = sig_rng.uniform(-0.3, 0.3);
    for (int w = 0; w < cfg.waves_per_signal; ++w) {
      const double freq = sig_rng.uniform(f_lo, f_hi);
      const double phase = sig_rng.uniform(0.0, 2.0 * M_PI);
      const double amp = (w == 0 ? 1.0 : 0.35) * sig_rng.uniform(0.8, 1.2);
      const double omega = 2.0 * M_PI * freq / cfg.sample_rate;
      for (Eigen::Index t = 0; t < len; ++t)
        v(t) += float(amp * std::sin(omega * double(t) + phase));
    }

    double ar = 0.0;  // smooth noise: first-order autoregression
    for (Eigen::Index t = 0; t < len; ++t) {
      ar = 0.85 * ar + cfg.noise_level * sig_rng.normal();
      v(t) += float(baseline + ar);
    }

    for (Eigen::Index t = 0; t < len; ++t)
      if (sig_rng.uniform(0.0, 1.0) < cfg.outlier_rate) {
        const double spike = sig_rng.uniform(3.0, 6.0) * (sig_rng.below(2) ? 1.0 : -1.0);
        v(t) += float(spike);
      }

    TimeSeries s;
    s.values = std::move(v);
    s.label = cls;
    const int within = per_class_count[cls]++;
    s.subject = "c" + std::to_string(cls) + "s" + std::to_string(within / cfg.signals_per_subject);
    s.id = "syn" + std::to_string(i);
    ds.signals.push_back(std::move(s));
  }

  // Subject-level split assignment, per class, so no subject straddles splits
  // and every class appears in every split.
  for (int cls = 0; cls < cfg.n_classes; ++cls) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ds.signals.size(); ++i)
      if (*ds.signals[i].label == cls) members.push_back(i);
    const int n_subjects = (int(members.size()) + cfg.signals_per_subject - 1) /
                           std::max(1, cfg.signals_per_subject);
    std::vector<int> subject_order(n_subjects);
    std::iota(subject_order.begin(), subject_order.end(), 0);
    Rng split_rng = rng.fork(0x5bUL + std::uint64_t(cls));
    std::shuffle(subject_order.begin(), subject_order.end(), split_rng.engine());

    const auto subject_of = [&](std::size_t member_pos) {
      return int(member_pos) / cfg.signals_per_subject;
    };
    std::vector<Split> subject_split(n_subjects, Split::test);
    std::size_t assigned = 0;
    const std::size_t want_train = std::size_t(std::round(cfg.train_frac * double(members.size())));
    const std::size_t want_val = std::size_t(std::round(cfg.val_frac * double(members.size())));
    for (int so : subject_order) {
      std::size_t size = 0;
      for (std::size_t p = 0; p < members.size(); ++p)
        if (subject_of(p) == so) ++size;
      if (assigned < want_train)
        subject_split[so] = Split::train;
      else if (assigned < want_train + want_val)
        subject_split[so] = Split::val;
      else
        subject_split[so] = Split::test;
      assigned += size;
    }
    for (std::size_t p = 0; p < members.size(); ++p)
      ds.split[members[p]] = subject_split[subject_of(p)];
  }

  ds.validate();
  return ds;
}

}  // namespace dtwapprox
