#include "dtwapprox/eval/metric_handle.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include "dtwapprox/metrics/dtw.hpp"
#include "dtwapprox/metrics/fast_dtw.hpp"
#include "dtwapprox/metrics/ground_truth.hpp"
#include "dtwapprox/metrics/soft_dtw.hpp"
#include "dtwapprox/net/network.hpp"
#include "dtwapprox/net/topologies.hpp"
#include "dtwapprox/parallel.hpp"
#include "dtwapprox/util/fs.hpp"

namespace dtwapprox {

namespace {

double maybe_normalize(double raw, const TimeSeries& a, const TimeSeries& b, bool on) {
  return on ? normalize_dtw(raw, a.length(), b.length()) : raw;
}

std::string with_suffix(std::string base, const std::string& suffix) {
  if (!suffix.empty()) base += "@" + suffix;
  return base;
}

const ModelSection& required_section(const Checkpoint& ckpt, const std::string& name,
                                     const char* kind) {
  if (!ckpt.has_section(name))
    throw std::invalid_argument(std::string("metric ") + kind + ": checkpoint has no '" + name +
                                "' section (it holds a different model kind)");
  return ckpt.section(name);
}

// Encodes signals grouped by length, a bounded number per forward pass, and
// scatters the embeddings back into input order.
Eigen::MatrixXf embed_all(const std::shared_ptr<const Checkpoint>& ckpt,
                          const std::vector<TimeSeries>& signals) {
  constexpr std::size_t kEmbedChunk = 256;
  const ModelSection& enc = ckpt->section("encoder");
  const int H = enc.spec.layers.back().out;
  Eigen::MatrixXf Z(H, signals.size());

  std::vector<std::pair<Eigen::Index, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < signals.size(); ++i) {
    const Eigen::Index len = signals[i].length();
    auto it = std::find_if(groups.begin(), groups.end(),
                           [len](const auto& g) { return g.first == len; });
    if (it == groups.end()) {
      groups.push_back({len, {i}});
    } else {
      it->second.push_back(i);
    }
  }

  for (const auto& [len, members] : groups) {
    for (std::size_t lo = 0; lo < members.size(); lo += kEmbedChunk) {
      const std::size_t hi = std::min(members.size(), lo + kEmbedChunk);
      Batch<float> in;
      in.count = Eigen::Index(hi - lo);
      in.len = len;
      in.data.resize(1, in.count * len);
      for (std::size_t k = lo; k < hi; ++k)
        in.data.row(0).segment(Eigen::Index(k - lo) * len, len) =
            signals[members[k]].values.transpose();
      const Batch<float> out = forward(enc.spec, enc.params, std::move(in));
      for (std::size_t k = lo; k < hi; ++k)
        Z.col(Eigen::Index(members[k])) = out.data.col(Eigen::Index(k - lo));
    }
  }
  return Z;
}

}  // namespace

MetricHandle make_exact_dtw(const MetricOptions& opt) {
  MetricHandle h;
  h.name = "exact_dtw";
  h.distance = [opt](const TimeSeries& a, const TimeSeries& b) {
    return maybe_normalize(dtw_value(a.values, b.values, opt.cost), a, b, opt.normalize);
  };
  return h;
}

MetricHandle make_fast_dtw(const MetricOptions& opt) {
  if (opt.radius < 0) throw std::invalid_argument("metric fast_dtw: radius must be non-negative");
  MetricHandle h;
  h.name = "fast_dtw(r=" + std::to_string(opt.radius) + ")";
  h.distance = [opt](const TimeSeries& a, const TimeSeries& b) {
    return maybe_normalize(fast_dtw(a.values, b.values, opt.radius, opt.cost).value, a, b,
                           opt.normalize);
  };
  return h;
}

MetricHandle make_soft_dtw(const MetricOptions& opt) {
  if (!(opt.gamma > 0.0)) throw std::invalid_argument("metric soft_dtw: gamma must be positive");
  MetricHandle h;
  h.name = "soft_dtw(g=" + fmt_g9(opt.gamma) + ")";
  SoftDtwConfig cfg;
  cfg.gamma = opt.gamma;
  cfg.cost_kind = opt.cost;
  h.distance = [opt, cfg](const TimeSeries& a, const TimeSeries& b) {
    return maybe_normalize(soft_dtw(a.values, b.values, cfg), a, b, opt.normalize);
  };
  return h;
}

MetricHandle make_siamese_metric(std::shared_ptr<const Checkpoint> ckpt,
                                 const MetricOptions&) {
  if (!ckpt) throw std::invalid_argument("metric siamese: null checkpoint");
  const ModelSection& enc = required_section(*ckpt, "encoder", "siamese");
  MetricHandle h;
  h.name = "siamese";
  h.model = ckpt;
  h.distance = [ckpt, &enc](const TimeSeries& a, const TimeSeries& b) {
    return siamese_distance(enc.spec, enc.params, a.values, b.values);
  };
  h.batch_embed = [ckpt](const std::vector<TimeSeries>& signals) {
    return embed_all(ckpt, signals);
  };
  return h;
}

MetricHandle make_direct_metric(std::shared_ptr<const Checkpoint> ckpt,
                                const MetricOptions& opt) {
  if (!ckpt) throw std::invalid_argument("metric direct: null checkpoint");
  const ModelSection& dir = required_section(*ckpt, "direct", "direct");
  MetricHandle h;
  h.name = opt.symmetrize ? "direct(sym)" : "direct";
  h.symmetric = opt.symmetrize;
  h.model = ckpt;
  h.distance = [ckpt, &dir, opt](const TimeSeries& a, const TimeSeries& b) {
    return direct_predict(dir.spec, dir.params, a.values, b.values, opt.symmetrize);
  };
  return h;
}

MetricHandle make_custom_metric(std::string name,
                                std::function<double(const TimeSeries&, const TimeSeries&)> fn,
                                bool symmetric) {
  if (!fn) throw std::invalid_argument("metric " + name + ": null distance function");
  MetricHandle h;
  h.name = std::move(name);
  h.symmetric = symmetric;
  h.distance = std::move(fn);
  return h;
}

MetricHandle resolve_metric(const std::string& spec, const MetricOptions& opt) {
  std::string kind = spec, file;
  if (const auto at = spec.find('@'); at != std::string::npos) {
    kind = spec.substr(0, at);
    file = spec.substr(at + 1);
  }
  if (kind.rfind("model_", 0) == 0) kind = kind.substr(6);

  if (kind == "exact_dtw" || kind == "dtw") {
    if (!file.empty()) throw std::invalid_argument("metric " + kind + " takes no checkpoint");
    return make_exact_dtw(opt);
  }
  if (kind == "fast_dtw") {
    if (!file.empty()) throw std::invalid_argument("metric " + kind + " takes no checkpoint");
    return make_fast_dtw(opt);
  }
  if (kind == "soft_dtw") {
    if (!file.empty()) throw std::invalid_argument("metric " + kind + " takes no checkpoint");
    return make_soft_dtw(opt);
  }
  if (kind == "siamese" || kind == "direct") {
    if (file.empty())
      throw std::invalid_argument("metric " + kind + " needs a checkpoint: use '" + kind +
                                  "@file'");
    auto ckpt = std::make_shared<Checkpoint>(load_checkpoint(file));
    MetricHandle h = kind == "siamese" ? make_siamese_metric(std::move(ckpt), opt)
                                       : make_direct_metric(std::move(ckpt), opt);
    h.name = with_suffix(h.name, std::filesystem::path(file).filename().string());
    return h;
  }
  throw std::invalid_argument(
      "unknown metric '" + spec +
      "'; expected exact_dtw, fast_dtw, soft_dtw, siamese@file or direct@file");
}

Eigen::MatrixXd distance_matrix(const MetricHandle& metric,
                                const std::vector<TimeSeries>& signals, unsigned workers) {
  if (!metric.distance) throw std::invalid_argument("distance_matrix: unresolved metric");
  const std::size_t n = signals.size();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
  if (n < 2) return D;

  if (metric.batch_embed) {
    const Eigen::MatrixXf Z = metric.batch_embed(signals);
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = (Z.col(Eigen::Index(i)).cast<double>() -
                          Z.col(Eigen::Index(j)).cast<double>())
                             .norm();
        D(Eigen::Index(i), Eigen::Index(j)) = d;
        D(Eigen::Index(j), Eigen::Index(i)) = d;
      }
    return D;
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(metric.symmetric ? n * (n - 1) / 2 : n * (n - 1));
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = metric.symmetric ? i + 1 : 0; j < n; ++j)
      if (i != j) pairs.push_back({i, j});

  parallel_for(pairs.size(), workers, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    D(i, j) = metric.distance(signals[i], signals[j]);
  });
  if (metric.symmetric) D.triangularView<Eigen::StrictlyLower>() = D.transpose();
  return D;
}

Eigen::MatrixXd cross_distance_matrix(const MetricHandle& metric,
                                      const std::vector<TimeSeries>& rows,
                                      const std::vector<TimeSeries>& cols, unsigned workers) {
  if (!metric.distance) throw std::invalid_argument("cross_distance_matrix: unresolved metric");
  Eigen::MatrixXd D(Eigen::Index(rows.size()), Eigen::Index(cols.size()));
  if (rows.empty() || cols.empty()) return D;

  if (metric.batch_embed) {
    const Eigen::MatrixXf Zr = metric.batch_embed(rows);
    const Eigen::MatrixXf Zc = metric.batch_embed(cols);
    for (Eigen::Index r = 0; r < D.rows(); ++r)
      for (Eigen::Index c = 0; c < D.cols(); ++c)
        D(r, c) = (Zr.col(r).cast<double>() - Zc.col(c).cast<double>()).norm();
    return D;
  }

  parallel_for(rows.size() * cols.size(), workers, [&](std::size_t k) {
    const Eigen::Index r = Eigen::Index(k / cols.size());
    const Eigen::Index c = Eigen::Index(k % cols.size());
    D(r, c) = metric.distance(rows[std::size_t(r)], cols[std::size_t(c)]);
  });
  return D;
}

}  // namespace dtwapprox
