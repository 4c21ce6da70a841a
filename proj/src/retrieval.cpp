#include "dtwapprox/eval/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dtwapprox/util/fs.hpp"

namespace dtwapprox {

namespace {

// Indices of the k smallest entries of row i, skipping the diagonal; ties
// resolve toward the lower index via the (value, index) pair order.
std::vector<Eigen::Index> smallest_k(const Eigen::MatrixXd& D, Eigen::Index i, int k) {
  std::vector<std::pair<double, Eigen::Index>> order;
  order.reserve(std::size_t(D.cols()) - 1);
  for (Eigen::Index j = 0; j < D.cols(); ++j)
    if (j != i) order.push_back({D(i, j), j});
  const std::size_t take = std::min<std::size_t>(std::size_t(k), order.size());
  std::partial_sort(order.begin(), order.begin() + long(take), order.end());
  std::vector<Eigen::Index> out(take);
  for (std::size_t s = 0; s < take; ++s) out[s] = order[s].second;
  return out;
}

}  // namespace

RetrievalReport nn_retrieval_agreement(const MetricHandle& metric, const MetricHandle& reference,
                                       const std::vector<TimeSeries>& signals, std::size_t n_t,
                                       int top_k, int reps, const Rng& rng, unsigned workers) {
  if (top_k < 1) throw std::invalid_argument("retrieval: top_k must be positive");
  if (reps < 1) throw std::invalid_argument("retrieval: need at least one repetition");
  if (n_t < std::size_t(top_k) + 2)
    throw std::invalid_argument("retrieval: subset size " + std::to_string(n_t) +
                                " is too small for top_k " + std::to_string(top_k) +
                                " (need at least top_k + 2)");
  if (n_t > signals.size())
    throw std::invalid_argument("retrieval: subset size " + std::to_string(n_t) +
                                " exceeds the " + std::to_string(signals.size()) +
                                " available signals");

  RetrievalReport rep;
  rep.metric = metric.name;
  rep.reference = reference.name;
  rep.n_t = n_t;
  rep.top_k = top_k;
  rep.per_rep_pct.reserve(std::size_t(reps));

  std::vector<std::size_t> all(signals.size());
  std::iota(all.begin(), all.end(), 0);

  for (int r = 0; r < reps; ++r) {
    Rng sub = rng.fork(std::uint64_t(r));
    // Partial Fisher-Yates picks the membership; sorting then keeps "ties
    // break toward the lower index" independent of the draw order.
    std::vector<std::size_t> idx = all;
    for (std::size_t i = 0; i < n_t; ++i)
      std::swap(idx[i], idx[i + std::size_t(sub.below(idx.size() - i))]);
    std::sort(idx.begin(), idx.begin() + long(n_t));

    std::vector<TimeSeries> subset;
    subset.reserve(n_t);
    for (std::size_t i = 0; i < n_t; ++i) subset.push_back(signals[idx[i]]);

    const Eigen::MatrixXd Dm = distance_matrix(metric, subset, workers);
    const Eigen::MatrixXd Dr = distance_matrix(reference, subset, workers);

    std::size_t hits = 0;
    for (Eigen::Index i = 0; i < Eigen::Index(n_t); ++i) {
      const Eigen::Index nearest = smallest_k(Dm, i, 1).front();
      const std::vector<Eigen::Index> ref_top = smallest_k(Dr, i, top_k);
      if (std::find(ref_top.begin(), ref_top.end(), nearest) != ref_top.end()) ++hits;
    }
    rep.per_rep_pct.push_back(100.0 * double(hits) / double(n_t));
  }

  const double n = double(rep.per_rep_pct.size());
  rep.mean_pct = std::accumulate(rep.per_rep_pct.begin(), rep.per_rep_pct.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : rep.per_rep_pct) ss += (v - rep.mean_pct) * (v - rep.mean_pct);
  rep.stddev_pct = std::sqrt(ss / n);
  return rep;
}

nlohmann::json retrieval_to_json(const RetrievalReport& report) {
  return nlohmann::json{{"metric", report.metric},
                        {"reference", report.reference},
                        {"n_t", report.n_t},
                        {"top_k", report.top_k},
                        {"reps", report.per_rep_pct.size()},
                        {"per_rep_pct", report.per_rep_pct},
                        {"mean_pct", report.mean_pct},
                        {"stddev_pct", report.stddev_pct}};
}

std::string retrieval_csv(const std::vector<RetrievalReport>& reports) {
  std::string out = "metric,reference,n_t,top_k,reps,mean_pct,stddev_pct\n";
  for (const RetrievalReport& r : reports) {
    out += r.metric + "," + r.reference + "," + std::to_string(r.n_t) + "," +
           std::to_string(r.top_k) + "," + std::to_string(r.per_rep_pct.size()) + "," +
           fmt_g9(r.mean_pct) + "," + fmt_g9(r.stddev_pct) + "\n";
  }
  return out;
}

}  // namespace dtwapprox
