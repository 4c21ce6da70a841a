#include "dtwapprox/eval/knn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "dtwapprox/util/fs.hpp"

namespace dtwapprox {

namespace {

std::vector<int> sorted_class_ids(const std::vector<const TimeSeries*>& signals,
                                  const char* who) {
  std::set<int> ids;
  for (const TimeSeries* s : signals) {
    if (!s->label)
      throw std::invalid_argument(std::string(who) + ": signal '" + s->id + "' has no label");
    ids.insert(*s->label);
  }
  return {ids.begin(), ids.end()};
}

// Majority vote over the k nearest candidates. `dist_of(j)` is the distance
// to train position j, labels[j] its class.
int vote_k_nearest(const std::function<double(std::size_t)>& dist_of,
                   const std::vector<int>& labels, std::size_t n_train, int k) {
  std::vector<std::pair<double, std::size_t>> order(n_train);
  for (std::size_t j = 0; j < n_train; ++j) order[j] = {dist_of(j), j};
  const std::size_t take = std::min<std::size_t>(std::size_t(k), n_train);
  std::partial_sort(order.begin(), order.begin() + long(take), order.end());

  std::map<int, std::pair<int, double>> tally;  // class -> (votes, distance sum)
  for (std::size_t s = 0; s < take; ++s) {
    auto& t = tally[labels[order[s].second]];
    t.first += 1;
    t.second += order[s].first;
  }
  int best_class = 0;
  int best_votes = -1;
  double best_mean = 0.0;
  for (const auto& [cls, t] : tally) {
    const double mean = t.second / t.first;
    // More votes wins; then the smaller mean distance; then the lower id.
    // Map order makes the id tie-break implicit.
    if (t.first > best_votes || (t.first == best_votes && mean < best_mean)) {
      best_class = cls;
      best_votes = t.first;
      best_mean = mean;
    }
  }
  return best_class;
}

// Per-class F1 over a fixed class universe; a class with no true and no
// predicted members scores 0 by the absent-class rule.
std::vector<double> per_class_f1(const std::vector<int>& truth, const std::vector<int>& pred,
                                 const std::vector<int>& class_ids) {
  std::vector<double> f1(class_ids.size(), 0.0);
  for (std::size_t c = 0; c < class_ids.size(); ++c) {
    const int cls = class_ids[c];
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool t = truth[i] == cls, p = pred[i] == cls;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    if (2 * tp + fp + fn > 0) f1[c] = 2.0 * double(tp) / double(2 * tp + fp + fn);
  }
  return f1;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

}  // namespace

KnnSplitScore knn_eval_split(const MetricHandle& metric, const std::vector<TimeSeries>& train,
                             const std::vector<TimeSeries>& test, int k, unsigned workers) {
  if (k < 1) throw std::invalid_argument("knn: k must be positive");
  if (train.empty() || test.empty())
    throw std::invalid_argument("knn: train and test splits must be non-empty");

  std::vector<const TimeSeries*> all;
  for (const TimeSeries& s : train) all.push_back(&s);
  for (const TimeSeries& s : test) all.push_back(&s);

  KnnSplitScore out;
  out.class_ids = sorted_class_ids(all, "knn");

  std::set<int> in_train;
  for (const TimeSeries& s : train) in_train.insert(*s.label);
  for (const int cls : out.class_ids)
    if (!in_train.count(cls))
      out.warnings.push_back("class " + std::to_string(cls) + " absent from the train split");

  const Eigen::MatrixXd D = cross_distance_matrix(metric, test, train, workers);
  std::vector<int> train_labels(train.size());
  for (std::size_t j = 0; j < train.size(); ++j) train_labels[j] = *train[j].label;

  std::vector<int> truth(test.size()), pred(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    truth[i] = *test[i].label;
    pred[i] = vote_k_nearest([&](std::size_t j) { return D(Eigen::Index(i), Eigen::Index(j)); },
                             train_labels, train.size(), k);
  }
  out.class_f1 = per_class_f1(truth, pred, out.class_ids);
  out.macro_f1 = mean_of(out.class_f1);
  return out;
}

ClassifReport knn_macro_f1(const MetricHandle& metric,
                           const std::vector<TimeSeries>& train_signals,
                           const std::vector<TimeSeries>& test_signals, int k, int reps,
                           const Rng& rng, unsigned workers) {
  if (k < 1) throw std::invalid_argument("knn: k must be positive");
  if (reps < 1) throw std::invalid_argument("knn: need at least one repetition");

  std::vector<TimeSeries> pool = train_signals;
  pool.insert(pool.end(), test_signals.begin(), test_signals.end());
  if (pool.size() < 2) throw std::invalid_argument("knn: need at least two signals");

  std::vector<const TimeSeries*> ptrs;
  for (const TimeSeries& s : pool) ptrs.push_back(&s);

  ClassifReport rep;
  rep.metric = metric.name;
  rep.k = k;
  rep.class_ids = sorted_class_ids(ptrs, "knn");

  const Eigen::MatrixXd D = distance_matrix(metric, pool, workers);
  const std::size_t P = pool.size();
  const std::size_t n_train = (P + 1) / 2;

  for (int r = 0; r < reps; ++r) {
    Rng sub = rng.fork(std::uint64_t(r));
    std::vector<std::size_t> perm(P);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 0; i + 1 < P; ++i)
      std::swap(perm[i], perm[i + std::size_t(sub.below(P - i))]);

    std::vector<std::size_t> train_pos(perm.begin(), perm.begin() + long(n_train));
    std::vector<int> train_labels(n_train);
    std::set<int> in_train;
    for (std::size_t j = 0; j < n_train; ++j) {
      train_labels[j] = *pool[train_pos[j]].label;
      in_train.insert(train_labels[j]);
    }
    for (const int cls : rep.class_ids)
      if (!in_train.count(cls))
        rep.warnings.push_back("repetition " + std::to_string(r) + ": class " +
                               std::to_string(cls) + " absent from the train split");

    std::vector<int> truth, pred;
    truth.reserve(P - n_train);
    pred.reserve(P - n_train);
    for (std::size_t i = n_train; i < P; ++i) {
      const std::size_t q = perm[i];
      truth.push_back(*pool[q].label);
      pred.push_back(vote_k_nearest(
          [&](std::size_t j) { return D(Eigen::Index(q), Eigen::Index(train_pos[j])); },
          train_labels, n_train, k));
    }
    rep.per_rep_class_f1.push_back(per_class_f1(truth, pred, rep.class_ids));
    rep.per_rep_macro_f1.push_back(mean_of(rep.per_rep_class_f1.back()));
  }

  rep.mean_macro_f1 = mean_of(rep.per_rep_macro_f1);
  double ss = 0.0;
  for (const double v : rep.per_rep_macro_f1)
    ss += (v - rep.mean_macro_f1) * (v - rep.mean_macro_f1);
  rep.stddev_macro_f1 = std::sqrt(ss / double(rep.per_rep_macro_f1.size()));
  return rep;
}

nlohmann::json knn_to_json(const ClassifReport& report) {
  return nlohmann::json{{"metric", report.metric},
                        {"k", report.k},
                        {"class_ids", report.class_ids},
                        {"per_rep_macro_f1", report.per_rep_macro_f1},
                        {"per_rep_class_f1", report.per_rep_class_f1},
                        {"mean_macro_f1", report.mean_macro_f1},
                        {"stddev_macro_f1", report.stddev_macro_f1},
                        {"warnings", report.warnings}};
}

std::string knn_csv(const std::vector<ClassifReport>& reports) {
  std::string out = "metric,k,reps,mean_macro_f1,stddev_macro_f1\n";
  for (const ClassifReport& r : reports) {
    out += r.metric + "," + std::to_string(r.k) + "," +
           std::to_string(r.per_rep_macro_f1.size()) + "," + fmt_g9(r.mean_macro_f1) + "," +
           fmt_g9(r.stddev_macro_f1) + "\n";
  }
  return out;
}

}  // namespace dtwapprox
