#include <doctest.h>
#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "dtwapprox/data/dataset_io.hpp"
#include "dtwapprox/data/preprocess.hpp"
#include "dtwapprox/data/sampling.hpp"
#include "dtwapprox/data/synth.hpp"
#include "dtwapprox/util/fs.hpp"

using namespace dtwapprox;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() / ("dtwapprox_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

TimeSeries make_series(std::initializer_list<float> vals, std::string id) {
  TimeSeries s;
  s.values.resize(Eigen::Index(vals.size()));
  Eigen::Index i = 0;
  for (float v : vals) s.values(i++) = v;
  s.id = std::move(id);
  return s;
}

bool same_signals(const Dataset& a, const Dataset& b) {
  if (a.signals.size() != b.signals.size()) return false;
  for (std::size_t i = 0; i < a.signals.size(); ++i) {
    const TimeSeries &x = a.signals[i], &y = b.signals[i];
    if (x.id != y.id || x.label != y.label || x.subject != y.subject) return false;
    if (x.length() != y.length() || !(x.values.array() == y.values.array()).all()) return false;
  }
  return a.split == b.split && a.provenance == b.provenance;
}

}  // namespace

TEST_CASE("pooled percentiles interpolate between order statistics") {
  Dataset ds;
  ds.signals.push_back(make_series({30.f, 10.f, 50.f, 20.f, 40.f}, "a"));
  ds.split.assign(1, Split::train);
  const PreprocessStats st = compute_stats(ds);
  CHECK(st.p1 == doctest::Approx(10.4).epsilon(1e-12));
  CHECK(st.p99 == doctest::Approx(49.6).epsilon(1e-12));
  CHECK(st.lo == doctest::Approx(10.4).epsilon(1e-12));
  CHECK(st.hi == doctest::Approx(49.6).epsilon(1e-12));

  // Pooling spans signals of different lengths.
  Dataset ds2;
  ds2.signals.push_back(make_series({3.f, 1.f, 0.f, 2.f}, "a"));
  ds2.signals.push_back(make_series({5.f, 4.f}, "b"));
  ds2.split.assign(2, Split::train);
  const PreprocessStats st2 = compute_stats(ds2);
  CHECK(st2.p1 == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(st2.p99 == doctest::Approx(4.95).epsilon(1e-12));

  Dataset empty;
  CHECK_THROWS_AS(compute_stats(empty), std::invalid_argument);
}

TEST_CASE("clipping clamps into the robust range and leaves interior values alone") {
  SynthConfig cfg;
  cfg.seed = 11;
  cfg.outlier_rate = 0.01;  // plenty of spikes
  Dataset ds = synth_gen(cfg);
  const PreprocessStats st = compute_stats(ds);

  std::size_t outside = 0, total = 0;
  for (const auto& s : ds.signals)
    for (Eigen::Index i = 0; i < s.length(); ++i) {
      const double v = s.values(i);
      outside += (v < st.p1 || v > st.p99);
      ++total;
    }
  CHECK(outside > 0);               // the spikes give clipping real work
  CHECK(outside < total / 20);      // but they stay rare

  Dataset clipped = ds;
  clip(clipped, st);
  for (std::size_t k = 0; k < ds.signals.size(); ++k)
    for (Eigen::Index i = 0; i < ds.signals[k].length(); ++i) {
      const float before = ds.signals[k].values(i);
      const float after = clipped.signals[k].values(i);
      CHECK(after >= float(st.p1));
      CHECK(after <= float(st.p99));
      if (before > float(st.p1) && before < float(st.p99)) CHECK(after == before);
    }
}

TEST_CASE("amplitude scaling maps the clipped range onto the unit interval") {
  SynthConfig cfg;
  cfg.seed = 12;
  Dataset ds = synth_gen(cfg);
  const PreprocessStats st = compute_stats(ds);
  clip(ds, st);
  minmax(ds, st);

  float lo = 1e30f, hi = -1e30f;
  for (const auto& s : ds.signals) {
    lo = std::min(lo, s.values.minCoeff());
    hi = std::max(hi, s.values.maxCoeff());
  }
  CHECK(lo >= 0.f);
  CHECK(hi <= 1.f);
  CHECK(lo < 1e-3f);        // the clipped extremes are mapped to the endpoints
  CHECK(hi > 1.f - 1e-3f);

  // A constant corpus has no range to scale; it maps to zeros.
  Dataset flat;
  flat.signals.push_back(make_series({2.f, 2.f, 2.f}, "flat"));
  flat.split.assign(1, Split::train);
  const PreprocessStats fst = compute_stats(flat);
  minmax(flat, fst);
  CHECK(flat.signals[0].values.isZero(0.f));
}

TEST_CASE("preprocessing stats round trip through their file form") {
  TempDir tmp;
  PreprocessStats st{-1.25, 3.75e2, -1.1234567891234, 7.0000000001};
  save_stats(tmp.path / "stats.json", st);
  const PreprocessStats back = load_stats(tmp.path / "stats.json");
  CHECK(back.p1 == st.p1);
  CHECK(back.p99 == st.p99);
  CHECK(back.lo == st.lo);
  CHECK(back.hi == st.hi);
}

TEST_CASE("fixed-length slicing takes contiguous windows and validates lengths") {
  Rng rng(7);
  TimeSeries s = make_series({0.f, 1.f, 2.f, 3.f, 4.f, 5.f, 6.f, 7.f}, "s");
  s.label = 2;
  s.subject = "subj";

  for (int rep = 0; rep < 20; ++rep) {
    TimeSeries w = slice_fixed(s, 3, rng);
    REQUIRE(w.length() == 3);
    CHECK(w.label == s.label);
    CHECK(w.subject == s.subject);
    // Windows of the ramp are themselves ramps starting at an integer offset.
    const float off = w.values(0);
    CHECK(off == float(int(off)));
    CHECK(w.values(1) == off + 1.f);
    CHECK(w.values(2) == off + 2.f);
    CHECK(off >= 0.f);
    CHECK(off <= 5.f);
  }

  // Full-length slice returns the values unchanged.
  TimeSeries full = slice_fixed(s, 8, rng);
  CHECK((full.values.array() == s.values.array()).all());

  CHECK_THROWS_AS(slice_fixed(s, 9, rng), std::invalid_argument);
  CHECK_THROWS_AS(slice_fixed(s, 0, rng), std::invalid_argument);

  // Same seed, same windows.
  Rng r1(99), r2(99);
  SynthConfig cfg;
  cfg.seed = 5;
  cfg.signals_per_class = 20;
  Dataset ds = synth_gen(cfg);
  Dataset a = slice_fixed(ds, 256, r1);
  Dataset b = slice_fixed(ds, 256, r2);
  CHECK(same_signals(a, b));
}

TEST_CASE("per-signal length sampling stays within bounds and keeps tags") {
  SynthConfig cfg;
  cfg.seed = 6;
  cfg.signals_per_class = 10;
  Dataset ds = synth_gen(cfg);
  Rng rng(1);
  Dataset out = sample_lengths(ds, 270, 300, rng);
  REQUIRE(out.signals.size() == ds.signals.size());
  std::set<Eigen::Index> seen;
  for (std::size_t i = 0; i < out.signals.size(); ++i) {
    CHECK(out.signals[i].length() >= 270);
    CHECK(out.signals[i].length() <= 300);
    seen.insert(out.signals[i].length());
    CHECK(out.signals[i].label == ds.signals[i].label);
    CHECK(out.signals[i].subject == ds.signals[i].subject);
  }
  CHECK(out.split == ds.split);
  CHECK(seen.size() > 3);  // lengths actually vary
  CHECK_THROWS_AS(sample_lengths(ds, 300, 270, rng), std::invalid_argument);
}

TEST_CASE("pair sampling enumerates the whole grid when asked for every pair") {
  for (std::uint64_t n : {std::uint64_t(2), std::uint64_t(3)}) {
    Rng rng(42 + n);
    auto pairs = sample_pairs(n, n * n, rng);
    REQUIRE(pairs.size() == n * n);
    std::set<std::pair<std::uint32_t, std::uint32_t>> got(pairs.begin(), pairs.end());
    REQUIRE(got.size() == n * n);
    for (std::uint32_t a = 0; a < n; ++a)
      for (std::uint32_t b = 0; b < n; ++b) CHECK(got.count({a, b}) == 1);
  }
}

TEST_CASE("pair sampling is distinct, deterministic and roughly uniform") {
  Rng r1(3), r2(3);
  const auto p1 = sample_pairs(64, 2000, r1);
  const auto p2 = sample_pairs(64, 2000, r2);
  CHECK(p1 == p2);

  std::set<std::pair<std::uint32_t, std::uint32_t>> distinct(p1.begin(), p1.end());
  CHECK(distinct.size() == 2000);

  double mean_a = 0.0;
  std::set<std::uint32_t> rows;
  for (const auto& [a, b] : p1) {
    CHECK(a < 64);
    CHECK(b < 64);
    mean_a += a;
    rows.insert(a);
  }
  mean_a /= double(p1.size());
  CHECK(std::abs(mean_a - 31.5) < 2.0);  // ~5 sigma for 2000 uniform draws
  CHECK(rows.size() == 64);

  CHECK(sample_pairs(5, 0, r1).empty());
  CHECK_THROWS_AS(sample_pairs(2, 5, r1), std::invalid_argument);
  CHECK_THROWS_AS(sample_pairs(0, 0, r1), std::invalid_argument);
}

TEST_CASE("split-restricted pairs only touch signals with that tag") {
  SynthConfig cfg;
  cfg.seed = 8;
  Dataset ds = synth_gen(cfg);
  Rng rng(4);
  const auto pairs = sample_split_pairs(ds, Split::val, 200, rng);
  REQUIRE(pairs.size() == 200);
  for (const auto& [a, b] : pairs) {
    CHECK(ds.split[a] == Split::val);
    CHECK(ds.split[b] == Split::val);
  }
  Dataset no_val = ds;
  for (auto& s : no_val.split)
    if (s == Split::val) s = Split::train;
  CHECK_THROWS_AS(sample_split_pairs(no_val, Split::val, 1, rng), std::invalid_argument);
}

TEST_CASE("synthetic corpus is reproducible and seed-sensitive") {
  SynthConfig cfg;
  cfg.seed = 123;
  cfg.signals_per_class = 30;
  Dataset a = synth_gen(cfg);
  Dataset b = synth_gen(cfg);
  CHECK(same_signals(a, b));

  cfg.seed = 124;
  Dataset c = synth_gen(cfg);
  REQUIRE(c.signals.size() == a.signals.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < a.signals.size() && !any_diff; ++i)
    any_diff = !(a.signals[i].values.array() == c.signals[i].values.array()).all();
  CHECK(any_diff);
}

TEST_CASE("synthetic splits are subject-disjoint and every class reaches every split") {
  SynthConfig cfg;
  cfg.seed = 9;
  Dataset ds = synth_gen(cfg);
  REQUIRE(ds.signals.size() == 300);

  std::map<std::string, std::set<Split>> subject_splits;
  std::map<Split, std::set<int>> split_classes;
  std::map<Split, int> split_counts;
  for (std::size_t i = 0; i < ds.signals.size(); ++i) {
    subject_splits[ds.signals[i].subject].insert(ds.split[i]);
    split_classes[ds.split[i]].insert(*ds.signals[i].label);
    ++split_counts[ds.split[i]];
  }
  for (const auto& [subj, splits] : subject_splits) {
    INFO("subject ", subj);
    CHECK(splits.size() == 1);
  }
  for (Split sp : {Split::train, Split::val, Split::test}) {
    CHECK(split_classes[sp].size() == 3);
    CHECK(split_counts[sp] > 0);
  }
  // Subject granularity makes the fractions coarse; train should still be
  // clearly the biggest block.
  CHECK(split_counts[Split::train] >= 150);
  CHECK(split_counts[Split::train] <= 210);

  // Lengths honour the configured range and labels cycle round robin.
  for (std::size_t i = 0; i < ds.signals.size(); ++i) {
    CHECK(ds.signals[i].length() >= cfg.min_len);
    CHECK(ds.signals[i].length() <= cfg.max_len);
    CHECK(*ds.signals[i].label == int(i % 3));
  }
}

TEST_CASE("total signal count override distributes classes round robin") {
  SynthConfig cfg;
  cfg.seed = 2;
  cfg.total_signals = 17;
  cfg.signals_per_subject = 2;
  Dataset ds = synth_gen(cfg);
  REQUIRE(ds.signals.size() == 17);
  int per_class[3] = {0, 0, 0};
  for (const auto& s : ds.signals) ++per_class[*s.label];
  CHECK(per_class[0] == 6);
  CHECK(per_class[1] == 6);
  CHECK(per_class[2] == 5);
}

TEST_CASE("synthetic generator rejects inconsistent settings") {
  SynthConfig cfg;
  cfg.n_classes = 0;
  CHECK_THROWS_AS(synth_gen(cfg), std::invalid_argument);
  cfg = {};
  cfg.min_len = 500;
  cfg.max_len = 400;
  CHECK_THROWS_AS(synth_gen(cfg), std::invalid_argument);
  cfg = {};
  cfg.train_frac = 0.9;
  cfg.val_frac = 0.2;
  CHECK_THROWS_AS(synth_gen(cfg), std::invalid_argument);
  cfg = {};
  cfg.n_classes = 12;  // geometric bands blow past Nyquist
  CHECK_THROWS_AS(synth_gen(cfg), std::invalid_argument);
  cfg = {};
  cfg.class_bands = {{1.0, 2.0}};  // one band, three classes
  CHECK_THROWS_AS(synth_gen(cfg), std::invalid_argument);
}

TEST_CASE("dataset directory round trip preserves every field") {
  Dataset ds;
  ds.provenance = "hand built";
  {
    TimeSeries s = make_series({1.5f, -2.25f, 3e-9f, -0.f}, "a/b c");  // id needs sanitizing
    s.label = 1;
    s.subject = "s0";
    ds.signals.push_back(std::move(s));
  }
  {
    TimeSeries s = make_series({42.f}, "a_b_c");  // collides with the sanitized name above
    s.subject = "s1";                             // no label on purpose
    ds.signals.push_back(std::move(s));
  }
  {
    TimeSeries s = make_series({-1e30f, 1e-30f, 0.1f}, "");  // empty id
    s.label = 0;
    s.subject = "s1";
    ds.signals.push_back(std::move(s));
  }
  ds.split = {Split::train, Split::val, Split::test};

  TempDir tmp;
  const fs::path dir = tmp.path / "ds";
  save_dataset(dir, ds);
  REQUIRE(fs::exists(dir / "manifest.json"));
  const Dataset back = load_dataset(dir);
  CHECK(same_signals(back, ds));
  CHECK(!back.signals[1].label.has_value());

  // Saving on top of an existing directory replaces it cleanly.
  save_dataset(dir, back);
  CHECK(same_signals(load_dataset(dir), ds));

  // Synthetic corpus round trips bit for bit too.
  SynthConfig cfg;
  cfg.seed = 77;
  cfg.signals_per_class = 5;
  Dataset syn = synth_gen(cfg);
  save_dataset(tmp.path / "syn", syn);
  CHECK(same_signals(load_dataset(tmp.path / "syn"), syn));
}

TEST_CASE("dataset loading rejects broken directories") {
  TempDir tmp;
  CHECK_THROWS_AS(load_dataset(tmp.path / "missing"), std::runtime_error);

  SynthConfig cfg;
  cfg.seed = 3;
  cfg.signals_per_class = 2;
  Dataset ds = synth_gen(cfg);
  const fs::path dir = tmp.path / "ds";
  save_dataset(dir, ds);

  // Truncate one signal file: its length no longer matches the manifest.
  fs::path victim;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".f32") victim = e.path();
  REQUIRE(!victim.empty());
  const auto bytes = read_file_bytes(victim);
  std::ofstream(victim, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                std::streamsize(bytes.size() - 4));
  CHECK_THROWS_AS(load_dataset(dir), std::runtime_error);

  // A ragged byte count is rejected before the length check.
  std::ofstream(victim, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), 6);
  CHECK_THROWS_AS(load_dataset(dir), std::runtime_error);
}

TEST_CASE("text import reads one value per line") {
  TempDir tmp;
  const fs::path good = tmp.path / "sig.csv";
  atomic_write_file(good, "1.5\n\n-2e3\n3\r\n  \n0.25\n");
  Eigen::VectorXf v = load_signal_csv(good);
  REQUIRE(v.size() == 4);
  CHECK(v(0) == 1.5f);
  CHECK(v(1) == -2000.f);
  CHECK(v(2) == 3.f);
  CHECK(v(3) == 0.25f);

  const fs::path bad = tmp.path / "bad.csv";
  atomic_write_file(bad, "1.5\nxyz\n");
  CHECK_THROWS_WITH_AS(load_signal_csv(bad), doctest::Contains("line 2"), std::runtime_error);

  const fs::path junk = tmp.path / "junk.csv";
  atomic_write_file(junk, "1.5 stray\n");
  CHECK_THROWS_AS(load_signal_csv(junk), std::runtime_error);

  const fs::path blank = tmp.path / "blank.csv";
  atomic_write_file(blank, "\n\n");
  CHECK_THROWS_AS(load_signal_csv(blank), std::runtime_error);
}

TEST_CASE("signal file loading dispatches on extension") {
  TempDir tmp;
  Eigen::VectorXf v(3);
  v << 0.5f, -1.f, 3.25f;

  save_signal_f32(tmp.path / "raw.f32", v);
  CHECK((load_signal_file(tmp.path / "raw.f32").array() == v.array()).all());
  CHECK(fs::file_size(tmp.path / "raw.f32") == 12);

  atomic_write_file(tmp.path / "text.txt", "0.5\n-1\n3.25\n");
  CHECK((load_signal_file(tmp.path / "text.txt").array() == v.array()).all());
  atomic_write_file(tmp.path / "text.csv", "0.5\n-1\n3.25\n");
  CHECK((load_signal_file(tmp.path / "text.csv").array() == v.array()).all());

  atomic_write_file(tmp.path / "ragged.f32", "123456");  // not a multiple of 4 bytes
  CHECK_THROWS_AS(load_signal_f32(tmp.path / "ragged.f32"), std::runtime_error);
}

TEST_CASE("random streams fork independently") {
  Rng parent(5);
  Rng f1 = parent.fork(0), f2 = parent.fork(1), f1b = parent.fork(0);
  CHECK(f1.next_u64() == f1b.next_u64());
  CHECK(f1.next_u64() != f2.next_u64());

  // Forking never consumes parent draws.
  Rng p1(5), p2(5);
  (void)p1.fork(9);
  CHECK(p1.next_u64() == p2.next_u64());
}
