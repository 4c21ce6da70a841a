#include "dtwapprox/data/dataset_io.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dtwapprox/util/fs.hpp"

static_assert(std::endian::native == std::endian::little,
              "signal files assume a little-endian host");

namespace dtwapprox {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string safe_file_name(const std::string& id, std::set<std::string>& used) {
  std::string base;
  for (char c : id)
    base += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')
                ? c
                : '_';
  if (base.empty()) base = "signal";
  std::string name = base;
  int k = 1;
  while (!used.insert(name).second) name = base + "_" + std::to_string(k++);
  return name + ".f32";
}

}  // namespace

void save_signal_f32(const fs::path& path, const Eigen::VectorXf& values) {
  atomic_write_file(path, values.data(), std::size_t(values.size()) * 4);
}

Eigen::VectorXf load_signal_f32(const fs::path& path) {
  const std::vector<std::uint8_t> raw = read_file_bytes(path);
  if (raw.size() % 4 != 0)
    throw std::runtime_error("signal file " + path.string() + ": size not a multiple of 4");
  Eigen::VectorXf v(Eigen::Index(raw.size() / 4));
  std::memcpy(v.data(), raw.data(), raw.size());
  return v;
}

Eigen::VectorXf load_signal_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<float> vals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool blank = line.find_first_not_of(" \t") == std::string::npos;
    if (blank) continue;
    try {
      std::size_t pos = 0;
      const float v = std::stof(line, &pos);
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos != line.size()) throw std::invalid_argument("trailing characters");
      vals.push_back(v);
    } catch (const std::exception&) {
      throw std::runtime_error("signal file " + path.string() + ": bad value on line " +
                               std::to_string(lineno));
    }
  }
  if (vals.empty())
    throw std::runtime_error("signal file " + path.string() + ": no values");
  return Eigen::Map<const Eigen::VectorXf>(vals.data(), Eigen::Index(vals.size()));
}

Eigen::VectorXf load_signal_file(const fs::path& path) {
  const auto ext = path.extension();
  if (ext == ".csv" || ext == ".txt") return load_signal_csv(path);
  return load_signal_f32(path);
}

void save_dataset(const fs::path& dir, const Dataset& ds) {
  ds.validate();
  const fs::path tmp = dir.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  json signals = json::array();
  std::set<std::string> used;
  for (std::size_t i = 0; i < ds.signals.size(); ++i) {
    const TimeSeries& s = ds.signals[i];
    const std::string file = safe_file_name(s.id, used);
    save_signal_f32(tmp / file, s.values);
    json entry{{"id", s.id},
               {"file", file},
               {"length", s.length()},
               {"subject", s.subject},
               {"split", to_string(ds.split[i])}};
    if (s.label)
      entry["label"] = *s.label;
    else
      entry["label"] = nullptr;
    signals.push_back(std::move(entry));
  }
  const json manifest{
      {"format_version", 1}, {"provenance", ds.provenance}, {"signals", signals}};
  atomic_write_file(tmp / "manifest.json", manifest.dump(2) + "\n");

  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path mf = dir / "manifest.json";
  if (!fs::exists(mf))
    throw std::runtime_error("not a dataset directory (no manifest.json): " + dir.string());
  const json manifest = json::parse(read_file(mf));
  if (manifest.at("format_version").get<int>() != 1)
    throw std::runtime_error("unsupported dataset format version in " + dir.string());

  Dataset ds;
  ds.provenance = manifest.value("provenance", std::string{});
  for (const json& e : manifest.at("signals")) {
    TimeSeries s;
    s.id = e.at("id").get<std::string>();
    s.subject = e.value("subject", std::string{});
    if (e.contains("label") && !e.at("label").is_null()) s.label = e.at("label").get<int>();
    s.values = load_signal_f32(dir / e.at("file").get<std::string>());
    if (s.length() != e.at("length").get<Eigen::Index>())
      throw std::runtime_error("dataset " + dir.string() + ": signal '" + s.id +
                               "' length disagrees with its manifest entry");
    ds.split.push_back(split_from_string(e.at("split").get<std::string>()));
    ds.signals.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

}  // namespace dtwapprox
