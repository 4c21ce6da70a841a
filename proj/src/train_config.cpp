#include "dtwapprox/train/config.hpp"

#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dtwapprox/util/fs.hpp"

namespace dtwapprox {

namespace {

long parse_long(const std::string& v) {
  std::size_t pos = 0;
  const long x = std::stol(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return x;
}

std::uint64_t parse_u64(const std::string& v) {
  if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
  std::size_t pos = 0;
  const unsigned long long x = std::stoull(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return x;
}

double parse_double(const std::string& v) {
  std::size_t pos = 0;
  const double x = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return x;
}

struct Field {
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

// Single source of truth for key names: serialization and parsing share it.
const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      {"model_kind", [](const TrainConfig& c) { return c.model_kind; },
       [](TrainConfig& c, const std::string& v) { c.model_kind = v; }},
      {"L", [](const TrainConfig& c) { return std::to_string(c.L); },
       [](TrainConfig& c, const std::string& v) { c.L = parse_long(v); }},
      {"H", [](const TrainConfig& c) { return std::to_string(c.H); },
       [](TrainConfig& c, const std::string& v) { c.H = parse_long(v); }},
      {"batch_size", [](const TrainConfig& c) { return std::to_string(c.batch_size); },
       [](TrainConfig& c, const std::string& v) { c.batch_size = parse_long(v); }},
      {"lambda", [](const TrainConfig& c) { return fmt_g17(c.lambda); },
       [](TrainConfig& c, const std::string& v) { c.lambda = parse_double(v); }},
      {"lr", [](const TrainConfig& c) { return fmt_g17(c.lr); },
       [](TrainConfig& c, const std::string& v) { c.lr = parse_double(v); }},
      {"max_epochs", [](const TrainConfig& c) { return std::to_string(c.max_epochs); },
       [](TrainConfig& c, const std::string& v) { c.max_epochs = parse_long(v); }},
      {"patience", [](const TrainConfig& c) { return std::to_string(c.patience); },
       [](TrainConfig& c, const std::string& v) { c.patience = parse_long(v); }},
      {"seed", [](const TrainConfig& c) { return std::to_string(c.seed); },
       [](TrainConfig& c, const std::string& v) { c.seed = parse_u64(v); }},
      {"n_signals", [](const TrainConfig& c) { return std::to_string(c.n_signals); },
       [](TrainConfig& c, const std::string& v) { c.n_signals = parse_long(v); }},
      {"n_pairs", [](const TrainConfig& c) { return std::to_string(c.n_pairs); },
       [](TrainConfig& c, const std::string& v) { c.n_pairs = parse_u64(v); }},
      {"n_signals_val", [](const TrainConfig& c) { return std::to_string(c.n_signals_val); },
       [](TrainConfig& c, const std::string& v) { c.n_signals_val = parse_long(v); }},
      {"n_pairs_val", [](const TrainConfig& c) { return std::to_string(c.n_pairs_val); },
       [](TrainConfig& c, const std::string& v) { c.n_pairs_val = parse_u64(v); }},
      {"n_signals_test", [](const TrainConfig& c) { return std::to_string(c.n_signals_test); },
       [](TrainConfig& c, const std::string& v) { c.n_signals_test = parse_long(v); }},
      {"n_pairs_test", [](const TrainConfig& c) { return std::to_string(c.n_pairs_test); },
       [](TrainConfig& c, const std::string& v) { c.n_pairs_test = parse_u64(v); }},
  };
  return f;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void apply_override(TrainConfig& cfg, const std::string& key, const std::string& value) {
  for (const Field& f : fields())
    if (key == f.key) {
      try {
        f.set(cfg, value);
      } catch (const std::exception&) {
        throw std::invalid_argument("config: bad value '" + value + "' for key '" + key + "'");
      }
      return;
    }
  throw std::invalid_argument("config: unknown key '" + key + "'");
}

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value");
    apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  return parse_train_config(read_file(path));
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  std::map<std::string, std::string> m;
  for (const Field& f : fields()) m[f.key] = f.get(*this);
  return m;
}

void TrainConfig::validate() const {
  if (model_kind != "siamese" && model_kind != "direct")
    throw std::invalid_argument("config: model_kind must be 'siamese' or 'direct', got '" +
                                model_kind + "'");
  if (L < 1 || H < 1 || batch_size < 1)
    throw std::invalid_argument("config: L, H and batch_size must be positive");
  if (lambda < 0) throw std::invalid_argument("config: lambda must be nonnegative");
  if (!(lr > 0)) throw std::invalid_argument("config: lr must be positive");
  if (max_epochs < 1) throw std::invalid_argument("config: max_epochs must be positive");
  if (patience < 1 || patience > max_epochs)
    throw std::invalid_argument("config: need 1 <= patience <= max_epochs");
  if (n_signals < 1 || n_signals_val < 1 || n_signals_test < 1)
    throw std::invalid_argument("config: signal counts must be positive");
  if (n_pairs < 1 || n_pairs_val < 1 || n_pairs_test < 1)
    throw std::invalid_argument("config: pair counts must be positive");
}

}  // namespace dtwapprox
