#include "dtwapprox/net/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <json.hpp>
#include <stdexcept>

#include "dtwapprox/util/fs.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

namespace dtwapprox {

using nlohmann::json;

namespace {
constexpr char kMagic[8] = {'D', 'T', 'W', 'A', 'X', '0', '0', '1'};
}

ModelSection& Checkpoint::section(const std::string& name) {
  for (auto& s : sections)
    if (s.name == name) return s;
  throw std::invalid_argument("checkpoint has no section named " + name);
}

const ModelSection& Checkpoint::section(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return s;
  throw std::invalid_argument("checkpoint has no section named " + name);
}

bool Checkpoint::has_section(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return true;
  return false;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  // Payload layout: per section, per array, the values then the first and
  // second optimizer moments, each `count` floats.
  std::vector<float> payload;
  json sections = json::array();
  std::uint64_t offset = 0;
  for (const ModelSection& s : ckpt.sections) {
    if (s.adam.m.size() != s.params.size() || s.adam.v.size() != s.params.size())
      throw std::invalid_argument("section " + s.name + ": optimizer state out of sync");
    json arrays = json::array();
    for (std::size_t i = 0; i < s.params.size(); ++i) {
      const auto& a = s.params[i];
      arrays.push_back(json{{"name", a.name},
                            {"shape", a.shape},
                            {"trainable", a.trainable},
                            {"offset", offset},
                            {"count", a.count()}});
      payload.insert(payload.end(), a.values.data(), a.values.data() + a.count());
      payload.insert(payload.end(), s.adam.m[i].data(), s.adam.m[i].data() + a.count());
      payload.insert(payload.end(), s.adam.v[i].data(), s.adam.v[i].data() + a.count());
      offset += 3 * std::uint64_t(a.count());
    }
    sections.push_back(json{{"name", s.name},
                            {"spec", json::parse(spec_to_json(s.spec))},
                            {"adam",
                             json{{"lr", s.adam.lr},
                                  {"beta1", s.adam.beta1},
                                  {"beta2", s.adam.beta2},
                                  {"eps", s.adam.eps},
                                  {"t", s.adam.t}}},
                            {"arrays", arrays}});
  }
  const json header{{"format_version", Checkpoint::kFormatVersion},
                    {"kind", ckpt.kind},
                    {"best_val_loss", ckpt.best_val_loss},
                    {"config", ckpt.config_echo},
                    {"sections", sections}};
  const std::string header_text = header.dump();

  std::string blob;
  blob.reserve(16 + header_text.size() + payload.size() * 4);
  blob.append(kMagic, sizeof(kMagic));
  const std::uint64_t hlen = header_text.size();
  blob.append(reinterpret_cast<const char*>(&hlen), 8);
  blob.append(header_text);
  blob.append(reinterpret_cast<const char*>(payload.data()), payload.size() * 4);
  atomic_write_file(path, blob);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string blob = read_file(path);
  if (blob.size() < 16 || std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  std::uint64_t hlen = 0;
  std::memcpy(&hlen, blob.data() + 8, 8);
  if (16 + hlen > blob.size())
    throw std::runtime_error("truncated checkpoint header: " + path.string());
  const json header = json::parse(blob.substr(16, hlen));
  if (header.at("format_version").get<std::uint32_t>() != Checkpoint::kFormatVersion)
    throw std::runtime_error("unsupported checkpoint format version in " + path.string());

  const char* payload = blob.data() + 16 + hlen;
  const std::uint64_t payload_floats = (blob.size() - 16 - hlen) / 4;

  Checkpoint ckpt;
  ckpt.kind = header.at("kind").get<std::string>();
  ckpt.best_val_loss = header.at("best_val_loss").get<double>();
  for (auto it = header.at("config").begin(); it != header.at("config").end(); ++it)
    ckpt.config_echo[it.key()] = it.value().get<std::string>();

  for (const json& sj : header.at("sections")) {
    ModelSection s;
    s.name = sj.at("name").get<std::string>();
    s.spec = spec_from_json(sj.at("spec").dump());
    for (const json& aj : sj.at("arrays")) {
      ParamArray<float> a;
      a.name = aj.at("name").get<std::string>();
      a.shape = aj.at("shape").get<std::vector<int>>();
      a.trainable = aj.at("trainable").get<bool>();
      const std::uint64_t offset = aj.at("offset").get<std::uint64_t>();
      const std::uint64_t count = aj.at("count").get<std::uint64_t>();
      if (offset + 3 * count > payload_floats)
        throw std::runtime_error("checkpoint payload too short: " + path.string());
      a.values.resize(Eigen::Index(count));
      std::memcpy(a.values.data(), payload + offset * 4, count * 4);
      VecX<float> m{Eigen::Index(count)}, v{Eigen::Index(count)};
      std::memcpy(m.data(), payload + (offset + count) * 4, count * 4);
      std::memcpy(v.data(), payload + (offset + 2 * count) * 4, count * 4);
      s.params.add(std::move(a));
      s.adam.m.push_back(std::move(m));
      s.adam.v.push_back(std::move(v));
    }
    const json& oj = sj.at("adam");
    s.adam.lr = oj.at("lr").get<double>();
    s.adam.beta1 = oj.at("beta1").get<double>();
    s.adam.beta2 = oj.at("beta2").get<double>();
    s.adam.eps = oj.at("eps").get<double>();
    s.adam.t = oj.at("t").get<std::int64_t>();
    ckpt.sections.push_back(std::move(s));
  }
  return ckpt;
}

std::uint64_t checkpoint_param_hash(const Checkpoint& ckpt) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const ModelSection& s : ckpt.sections)
    for (std::size_t i = 0; i < s.params.size(); ++i)
      mix(s.params[i].values.data(), std::size_t(s.params[i].count()) * 4);
  return h;
}

}  // namespace dtwapprox
