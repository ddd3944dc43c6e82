#include "hrgr/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <cstdio>

#include "json.hpp"

#include "hrgr/corpus/dataset_io.hpp"
#include "hrgr/errors.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace hrgr::model {

namespace {

constexpr char kMagic[4] = {'H', 'R', 'G', 'R'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void read_doubles(std::span<double> out, const char* what) {
    need(out.size() * sizeof(double), what);
    std::memcpy(out.data(), bytes_.data() + pos_, out.size() * sizeof(double));
    pos_ += out.size() * sizeof(double);
  }

  bool done() const { return pos_ == bytes_.size(); }
  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(source_ + ": checkpoint " + msg + " (offset " + std::to_string(pos_) + ")");
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) fail(std::string("truncated while reading ") + what);
  }

  const std::string& bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string serialize_checkpoint(const ModelParameters& params, const CheckpointMeta& meta) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kCheckpointVersion);
  const auto& d = params.dims();
  for (const std::size_t v : {d.hidden, d.embed, d.attention, d.regions, d.feature_dim, d.vocab_size, d.n_templates,
                              d.sentence_layers}) {
    put<std::uint64_t>(out, v);
  }
  put<std::uint64_t>(out, params.tensors().size());
  for (const auto& [name, a] : params.tensors()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape().rank()));
    for (std::size_t i = 0; i < a.shape().rank(); ++i) put<std::uint64_t>(out, a.shape()[i]);
    out.append(reinterpret_cast<const char*>(a.data().data()), a.size() * sizeof(double));
  }
  const std::string footer =
      nlohmann::json{{"epoch", meta.epoch}, {"seed", meta.seed}, {"config_hash", meta.config_hash}}.dump();
  put<std::uint64_t>(out, footer.size());
  out += footer;
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source) {
  Reader r(bytes, source);
  if (r.str(4, "magic") != std::string(kMagic, 4)) r.fail("has bad magic (not an HRGR checkpoint)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    r.fail("version " + std::to_string(version) + " is not supported (expected " +
           std::to_string(kCheckpointVersion) + ")");
  }
  ModelDims d;
  for (std::size_t* f : {&d.hidden, &d.embed, &d.attention, &d.regions, &d.feature_dim, &d.vocab_size,
                         &d.n_templates, &d.sentence_layers}) {
    *f = r.get<std::uint64_t>("dims");
  }
  const auto n = r.get<std::uint64_t>("parameter count");
  num::ParamStore tensors;
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto len = r.get<std::uint32_t>("name length");
    std::string name = r.str(len, "name");
    const auto rank = r.get<std::uint32_t>("rank");
    if (rank == 0 || rank > num::Shape::kMaxRank) r.fail("parameter '" + name + "' has invalid rank");
    std::vector<std::size_t> dims(rank);
    for (auto& v : dims) {
      v = r.get<std::uint64_t>("shape");
      if (v == 0) r.fail("parameter '" + name + "' has a zero dimension");
    }
    num::Array a{num::Shape(std::span<const std::size_t>(dims))};
    r.read_doubles(a.data(), "values");
    if (!tensors.emplace(std::move(name), std::move(a)).second) r.fail("repeats a parameter name");
  }
  const auto flen = r.get<std::uint64_t>("footer length");
  const std::string footer = r.str(flen, "footer");
  if (!r.done()) r.fail("has trailing bytes");
  Checkpoint ck;
  try {
    const auto j = nlohmann::json::parse(footer);
    ck.meta.epoch = j.at("epoch").get<int>();
    ck.meta.seed = j.at("seed").get<std::uint64_t>();
    ck.meta.config_hash = j.at("config_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("footer is malformed: ") + e.what());
  }
  try {
    ck.params = ModelParameters(d, std::move(tensors));
  } catch (const ConfigError& e) {
    r.fail(e.what());
  } catch (const DataError& e) {
    r.fail(e.what());
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParameters& params, const CheckpointMeta& meta) {
  corpus::write_file(path, serialize_checkpoint(params, meta));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(corpus::read_file(path), path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelDims& expected) {
  Checkpoint ck = load_checkpoint(path);
  if (!(ck.params.dims() == expected)) {
    throw DimensionError(path.string() + ": checkpoint dims " + ck.params.dims().str() + " do not match expected " +
                    expected.str());
  }
  return ck;
}

}  // namespace hrgr::model
