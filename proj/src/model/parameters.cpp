#include "hrgr/model/parameters.hpp"

#include <cmath>
#include <vector>

#include "hrgr/errors.hpp"

namespace hrgr::model {

namespace {

struct Spec {
  std::string name;
  std::size_t rows;
  std::size_t cols;
};

void add_gru(std::vector<Spec>& specs, const std::string& prefix, std::size_t in, std::size_t h) {
  for (const char* gate : {"r", "u", "n"}) specs.push_back({prefix + ".W_x" + gate, in, h});
  for (const char* gate : {"r", "u", "n"}) specs.push_back({prefix + ".W_h" + gate, h, h});
  for (const char* gate : {"r", "u", "n"}) specs.push_back({prefix + ".b_" + gate, 1, h});
}

std::vector<Spec> layout(const ModelDims& d) {
  std::vector<Spec> s;
  s.push_back({"enc.W", d.feature_dim, d.hidden});
  s.push_back({"enc.b", 1, d.hidden});
  s.push_back({"sent.att.W_v", d.hidden, d.attention});
  s.push_back({"sent.att.W_h", d.hidden, d.attention});
  s.push_back({"sent.att.w", d.attention, 1});
  for (std::size_t l = 0; l < d.sentence_layers; ++l) {
    add_gru(s, "sent.gru" + std::to_string(l), d.hidden, d.hidden);
  }
  s.push_back({"sent.W_q", d.hidden, d.hidden});
  s.push_back({"sent.b_q", 1, d.hidden});
  s.push_back({"sent.W_z", d.hidden, 1});
  s.push_back({"sent.b_z", 1, 1});
  s.push_back({"policy.W_u", d.hidden, d.n_actions()});
  s.push_back({"policy.b_u", 1, d.n_actions()});
  s.push_back({"gen.att.W_v", d.hidden, d.attention});
  s.push_back({"gen.att.W_x", d.embed + d.hidden, d.attention});
  s.push_back({"gen.att.W_h", d.hidden, d.attention});
  s.push_back({"gen.att.w", d.attention, 1});
  add_gru(s, "gen.gru", d.hidden + d.embed + d.hidden, d.hidden);
  s.push_back({"gen.W_y", d.hidden, d.vocab_size});
  s.push_back({"gen.b_y", 1, d.vocab_size});
  s.push_back({"gen.W_e", d.vocab_size, d.embed});
  return s;
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

}  // namespace

void ModelDims::validate() const {
  if (hidden == 0 || embed == 0 || attention == 0 || regions == 0 || feature_dim == 0) {
    throw ConfigError("model dims must be positive: " + str());
  }
  if (vocab_size < 5) throw ConfigError("model vocab_size must cover the 4 specials plus one token");
  if (sentence_layers == 0) throw ConfigError("model sentence_layers must be >= 1");
}

std::string ModelDims::str() const {
  return "{hidden=" + std::to_string(hidden) + ", embed=" + std::to_string(embed) +
         ", attention=" + std::to_string(attention) + ", regions=" + std::to_string(regions) +
         ", feature_dim=" + std::to_string(feature_dim) + ", vocab_size=" + std::to_string(vocab_size) +
         ", n_templates=" + std::to_string(n_templates) +
         ", sentence_layers=" + std::to_string(sentence_layers) + "}";
}

ParamGroup param_group(std::string_view name) {
  if (starts_with(name, "enc.")) return ParamGroup::Encoder;
  if (name == "sent.W_z" || name == "sent.b_z") return ParamGroup::StopControl;
  if (starts_with(name, "sent.")) return ParamGroup::SentenceDecoder;
  if (starts_with(name, "policy.")) return ParamGroup::RetrievalPolicy;
  if (starts_with(name, "gen.")) return ParamGroup::Generation;
  throw ContractError("unknown parameter name '" + std::string(name) + "'");
}

ModelParameters::ModelParameters(ModelDims dims, num::ParamStore tensors)
    : dims_(dims), tensors_(std::move(tensors)) {
  dims_.validate();
  const auto specs = layout(dims_);
  if (specs.size() != tensors_.size()) {
    throw DataError("parameter set has " + std::to_string(tensors_.size()) + " arrays, dims " + dims_.str() +
                    " need " + std::to_string(specs.size()));
  }
  for (const auto& s : specs) {
    auto it = tensors_.find(s.name);
    if (it == tensors_.end()) throw DataError("missing parameter '" + s.name + "'");
    if (it->second.shape() != num::Shape{s.rows, s.cols}) {
      throw DataError("parameter '" + s.name + "' has shape " + it->second.shape().str() + ", dims " +
                      dims_.str() + " need " + num::Shape{s.rows, s.cols}.str());
    }
  }
}

ModelParameters ModelParameters::init(const ModelDims& dims, num::Rng& rng) {
  dims.validate();
  num::ParamStore tensors;
  for (const auto& s : layout(dims)) {
    num::Array a = num::Array::zeros(s.rows, s.cols);
    const bool bias = s.name[s.name.rfind('.') + 1] == 'b';
    if (s.name == "gen.W_e") {
      for (double& v : a.data()) v = rng.uniform(-0.1, 0.1);
    } else if (!bias) {
      const double k = 1.0 / std::sqrt(static_cast<double>(s.rows));
      for (double& v : a.data()) v = rng.uniform(-k, k);
    }
    tensors.emplace(s.name, std::move(a));
  }
  return ModelParameters(dims, std::move(tensors));
}

const num::Array& ModelParameters::at(std::string_view name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ContractError("unknown parameter '" + std::string(name) + "'");
  return it->second;
}

std::size_t ModelParameters::count() const {
  std::size_t n = 0;
  for (const auto& [name, a] : tensors_) n += a.size();
  return n;
}

}  // namespace hrgr::model
