#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "hrgr/numerics/array.hpp"
#include "hrgr/numerics/rng.hpp"

namespace hrgr::model {

struct ModelDims {
  std::size_t hidden = 64;     // D_hidden; also the topic-vector size
  std::size_t embed = 64;      // D_embed
  std::size_t attention = 64;  // additive-attention projection size
  std::size_t regions = 16;    // P
  std::size_t feature_dim = 32;
  std::size_t vocab_size = 0;
  std::size_t n_templates = 0;
  std::size_t sentence_layers = 2;

  std::size_t n_actions() const { return 1 + n_templates; }
  void validate() const;
  std::string str() const;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Which sub-network a parameter belongs to.
enum class ParamGroup {
  Encoder,          // enc.*
  SentenceDecoder,  // sent.* except the stop head
  StopControl,      // sent.W_z, sent.b_z
  RetrievalPolicy,  // policy.W_u, policy.b_u
  Generation,       // gen.*
};

ParamGroup param_group(std::string_view name);

// Every learnable array of the network, addressable by name:
//   enc.W, enc.b
//   sent.att.{W_v,W_h,w}, sent.gru<l>.{W_xr,W_xu,W_xn,W_hr,W_hu,W_hn,b_r,b_u,b_n},
//   sent.W_q, sent.b_q, sent.W_z, sent.b_z
//   policy.W_u, policy.b_u                    (1 + n_templates outputs, 0 = generate)
//   gen.att.{W_v,W_x,W_h,w}, gen.gru.{...}, gen.W_y, gen.b_y, gen.W_e
// Vectors are 1 x n rows and weights are (in x out), so a layer is x * W + b.
class ModelParameters {
 public:
  ModelParameters() = default;
  ModelParameters(ModelDims dims, num::ParamStore tensors);

  // Weights uniform in +-1/sqrt(fan_in), biases zero, embeddings uniform in +-0.1.
  static ModelParameters init(const ModelDims& dims, num::Rng& rng);

  const ModelDims& dims() const { return dims_; }
  num::ParamStore& tensors() { return tensors_; }
  const num::ParamStore& tensors() const { return tensors_; }
  const num::Array& at(std::string_view name) const;
  std::size_t count() const;

  friend bool operator==(const ModelParameters&, const ModelParameters&) = default;

 private:
  ModelDims dims_;
  num::ParamStore tensors_;
};

}  // namespace hrgr::model
