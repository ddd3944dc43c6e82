#include "hrgr/model/network.hpp"

#include <cmath>

#include "hrgr/errors.hpp"

namespace hrgr::model {

using num::Var;

Network::Network(num::Tape& tape, const ModelParameters& params) : tape_(&tape), params_(&params) {
  auto p = [&](const std::string& name) { return tape.param(name, params.at(name)); };
  enc_W_ = p("enc.W");
  enc_b_ = p("enc.b");
  sent_att_W_v_ = p("sent.att.W_v");
  sent_att_W_h_ = p("sent.att.W_h");
  sent_att_w_ = p("sent.att.w");
  for (std::size_t l = 0; l < params.dims().sentence_layers; ++l) {
    sent_gru_.push_back(bind_gru("sent.gru" + std::to_string(l)));
  }
  W_q_ = p("sent.W_q");
  b_q_ = p("sent.b_q");
  W_z_ = p("sent.W_z");
  b_z_ = p("sent.b_z");
  W_u_ = p("policy.W_u");
  b_u_ = p("policy.b_u");
  gen_att_W_v_ = p("gen.att.W_v");
  gen_att_W_x_ = p("gen.att.W_x");
  gen_att_W_h_ = p("gen.att.W_h");
  gen_att_w_ = p("gen.att.w");
  gen_gru_ = bind_gru("gen.gru");
  W_y_ = p("gen.W_y");
  b_y_ = p("gen.b_y");
  W_e_ = p("gen.W_e");
  zero_hidden_ = tape.constant(num::Array::zeros(1, params.dims().hidden));
}

Network::Gru Network::bind_gru(const std::string& prefix) {
  auto p = [&](const char* suffix) {
    const std::string name = prefix + suffix;
    return tape_->param(name, params_->at(name));
  };
  return Gru{p(".W_xr"), p(".W_xu"), p(".W_xn"), p(".W_hr"), p(".W_hu"),
             p(".W_hn"), p(".b_r"),  p(".b_u"),  p(".b_n")};
}

// r = sigmoid(x W_xr + h W_hr + b_r)
// u = sigmoid(x W_xu + h W_hu + b_u)
// n = tanh(x W_xn + r * (h W_hn) + b_n)
// h' = n + u * (h - n)
Var Network::gru(const Gru& c, Var x, Var h) {
  auto& t = *tape_;
  const Var r = t.sigmoid(t.add(t.add(t.matmul(x, c.W_xr), t.matmul(h, c.W_hr)), c.b_r));
  const Var u = t.sigmoid(t.add(t.add(t.matmul(x, c.W_xu), t.matmul(h, c.W_hu)), c.b_u));
  const Var n = t.tanh(t.add(t.add(t.matmul(x, c.W_xn), t.mul(r, t.matmul(h, c.W_hn))), c.b_n));
  return t.add(n, t.mul(u, t.sub(h, n)));
}

std::pair<Var, Var> Network::attend(Var keys, Var query, Var w, Var regions) {
  auto& t = *tape_;
  const Var scores = t.transpose(t.matmul(t.tanh(t.add(keys, query)), w));  // 1 x P
  const Var weights = t.softmax(scores);
  return {weights, t.matmul(weights, regions)};
}

EncodedImage Network::encode_features(std::span<const num::Array> images) {
  const auto& d = dims();
  if (images.empty()) throw DimensionError("encode_features: need at least one image");
  num::Array mean = num::Array::zeros(d.regions, d.feature_dim);
  for (const auto& img : images) {
    if (img.shape() != mean.shape()) {
      throw DimensionError("encode_features: image shape " + img.shape().str() + ", model expects " +
                           mean.shape().str());
    }
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += img[i];
  }
  if (images.size() > 1) {
    for (double& v : mean.data()) v /= static_cast<double>(images.size());
  }
  auto& t = *tape_;
  EncodedImage out;
  out.regions = t.tanh(t.add(t.matmul(t.constant(std::move(mean)), enc_W_), enc_b_));
  out.context = t.mean_rows(out.regions);
  out.sentence_keys = t.matmul(out.regions, sent_att_W_v_);
  out.generation_keys = t.matmul(out.regions, gen_att_W_v_);
  return out;
}

DecoderState Network::initial_state() {
  return DecoderState{std::vector<Var>(dims().sentence_layers, zero_hidden_)};
}

TopicState Network::decode_topic_step(const EncodedImage& image, const DecoderState& prev) {
  auto& t = *tape_;
  if (prev.layers.size() != sent_gru_.size()) {
    throw DimensionError("decode_topic_step: state has " + std::to_string(prev.layers.size()) +
                         " layers, model has " + std::to_string(sent_gru_.size()));
  }
  TopicState out;
  const Var query = t.matmul(prev.top(), sent_att_W_h_);
  auto [weights, context] = attend(image.sentence_keys, query, sent_att_w_, image.regions);
  out.attention = weights;
  Var x = context;
  for (std::size_t l = 0; l < sent_gru_.size(); ++l) {
    x = gru(sent_gru_[l], x, prev.layers[l]);
    out.state.layers.push_back(x);
  }
  out.q = t.tanh(t.add(t.matmul(x, W_q_), b_q_));
  out.stop_logit = t.add(t.matmul(x, W_z_), b_z_);
  const double s = t.scalar(out.stop_logit);
  out.z = s >= 0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
  return out;
}

Var Network::action_log_probs(Var q) {
  auto& t = *tape_;
  return t.log_softmax(t.add(t.matmul(q, W_u_), b_u_));
}

Var Network::initial_word_state() { return zero_hidden_; }

WordStep Network::word_step(const EncodedImage& image, Var q, corpus::TokenId prev_token, Var prev_hidden) {
  auto& t = *tape_;
  const Var e = t.embedding(W_e_, prev_token);
  const Var eq = t.concat({e, q});
  const Var query = t.add(t.matmul(eq, gen_att_W_x_), t.matmul(prev_hidden, gen_att_W_h_));
  auto [weights, context] = attend(image.generation_keys, query, gen_att_w_, image.regions);
  const Var h = gru(gen_gru_, t.concat({context, e, q}), prev_hidden);
  return WordStep{t.log_softmax(t.add(t.matmul(h, W_y_), b_y_)), h};
}

}  // namespace hrgr::model
