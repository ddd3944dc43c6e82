#pragma once

#include <span>
#include <vector>

#include "hrgr/corpus/types.hpp"
#include "hrgr/model/parameters.hpp"
#include "hrgr/numerics/tape.hpp"

namespace hrgr::model {

struct EncodedImage {
  num::Var regions;          // P x hidden, region-resolved projected features
  num::Var context;          // 1 x hidden, h^v = mean over regions
  num::Var sentence_keys;    // P x attention, regions projected for the sentence decoder
  num::Var generation_keys;  // P x attention, regions projected for the word decoder
};

struct DecoderState {
  std::vector<num::Var> layers;  // one 1 x hidden state per stacked layer; back() is the top
  num::Var top() const { return layers.back(); }
};

struct TopicState {
  num::Var q;           // 1 x hidden topic vector
  num::Var stop_logit;  // 1 x 1; z = sigmoid(stop_logit)
  double z = 0.0;
  DecoderState state;
  num::Var attention;   // 1 x P weights used for this step
};

struct WordStep {
  num::Var log_probs;  // 1 x vocab, log a_t
  num::Var hidden;     // h^g_t
};

// The network's equations, recorded on a tape. Binds every parameter on
// construction, so gradients come back for all of them (zero if unused).
class Network {
 public:
  Network(num::Tape& tape, const ModelParameters& params);

  num::Tape& tape() { return *tape_; }
  const ModelDims& dims() const { return params_->dims(); }

  // Averages the K feature grids (P x D_feat each), then maps every region
  // through tanh(x W_enc + b_enc).
  EncodedImage encode_features(std::span<const num::Array> images);

  DecoderState initial_state();

  // One sentence-decoder step: additive attention over regions driven by the
  // previous top hidden state, stacked GRU update, topic q = tanh(h W_q + b_q)
  // and stop probability z = sigmoid(h W_z + b_z).
  TopicState decode_topic_step(const EncodedImage& image, const DecoderState& prev);

  // log u_i = log_softmax(q W_u + b_u) over 1 + n_templates actions.
  num::Var action_log_probs(num::Var q);

  num::Var initial_word_state();

  // One word step conditioned on the topic, the previous word and h^g_{t-1}.
  WordStep word_step(const EncodedImage& image, num::Var q, corpus::TokenId prev_token,
                     num::Var prev_hidden);

 private:
  struct Gru {
    num::Var W_xr, W_xu, W_xn, W_hr, W_hu, W_hn, b_r, b_u, b_n;
  };

  Gru bind_gru(const std::string& prefix);
  num::Var gru(const Gru& cell, num::Var x, num::Var h);
  // softmax(w^T tanh(keys + query)) over regions; returns (weights 1 x P, context 1 x hidden).
  std::pair<num::Var, num::Var> attend(num::Var keys, num::Var query, num::Var w, num::Var regions);

  num::Tape* tape_;
  const ModelParameters* params_;

  num::Var enc_W_, enc_b_;
  num::Var sent_att_W_v_, sent_att_W_h_, sent_att_w_;
  std::vector<Gru> sent_gru_;
  num::Var W_q_, b_q_, W_z_, b_z_;
  num::Var W_u_, b_u_;
  num::Var gen_att_W_v_, gen_att_W_x_, gen_att_W_h_, gen_att_w_;
  Gru gen_gru_;
  num::Var W_y_, b_y_, W_e_;
  num::Var zero_hidden_;
};

}  // namespace hrgr::model
