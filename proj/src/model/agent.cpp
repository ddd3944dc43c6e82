#include "hrgr/model/agent.hpp"

#include <cmath>

#include "hrgr/errors.hpp"

namespace hrgr::model {

using num::Var;

Ablation parse_ablation(const std::string& s) {
  if (s == "none") return Ablation::None;
  if (s == "retrieval-only") return Ablation::RetrievalOnly;
  if (s == "generation-only") return Ablation::GenerationOnly;
  throw ConfigError("unknown ablation '" + s + "' (expected none, retrieval-only or generation-only)");
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::None: return "none";
    case Ablation::RetrievalOnly: return "retrieval-only";
    case Ablation::GenerationOnly: return "generation-only";
  }
  return "?";
}

Decision retrieval_decide(const num::Array& log_probs, DecodeMode mode, num::Rng& rng) {
  const auto row = log_probs.data();
  if (row.empty()) throw ContractError("retrieval_decide: empty action row");
  std::size_t idx = 0;
  if (mode == DecodeMode::Greedy) {
    for (std::size_t i = 1; i < row.size(); ++i) {
      if (row[i] > row[idx]) idx = i;
    }
  } else {
    std::vector<double> p(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) p[i] = std::exp(row[i]);
    idx = rng.categorical(p);
  }
  return {idx, row[idx]};
}

Var policy_log_probs(Network& net, Var q, Ablation ablation) {
  auto& t = net.tape();
  if (ablation != Ablation::RetrievalOnly) return net.action_log_probs(q);
  if (net.dims().n_templates == 0) throw ContractError("retrieval-only decoding needs a nonempty template database");
  // Applied after the softmax and renormalized again, which is the same as
  // masking the logit.
  num::Array mask = num::Array::zeros(1, net.dims().n_actions());
  mask[0] = -1e30;
  return t.log_softmax(t.add(net.action_log_probs(q), t.constant(std::move(mask))));
}

namespace {

corpus::TokenId pick_token(const num::Array& log_probs, DecodeMode mode, num::Rng& rng) {
  return static_cast<corpus::TokenId>(retrieval_decide(log_probs, mode, rng).index);
}

}  // namespace

GeneratedSentence generate_sentence(Network& net, const EncodedImage& image, Var q, DecodeMode mode, num::Rng& rng,
                                    std::size_t max_tokens) {
  auto& t = net.tape();
  GeneratedSentence out;
  Var h = net.initial_word_state();
  corpus::TokenId prev = corpus::Vocabulary::kBos;
  for (std::size_t step = 0; step < max_tokens; ++step) {
    const WordStep ws = net.word_step(image, q, prev, h);
    const corpus::TokenId tok = pick_token(t.value(ws.log_probs), mode, rng);
    out.logprobs.push_back(t.pick(ws.log_probs, tok));
    if (tok == corpus::Vocabulary::kEos) {
      out.ended = true;
      break;
    }
    out.ids.push_back(tok);
    prev = tok;
    h = ws.hidden;
  }
  return out;
}

std::vector<Var> score_sentence(Network& net, const EncodedImage& image, Var q,
                                std::span<const corpus::TokenId> ids) {
  auto& t = net.tape();
  std::vector<Var> out;
  out.reserve(ids.size());
  Var h = net.initial_word_state();
  corpus::TokenId prev = corpus::Vocabulary::kBos;
  for (const auto tok : ids) {
    const WordStep ws = net.word_step(image, q, prev, h);
    out.push_back(t.pick(ws.log_probs, tok));
    prev = tok;
    h = ws.hidden;
  }
  return out;
}

Rollout generate_report(Network& net, const corpus::ReportSample& sample, const corpus::TemplateDatabase& templates,
                        const corpus::Vocabulary& vocab, DecodeMode mode, num::Rng& rng, const DecodeLimits& limits,
                        Ablation ablation) {
  auto& t = net.tape();
  const auto& dims = net.dims();
  if (templates.size() != dims.n_templates) {
    throw DimensionError("template database has " + std::to_string(templates.size()) +
                         " groups but the model was built for " + std::to_string(dims.n_templates));
  }
  if (vocab.size() != dims.vocab_size) {
    throw DimensionError("vocabulary has " + std::to_string(vocab.size()) + " tokens but the model was built for " +
                         std::to_string(dims.vocab_size));
  }
  Rollout out;
  const EncodedImage image = net.encode_features(std::span(&sample.features, 1));
  DecoderState state = net.initial_state();
  for (std::size_t i = 0; i < limits.max_sentences; ++i) {
    TopicState topic = net.decode_topic_step(image, state);
    state = topic.state;
    out.vars.stop_logits.push_back(topic.stop_logit);
    const bool stop = mode == DecodeMode::Greedy ? topic.z >= limits.stop_threshold : rng.bernoulli(topic.z);
    if (stop) {
      const Var lz = t.log_sigmoid(topic.stop_logit);
      out.trace.stopped = true;
      out.trace.final_z = topic.z;
      out.trace.final_logprob_z = t.scalar(lz);
      out.vars.logprob_stop = lz;
      break;
    }
    SentenceTrace st;
    EpisodeVars::Sentence sv;
    st.z = topic.z;
    sv.logprob_continue = t.log_sigmoid(t.scale(topic.stop_logit, -1.0));
    st.logprob_z = t.scalar(sv.logprob_continue);

    if (ablation == Ablation::GenerationOnly) {
      st.action = 0;
    } else {
      const Var lp = policy_log_probs(net, topic.q, ablation);
      const Decision d = retrieval_decide(t.value(lp), mode, rng);
      st.action = d.index;
      st.logprob_action = d.logprob;
      if (dims.n_actions() > 1) sv.logprob_action = t.pick(lp, d.index);
    }

    if (st.action == 0) {
      GeneratedSentence g = generate_sentence(net, image, topic.q, mode, rng, limits.max_tokens);
      st.source = SentenceSource::Generated;
      for (const auto id : g.ids) st.tokens.push_back(vocab.token(id));
      for (const Var v : g.logprobs) st.token_logprobs.push_back(t.scalar(v));
      sv.token_logprobs = std::move(g.logprobs);
    } else {
      st.source = SentenceSource::Retrieved;
      st.tokens = templates.group(st.action).canonical_sentence();
    }
    out.report.push_back(st.tokens);
    out.trace.sentences.push_back(std::move(st));
    out.vars.sentences.push_back(std::move(sv));
  }
  return out;
}

Rollout greedy_report(const ModelParameters& params, const corpus::ReportSample& sample,
                      const corpus::TemplateDatabase& templates, const corpus::Vocabulary& vocab,
                      const DecodeLimits& limits, Ablation ablation) {
  num::Tape tape;
  Network net(tape, params);
  num::Rng unused(0);
  return generate_report(net, sample, templates, vocab, DecodeMode::Greedy, unused, limits, ablation);
}

}  // namespace hrgr::model
