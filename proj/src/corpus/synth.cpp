#include "hrgr/corpus/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <set>

#include "hrgr/corpus/tokenizer.hpp"
#include "hrgr/errors.hpp"

namespace hrgr::corpus {

namespace {

struct NormalTopic {
  const char* name;
  std::array<const char*, 4> phrasings;  // all share one normalized template key
};

// Order here is the reading order of a report.
const std::array<NormalTopic, 8> kTopics = {{
    {"heart",
     {"The heart size is normal.", "Heart size is normal.", "There is normal heart size.",
      "The heart size is normal"}},
    {"mediastinum",
     {"The mediastinal contours are normal.", "Mediastinal contours are normal.",
      "Normal mediastinal contours.", "The mediastinal contours are normal"}},
    {"lungs",
     {"The lungs are clear.", "Lungs are clear.", "There are clear lungs.", "The lungs are clear"}},
    {"pleura",
     {"The pleural spaces are clear.", "Pleural spaces are clear.",
      "There are clear pleural spaces.", "The pleural spaces are clear"}},
    {"bones",
     {"No acute bony abnormality.", "There is no acute bony abnormality.",
      "There is no acute bony abnormality", "No acute bony abnormality"}},
    {"vasculature",
     {"Pulmonary vasculature is normal.", "The pulmonary vasculature is normal.",
      "Normal pulmonary vasculature.", "Pulmonary vasculature is normal"}},
    {"hila",
     {"The hila are normal.", "Hila are normal.", "Normal hila.", "The hila are normal"}},
    {"diaphragm",
     {"The diaphragm is normal.", "Diaphragm is normal.", "Normal diaphragm.",
      "The diaphragm is normal"}},
}};

// Skewed so that the canonical phrasing is clearly the most frequent.
constexpr std::array<double, 4> kPhrasingWeights = {0.55, 0.28, 0.12, 0.05};

struct AbnormalFinding {
  const char* term;
  std::size_t topic;
  std::array<const char*, 3> locations;
  std::array<const char*, 2> evidence;
};

const std::array<AbnormalFinding, 10> kFindings = {{
    {"cardiomegaly", 0, {"global", "left ventricular", "right sided"},
     {"with enlarged cardiac silhouette", "without vascular congestion"}},
    {"effusion", 3, {"right", "left", "bilateral"},
     {"with blunting of the costophrenic angle", "layering posteriorly"}},
    {"pneumothorax", 3, {"right apical", "left apical", "apical"},
     {"without mediastinal shift", "with visible pleural line"}},
    {"consolidation", 2, {"right lower lobe", "left lower lobe", "right middle lobe"},
     {"with air bronchograms", "suspicious for pneumonia"}},
    {"atelectasis", 2, {"bibasilar", "left basilar", "right basilar"},
     {"with volume loss", "likely subsegmental"}},
    {"nodule", 2, {"right upper lobe", "left upper lobe", "perihilar"},
     {"with smooth margins", "with spiculated margins"}},
    {"fracture", 4, {"right rib", "left rib", "clavicular"},
     {"with callus formation", "without displacement"}},
    {"edema", 5, {"interstitial", "perihilar", "diffuse"},
     {"with kerley lines", "with vascular congestion"}},
    {"granuloma", 2, {"right lower lobe", "left upper lobe", "hilar"},
     {"with calcification", "unchanged from prior"}},
    {"emphysema", 2, {"apical", "diffuse", "centrilobular"},
     {"with hyperinflation", "with flattened diaphragms"}},
}};

std::size_t topic_of(std::size_t finding, std::size_t n_topics) {
  return kFindings[finding].topic % n_topics;
}

}  // namespace

void SynthConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("synth config: " + msg); };
  if (n_samples == 0) fail("n_samples must be positive");
  if (n_normal_findings == 0 || n_normal_findings > kTopics.size()) {
    fail("n_normal_findings must be in 1.." + std::to_string(kTopics.size()));
  }
  if (n_abnormal_findings > kFindings.size()) {
    fail("n_abnormal_findings must be <= " + std::to_string(kFindings.size()));
  }
  if (regions == 0 || feature_dim == 0) fail("regions and feature_dim must be positive");
  if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
  if (template_variant_count == 0 || template_variant_count > 4) {
    fail("template_variant_count must be in 1..4");
  }
  if (!(abnormal_rate >= 0.0 && abnormal_rate <= 1.0)) fail("abnormal_rate must be in [0,1]");
  if (!(mention_rate >= 0.0 && mention_rate <= 1.0)) fail("mention_rate must be in [0,1]");
  if (max_sentences == 0) fail("max_sentences must be positive");
  if (max_tokens < 2) fail("max_tokens must be >= 2");
  if (grammar.severities.empty()) fail("grammar.severities must be nonempty");
}

std::vector<std::string> abnormal_term_list(std::size_t n_abnormal_findings) {
  std::vector<std::string> terms;
  for (std::size_t i = 0; i < std::min(n_abnormal_findings, kFindings.size()); ++i) {
    terms.emplace_back(kFindings[i].term);
  }
  return terms;
}

std::vector<std::pair<std::string, std::string>> default_keyword_map() {
  return {
      {"heart size", "the heart size is normal ."},
      {"mediastinal contours", "the mediastinal contours are normal ."},
      {"pleural spaces", "the pleural spaces are clear ."},
      {"lungs", "the lungs are clear ."},
  };
}

std::vector<ReportSample> synth_generate(const SynthConfig& config, num::Rng& rng) {
  config.validate();
  const std::size_t n_topics = config.n_normal_findings;
  const std::size_t n_abn = config.n_abnormal_findings;
  const std::size_t n_labels = n_topics + n_abn;

  // Region-specific linear map from the finding vector to features. Each
  // label is visible in roughly half of the regions.
  std::vector<num::Array> world;
  world.reserve(config.regions);
  for (std::size_t p = 0; p < config.regions; ++p) {
    num::Array w = num::Array::zeros(config.feature_dim, n_labels);
    for (std::size_t j = 0; j < n_labels; ++j) {
      const bool visible = rng.bernoulli(0.5);
      for (std::size_t d = 0; d < config.feature_dim; ++d) {
        const double v = rng.normal();
        if (visible) w.at(d, j) = v;
      }
    }
    world.push_back(std::move(w));
  }

  std::vector<std::array<Sentence, 4>> phrasings(n_topics);
  for (std::size_t t = 0; t < n_topics; ++t) {
    for (std::size_t k = 0; k < 4; ++k) phrasings[t][k] = tokenize(kTopics[t].phrasings[k]);
  }
  const std::span<const double> weights(kPhrasingWeights.data(), config.template_variant_count);

  std::vector<ReportSample> samples;
  samples.reserve(config.n_samples);
  for (std::size_t s = 0; s < config.n_samples; ++s) {
    ReportSample sample;
    char id[32];
    std::snprintf(id, sizeof id, "s%06zu", s);
    sample.id = id;

    std::vector<double> labels(n_labels, 0.0);
    for (std::size_t t = 0; t < n_topics; ++t) labels[t] = rng.bernoulli(config.mention_rate) ? 1.0 : 0.0;
    for (std::size_t f = 0; f < n_abn; ++f) {
      labels[n_topics + f] = rng.bernoulli(config.abnormal_rate) ? 1.0 : 0.0;
    }

    for (std::size_t t = 0; t < n_topics; ++t) {
      std::vector<std::size_t> abnormal;
      for (std::size_t f = 0; f < n_abn; ++f) {
        if (labels[n_topics + f] > 0.0 && topic_of(f, n_topics) == t) abnormal.push_back(f);
      }
      // Drawn even for omitted or abnormal topics.
      const std::size_t phrasing = rng.categorical(weights);
      if (abnormal.empty()) {
        if (labels[t] > 0.0) {
          sample.report.push_back(phrasings[t][phrasing]);
          sample.findings.insert(std::string("normal:") + kTopics[t].name);
        }
        continue;
      }
      for (std::size_t f : abnormal) {
        const auto& finding = kFindings[f];
        const auto& severity =
            config.grammar.severities[rng.uniform_index(config.grammar.severities.size())];
        const char* location = finding.locations[rng.uniform_index(finding.locations.size())];
        const char* evidence = finding.evidence[rng.uniform_index(finding.evidence.size())];
        std::string text = "there is " + severity + " " + location + " " + finding.term;
        if (config.grammar.evidence_clause) text += std::string(" ") + evidence;
        text += " .";
        Sentence sentence = tokenize(text);
        if (sentence.size() + 1 > config.max_tokens) sentence.resize(config.max_tokens - 1);
        sample.report.push_back(std::move(sentence));
        sample.findings.insert(std::string("abnormal:") + finding.term);
        sample.abnormal_terms.insert(finding.term);
      }
    }
    if (sample.report.size() > config.max_sentences) {
      sample.report.resize(config.max_sentences);
      sample.abnormal_terms.clear();
      for (const auto& sentence : sample.report) {
        for (std::size_t f = 0; f < n_abn; ++f) {
          if (std::find(sentence.begin(), sentence.end(), kFindings[f].term) != sentence.end()) {
            sample.abnormal_terms.insert(kFindings[f].term);
          }
        }
      }
    }

    sample.features = num::Array::zeros(config.regions, config.feature_dim);
    for (std::size_t p = 0; p < config.regions; ++p) {
      const auto& w = world[p];
      for (std::size_t d = 0; d < config.feature_dim; ++d) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n_labels; ++j) acc += w.at(d, j) * labels[j];
        const double noise = rng.normal();
        sample.features.at(p, d) = acc + config.noise_sigma * noise;
      }
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

double template_sentence_fraction(const std::vector<ReportSample>& samples) {
  std::set<Sentence> normal;
  for (const auto& topic : kTopics) {
    for (const char* p : topic.phrasings) normal.insert(tokenize(p));
  }
  std::size_t total = 0;
  std::size_t templated = 0;
  for (const auto& s : samples) {
    for (const auto& sentence : s.report) {
      ++total;
      if (normal.contains(sentence)) ++templated;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(templated) / static_cast<double>(total);
}

}  // namespace hrgr::corpus
