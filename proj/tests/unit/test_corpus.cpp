#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "hrgr/corpus/dataset_io.hpp"
#include "hrgr/corpus/synth.hpp"
#include "hrgr/corpus/templates.hpp"
#include "hrgr/corpus/tokenizer.hpp"
#include "hrgr/corpus/vocabulary.hpp"
#include "hrgr/errors.hpp"

using namespace hrgr;
using namespace hrgr::corpus;

namespace {

ReportSample doc(const std::string& id, const std::vector<std::string>& sentences) {
  ReportSample s;
  s.id = id;
  s.features = num::Array::zeros(1, 1);
  for (const auto& text : sentences) s.report.push_back(tokenize(text));
  return s;
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "hrgr_test_corpus";
  std::filesystem::create_directories(dir);
  return dir / name;
}

// Counts documents containing the sentence by scanning every document.
std::size_t brute_df(const std::vector<ReportSample>& docs, const Sentence& s) {
  std::size_t n = 0;
  for (const auto& d : docs) {
    bool found = false;
    for (const auto& t : d.report) found = found || t == s;
    n += found ? 1 : 0;
  }
  return n;
}

}  // namespace

TEST_CASE("tokenize splits punctuation and lowercases") {
  CHECK(tokenize("The lungs are clear.") == Sentence{"the", "lungs", "are", "clear", "."});
  CHECK(tokenize("").empty());
  CHECK(tokenize("No pneumothorax or pleural effusion.") ==
        Sentence{"no", "pneumothorax", "or", "pleural", "effusion", "."});
  CHECK(tokenize("  a,b  ") == Sentence{"a", ",", "b"});
  CHECK(detokenize(tokenize("Heart size is normal.")) == "heart size is normal .");
}

TEST_CASE("vocabulary respects min_freq") {
  std::vector<ReportSample> docs{doc("0", {"a a a b"})};
  const auto v3 = Vocabulary::build(docs, 3);
  CHECK(v3.contains("a"));
  CHECK_FALSE(v3.contains("b"));
  CHECK(v3.id("b") == Vocabulary::kUnk);
  const auto v1 = Vocabulary::build(docs, 1);
  CHECK(v1.contains("a"));
  CHECK(v1.contains("b"));
  CHECK(v1.size() == Vocabulary::kNumSpecials + 2);
  CHECK(v1.token(Vocabulary::kEos) != v1.token(Vocabulary::kPad));
  CHECK_THROWS_AS(Vocabulary::build({}, 1), DataError);
  CHECK_THROWS_AS(Vocabulary::build(docs, 0), ConfigError);
}

TEST_CASE("vocabulary encode appends EOS and decode stops at it") {
  std::vector<ReportSample> docs{doc("0", {"the lungs are clear ."})};
  const auto v = Vocabulary::build(docs, 1);
  const auto ids = v.encode(tokenize("the lungs are clear."));
  REQUIRE(ids.size() == 6);
  CHECK(ids.back() == Vocabulary::kEos);
  CHECK(v.decode(ids) == tokenize("the lungs are clear."));
  // ids and tokens are a bijection above the specials
  for (TokenId id = Vocabulary::kNumSpecials; id < v.size(); ++id) CHECK(v.id(v.token(id)) == id);
}

TEST_CASE("document frequency counts each document once") {
  std::vector<ReportSample> docs;
  for (int i = 0; i < 100; ++i) {
    std::vector<std::string> s{"filler " + std::to_string(i) + " ."};
    if (i < 97) s.push_back("the lungs are clear .");
    docs.push_back(doc(std::to_string(i), s));
  }
  docs[0].report.push_back(tokenize("the lungs are clear ."));  // repeated within one document

  const auto c = mine_templates(docs, 90);
  REQUIRE(c.size() == 1);
  CHECK(c[0].sentence == tokenize("the lungs are clear ."));
  CHECK(c[0].df == 97);
  CHECK(mine_templates(docs, 98).empty());
}

TEST_CASE("mined df matches a brute-force count and is monotone in the threshold") {
  SynthConfig cfg;
  cfg.n_samples = 300;
  num::Rng rng(5);
  const auto docs = synth_generate(cfg, rng);
  std::size_t prev = docs.size() + 1;
  for (std::size_t thr : {1, 5, 20, 60, 150}) {
    const auto c = mine_templates(docs, thr);
    CHECK(c.size() <= prev);
    prev = c.size();
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(c[i].df == brute_df(docs, c[i].sentence));
      CHECK(c[i].df >= thr);
      CHECK(c[i].df <= docs.size());
      if (i > 0) CHECK(c[i - 1].df >= c[i].df);
    }
  }
  CHECK_THROWS_AS(mine_templates(docs, 0), ConfigError);
}

TEST_CASE("template grouping merges stop-word and order variants") {
  const NormalizationRule rule;
  SUBCASE("pleural effusion / pneumothorax phrasings are one template") {
    const auto a = rule.key(tokenize("No pneumothorax or pleural effusion."));
    CHECK(a == rule.key(tokenize("No pleural effusion or pneumothorax.")));
    CHECK(a == rule.key(tokenize("There is no pleural effusion or pneumothorax.")));
  }
  SUBCASE("lungs clear") {
    CHECK(rule.key(tokenize("The lungs are clear.")) == rule.key(tokenize("Lungs are clear.")));
  }
  SUBCASE("cardiomediastinal silhouette") {
    CHECK(rule.key(tokenize("Cardiomediastin silhouett is within normal limit.")) ==
          rule.key(tokenize("The cardiomediastin silhouett is within normal limit.")));
  }
  SUBCASE("content words keep groups apart") {
    CHECK(rule.key(tokenize("The lungs are clear.")) != rule.key(tokenize("The heart is normal in size.")));
    CHECK(rule.key(tokenize("No focal consolidation.")) != rule.key(tokenize("Focal consolidation.")));
  }
  SUBCASE("order-sensitive rule separates reorderings") {
    NormalizationRule strict;
    strict.order_insensitive = false;
    CHECK(strict.key(tokenize("No pneumothorax or pleural effusion.")) !=
          strict.key(tokenize("No pleural effusion or pneumothorax.")));
    CHECK(strict.key(tokenize("There is no pleural effusion or pneumothorax.")) ==
          strict.key(tokenize("No pleural effusion or pneumothorax.")));
  }
}

TEST_CASE("group df is the sum of variant dfs and the canonical is the most frequent") {
  std::vector<ReportSample> docs;
  // 5 x A, 3 x B (same group as A), 4 x C (own group), D in only 1 document
  for (int i = 0; i < 5; ++i) docs.push_back(doc("a" + std::to_string(i), {"no pleural effusion or pneumothorax ."}));
  for (int i = 0; i < 3; ++i) {
    docs.push_back(doc("b" + std::to_string(i), {"there is no pleural effusion or pneumothorax .", "the lungs are clear ."}));
  }
  docs.push_back(doc("c", {"the lungs are clear ."}));
  docs.push_back(doc("d", {"heart size is normal ."}));

  const auto cands = mine_templates(docs, 2);
  const auto db = group_templates(cands, 2, NormalizationRule{}, docs.size());
  REQUIRE(db.size() == 2);
  CHECK(db.group(1).df() == 8);
  CHECK(db.group(1).canonical_sentence() == tokenize("no pleural effusion or pneumothorax ."));
  CHECK(db.group(2).df() == 4);

  // brute-force: sum over sentences whose key matches
  for (std::size_t g = 1; g <= db.size(); ++g) {
    std::size_t total = 0;
    for (const auto& c : cands) {
      if (db.rule().key(c.sentence) == db.rule().key(db.group(g).canonical_sentence())) total += c.df;
    }
    CHECK(db.group(g).df() == total);
    for (const auto& v : db.group(g).variants) CHECK(v.df <= db.group(g).variants[db.group(g).canonical].df);
  }
  CHECK(db.match(tokenize("No pneumothorax or pleural effusion.")) == 1);
  CHECK(db.match(tokenize("lungs are clear")) == 2);
  CHECK(db.match(tokenize("heart size is normal .")) == 0);
  CHECK_THROWS(db.group(0));
  CHECK_THROWS(db.group(3));
}

TEST_CASE("canonical ties break to the lexicographically smallest variant") {
  std::vector<ReportSample> docs{doc("0", {"the lungs are clear ."}), doc("1", {"lungs are clear ."})};
  const auto db = group_templates(mine_templates(docs, 1), 1, NormalizationRule{}, 2);
  REQUIRE(db.size() == 1);
  CHECK(db.group(1).canonical_sentence() == tokenize("lungs are clear ."));
}

TEST_CASE("grouping is an equivalence relation on perturbed sentences") {
  const NormalizationRule rule;
  num::Rng rng(11);
  const std::vector<std::string> content{"heart", "size", "normal", "lungs", "clear", "no", "effusion"};
  const std::vector<std::string> stop = NormalizationRule::default_stop_words();
  auto perturb = [&](Sentence s) {
    // insert stop words, shuffle, add punctuation
    for (int k = 0; k < 3; ++k) {
      s.insert(s.begin() + static_cast<long>(rng.uniform_index(s.size() + 1)), stop[rng.uniform_index(stop.size())]);
    }
    for (std::size_t i = s.size(); i > 1; --i) std::swap(s[i - 1], s[rng.uniform_index(i)]);
    if (rng.bernoulli(0.5)) s.push_back(".");
    return s;
  };
  std::vector<Sentence> pool;
  for (int i = 0; i < 30; ++i) {
    Sentence base;
    const std::size_t len = 1 + rng.uniform_index(3);
    for (std::size_t k = 0; k < len; ++k) base.push_back(content[rng.uniform_index(content.size())]);
    pool.push_back(base);
    pool.push_back(perturb(base));
    pool.push_back(perturb(base));
  }
  auto same = [&](const Sentence& a, const Sentence& b) { return rule.key(a) == rule.key(b); };
  for (std::size_t i = 0; i < pool.size(); i += 3) {
    CHECK(same(pool[i], pool[i + 1]));
    CHECK(same(pool[i], pool[i + 2]));
  }
  for (const auto& a : pool) {
    CHECK(same(a, a));
    for (const auto& b : pool) {
      CHECK(same(a, b) == same(b, a));
      if (!same(a, b)) continue;
      for (const auto& c : pool) {
        if (same(b, c)) CHECK(same(a, c));
      }
    }
  }
}

TEST_CASE("synthetic corpus: template share, structure and reproducibility") {
  SynthConfig cfg;
  num::Rng r1(42), r2(42);
  const auto a = synth_generate(cfg, r1);
  const auto b = synth_generate(cfg, r2);
  REQUIRE(a.size() == cfg.n_samples);
  CHECK(a == b);
  const double frac = template_sentence_fraction(a);
  CHECK(frac >= 0.7);
  CHECK(frac <= 0.9);
  const auto terms = abnormal_term_list(cfg.n_abnormal_findings);
  std::set<std::string> ids;
  for (const auto& s : a) {
    ids.insert(s.id);
    CHECK(s.features.rows() == cfg.regions);
    CHECK(s.features.cols() == cfg.feature_dim);
    CHECK(s.report.size() <= cfg.max_sentences);
    for (const auto& sent : s.report) CHECK(sent.size() + 1 <= cfg.max_tokens);
    for (const auto& t : s.abnormal_terms) {
      CHECK(std::count(terms.begin(), terms.end(), t) == 1);
    }
  }
  CHECK(ids.size() == a.size());

  // vocabulary is stable for a fixed seed
  CHECK(Vocabulary::build(a, 3) == Vocabulary::build(b, 3));
}

TEST_CASE("synthetic corpus without abnormal findings is all templates") {
  SynthConfig cfg;
  cfg.n_samples = 200;
  cfg.n_abnormal_findings = 0;
  num::Rng rng(3);
  const auto docs = synth_generate(cfg, rng);
  CHECK(template_sentence_fraction(docs) == 1.0);
  for (const auto& d : docs) CHECK(d.abnormal_terms.empty());
}

TEST_CASE("zero noise makes features a function of the findings") {
  SynthConfig cfg;
  cfg.n_samples = 300;
  cfg.noise_sigma = 0.0;
  num::Rng rng(9);
  const auto docs = synth_generate(cfg, rng);
  std::map<std::set<std::string>, const num::Array*> seen;
  int repeats = 0;
  for (const auto& d : docs) {
    // abnormal topics hide whether the topic was also mentioned, so compare
    // only reports whose findings are all normal
    if (!d.abnormal_terms.empty()) continue;
    auto [it, inserted] = seen.emplace(d.findings, &d.features);
    if (!inserted) {
      ++repeats;
      CHECK(*it->second == d.features);
    }
  }
  CHECK(repeats > 0);
}

TEST_CASE("synth config validation") {
  SynthConfig cfg;
  num::Rng rng(1);
  cfg.n_samples = 0;
  CHECK_THROWS_AS(synth_generate(cfg, rng), ConfigError);
  cfg = {};
  cfg.template_variant_count = 0;
  CHECK_THROWS_AS(synth_generate(cfg, rng), ConfigError);
  cfg = {};
  cfg.noise_sigma = -1;
  CHECK_THROWS_AS(synth_generate(cfg, rng), ConfigError);
}

TEST_CASE("jsonl, vocab and template files round-trip") {
  SynthConfig cfg;
  cfg.n_samples = 100;
  num::Rng rng(17);
  const auto docs = synth_generate(cfg, rng);
  const auto path = temp_path("roundtrip.jsonl");
  save_jsonl(path, docs);
  CHECK(load_jsonl(path) == docs);

  const auto vocab = Vocabulary::build(docs, 3);
  save_vocab(temp_path("vocab.json"), vocab);
  CHECK(load_vocab(temp_path("vocab.json")) == vocab);

  const auto db = group_templates(mine_templates(docs, 5), 5, NormalizationRule{}, docs.size());
  REQUIRE(db.size() > 0);
  save_templates(temp_path("templates.json"), db);
  const auto back = load_templates(temp_path("templates.json"));
  CHECK(back == db);
  for (std::size_t g = 1; g <= db.size(); ++g) CHECK(back.group(g).canonical_sentence() == db.group(g).canonical_sentence());
}

TEST_CASE("truncated jsonl reports the failing line") {
  SynthConfig cfg;
  cfg.n_samples = 5;
  num::Rng rng(2);
  const auto path = temp_path("truncated.jsonl");
  save_jsonl(path, synth_generate(cfg, rng));
  std::string text = read_file(path);
  // cut the fourth line in half
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) pos = text.find('\n', pos) + 1;
  text.resize(pos + 20);
  write_file(path, text);
  try {
    load_jsonl(path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":4:") != std::string::npos);
  }
  CHECK_THROWS_AS(load_jsonl(temp_path("missing.jsonl")), DataError);
}

TEST_CASE("jsonl rejects an unknown schema version") {
  const auto path = temp_path("schema.jsonl");
  write_file(path, R"({"schema":2,"id":"x","features":[[0]],"report":[],"findings":[],"abnormal_terms":[]})" "\n");
  CHECK_THROWS_AS(load_jsonl(path), DataError);
}
