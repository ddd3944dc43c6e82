#include "hrgr/corpus/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include "hrgr/corpus/tokenizer.hpp"
#include "hrgr/errors.hpp"
#include "json.hpp"

namespace hrgr::corpus {

using nlohmann::json;

namespace {

json sample_to_json(const ReportSample& s) {
  json features = json::array();
  const auto& f = s.features;
  for (std::size_t r = 0; r < f.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < f.cols(); ++c) row.push_back(f.at(r, c));
    features.push_back(std::move(row));
  }
  json report = json::array();
  for (const auto& sentence : s.report) report.push_back(detokenize(sentence));
  return json{{"schema", kSchemaVersion},
              {"id", s.id},
              {"features", std::move(features)},
              {"report", std::move(report)},
              {"findings", s.findings},
              {"abnormal_terms", s.abnormal_terms}};
}

ReportSample sample_from_json(const json& j) {
  if (!j.is_object()) throw DataError("expected a JSON object");
  if (j.contains("schema") && j.at("schema").get<int>() != kSchemaVersion) {
    throw DataError("unsupported schema version " + j.at("schema").dump());
  }
  ReportSample s;
  s.id = j.at("id").get<std::string>();
  const auto& rows = j.at("features");
  if (!rows.is_array() || rows.empty()) throw DataError("features must be a nonempty 2-D array");
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = rows.at(0).size();
  if (n_cols == 0) throw DataError("features rows must be nonempty");
  std::vector<double> data;
  data.reserve(n_rows * n_cols);
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != n_cols) throw DataError("features rows have unequal length");
    for (const auto& v : row) data.push_back(v.get<double>());
  }
  s.features = num::Array(num::Shape{n_rows, n_cols}, std::move(data));
  for (const auto& sentence : j.at("report")) s.report.push_back(tokenize(sentence.get<std::string>()));
  s.findings = j.at("findings").get<std::set<std::string>>();
  s.abnormal_terms = j.at("abnormal_terms").get<std::set<std::string>>();
  return s;
}

json parse_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void check_schema(const json& j, const std::filesystem::path& path) {
  if (j.contains("schema") && j.at("schema").get<int>() != kSchemaVersion) {
    throw DataError(path.string() + ": unsupported schema version " + j.at("schema").dump());
  }
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << contents;
  if (!out) throw DataError("write failed for " + path.string());
}

void save_jsonl(const std::filesystem::path& path, const std::vector<ReportSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += sample_to_json(s).dump();
    out += '\n';
  }
  write_file(path, out);
}

std::vector<ReportSample> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<ReportSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      samples.push_back(sample_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return samples;
}

void save_vocab(const std::filesystem::path& path, const Vocabulary& vocab) {
  json j{{"schema", kSchemaVersion}, {"min_freq", vocab.min_freq()}, {"tokens", vocab.tokens()}};
  write_file(path, j.dump(2) + "\n");
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  check_schema(j, path);
  try {
    return Vocabulary::from_tokens(j.at("tokens").get<std::vector<std::string>>(),
                                   j.at("min_freq").get<int>());
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_templates(const std::filesystem::path& path, const TemplateDatabase& db) {
  json groups = json::array();
  for (const auto& g : db.groups()) {
    json variants = json::array();
    for (const auto& v : g.variants) variants.push_back({{"text", detokenize(v.sentence)}, {"df", v.df}});
    groups.push_back({{"variants", std::move(variants)}, {"canonical", g.canonical}});
  }
  json j{{"schema", kSchemaVersion},
         {"df_threshold", db.df_threshold()},
         {"document_count", db.document_count()},
         {"stop_words", db.rule().stop_words},
         {"order_insensitive", db.rule().order_insensitive},
         {"groups", std::move(groups)}};
  write_file(path, j.dump(2) + "\n");
}

TemplateDatabase load_templates(const std::filesystem::path& path) {
  const json j = parse_json_file(path);
  check_schema(j, path);
  try {
    NormalizationRule rule;
    if (j.contains("stop_words")) rule.stop_words = j.at("stop_words").get<std::vector<std::string>>();
    if (j.contains("order_insensitive")) rule.order_insensitive = j.at("order_insensitive").get<bool>();
    std::vector<TemplateGroup> groups;
    for (const auto& g : j.at("groups")) {
      TemplateGroup group;
      for (const auto& v : g.at("variants")) {
        group.variants.push_back({tokenize(v.at("text").get<std::string>()), v.at("df").get<std::size_t>()});
      }
      group.canonical = g.at("canonical").get<std::size_t>();
      groups.push_back(std::move(group));
    }
    return TemplateDatabase(std::move(groups), j.at("df_threshold").get<std::size_t>(), std::move(rule),
                            j.value("document_count", std::size_t{0}));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace hrgr::corpus
