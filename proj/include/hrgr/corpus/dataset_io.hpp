#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hrgr/corpus/templates.hpp"
#include "hrgr/corpus/types.hpp"
#include "hrgr/corpus/vocabulary.hpp"

namespace hrgr::corpus {

inline constexpr int kSchemaVersion = 1;

// One JSON object per line:
//   {"schema":1,"id":..,"features":[[..],..],"report":["sentence",..],
//    "findings":[..],"abnormal_terms":[..]}
// Report sentences are stored as space-joined tokens.
void save_jsonl(const std::filesystem::path& path, const std::vector<ReportSample>& samples);
// Throws DataError("<path>:<line>: ...") on the first malformed line.
std::vector<ReportSample> load_jsonl(const std::filesystem::path& path);

// {"schema":1,"min_freq":3,"tokens":["<pad>",..]}
void save_vocab(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary load_vocab(const std::filesystem::path& path);

// {"schema":1,"df_threshold":..,"document_count":..,"stop_words":[..],
//  "order_insensitive":true,"groups":[{"variants":[{"text":..,"df":..}],"canonical":0}]}
void save_templates(const std::filesystem::path& path, const TemplateDatabase& db);
TemplateDatabase load_templates(const std::filesystem::path& path);

// Whole-file helpers shared by the writers above.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace hrgr::corpus
