#include "offmix/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace offmix {

namespace {

std::string lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Splits one physical line on `delim`. For ',' the fields may be quoted
// RFC-4180 style; for '\t' no quoting is recognized.
std::vector<std::string> split_row(const std::string& line, char delim) {
  std::vector<std::string> fields;
  if (delim == '\t') {
    size_t start = 0;
    while (true) {
      size_t pos = line.find('\t', start);
      if (pos == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, pos - start));
      start = pos + 1;
    }
    return fields;
  }
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == delim) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

// splitmix64, used to derive stream-independent RNG seeds.
uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string to_string(Label label) { return label == Label::OFF ? "OFF" : "NOT"; }

std::string to_string(Language lang) { return lang == Language::ta ? "ta" : "ml"; }

std::string to_string(Task task) { return task == Task::task1 ? "task1" : "task2"; }

Language language_from_string(const std::string& s) {
  std::string t = lower_ascii(trim(s));
  if (t == "ta" || t == "tamil") return Language::ta;
  if (t == "ml" || t == "malayalam") return Language::ml;
  throw Error(ErrorCode::Config, "unknown language '" + s + "' (expected ta or ml)");
}

Task task_from_string(const std::string& s) {
  std::string t = lower_ascii(trim(s));
  if (t == "task1" || t == "1") return Task::task1;
  if (t == "task2" || t == "2") return Task::task2;
  throw Error(ErrorCode::Config, "unknown task '" + s + "' (expected task1 or task2)");
}

Label parse_label(const std::string& token) {
  std::string t = lower_ascii(trim(token));
  if (t == "off" || t == "offensive") return Label::OFF;
  if (t == "not" || t == "not offensive" || t == "not-offensive" ||
      t == "not_offensive") {
    return Label::NOT;
  }
  throw Error(ErrorCode::UnknownLabel, "unrecognized label token '" + token + "'");
}

Dataset load_dataset(const std::string& path, Task task, Language language,
                     Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);

  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::EmptyFile, path + " is empty");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  // Strip a UTF-8 BOM if present.
  if (header.size() >= 3 && header.compare(0, 3, "\xef\xbb\xbf") == 0) {
    header.erase(0, 3);
  }

  char delim = header.find('\t') != std::string::npos ? '\t' : ',';
  std::vector<std::string> cols = split_row(header, delim);
  int id_col = -1, text_col = -1, label_col = -1;
  for (size_t i = 0; i < cols.size(); ++i) {
    std::string name = lower_ascii(trim(cols[i]));
    if (name == "id") id_col = static_cast<int>(i);
    else if (name == "text" || name == "comment" || name == "tweet") text_col = static_cast<int>(i);
    else if (name == "label" || name == "category") label_col = static_cast<int>(i);
  }
  if (id_col < 0 || text_col < 0) {
    throw Error(ErrorCode::MalformedRow,
                path + ": header must name id and text columns, got '" + header + "'");
  }

  Dataset ds;
  ds.task = task;
  ds.language = language;

  std::unordered_set<std::string> seen_ids;
  std::unordered_map<std::string, std::string> seen_texts;  // text -> first id
  std::string line;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split_row(line, delim);
    if (fields.size() != cols.size()) {
      throw Error(ErrorCode::MalformedRow,
                  path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(cols.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    Sample s;
    s.id = trim(fields[id_col]);
    s.text = trim(fields[text_col]);
    s.language = language;
    s.split = split;
    if (label_col >= 0) {
      std::string raw = trim(fields[label_col]);
      if (!raw.empty()) s.label = parse_label(raw);
    }
    if (s.text.empty()) {
      std::clog << "[corpus] " << path << ":" << line_no
                << ": empty text for id '" << s.id << "', row skipped\n";
      continue;
    }
    if (!seen_ids.insert(s.id).second) {
      throw Error(ErrorCode::DuplicateId,
                  path + ":" + std::to_string(line_no) + ": duplicate id '" + s.id + "'");
    }
    auto [it, fresh] = seen_texts.emplace(s.text, s.id);
    if (!fresh) {
      std::clog << "[corpus] " << path << ":" << line_no << ": id '" << s.id
                << "' duplicates text of id '" << it->second << "'\n";
    }
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) {
    throw Error(ErrorCode::EmptyFile, path + " has a header but no data rows");
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << "id\ttext\tlabel\n";
  for (const Sample& s : ds.samples) {
    std::string text = s.text;
    for (char& c : text) {
      if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    }
    out << s.id << '\t' << text << '\t'
        << (s.label ? to_string(*s.label) : std::string()) << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "short write to " + path);
}

DistributionReport class_distribution(const Dataset& ds) {
  DistributionReport report;
  for (const Sample& s : ds.samples) {
    if (!s.label) {
      throw Error(ErrorCode::UnlabeledSample, "sample '" + s.id + "' has no label");
    }
    if (*s.label == Label::OFF) ++report.count_off;
    else ++report.count_not;
  }
  report.total = report.count_not + report.count_off;
  return report;
}

std::pair<std::vector<size_t>, std::vector<size_t>> stratified_split_indices(
    const std::vector<Label>& labels, double val_fraction, uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorCode::FractionOutOfRange,
                "val_fraction must be in [0,1), got " + std::to_string(val_fraction));
  }
  std::vector<size_t> by_class[2];
  for (size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<size_t>(labels[i])].push_back(i);
  }

  std::vector<char> in_val(labels.size(), 0);
  std::mt19937_64 rng(mix64(seed));
  for (auto& indices : by_class) {
    // Fisher-Yates driven directly by the raw generator so the shuffle is
    // identical on every platform.
    for (size_t i = indices.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(rng() % i);
      std::swap(indices[i - 1], indices[j]);
    }
    size_t take = static_cast<size_t>(
        val_fraction * static_cast<double>(indices.size()) + 0.5);
    for (size_t k = 0; k < take; ++k) in_val[indices[k]] = 1;
  }

  std::pair<std::vector<size_t>, std::vector<size_t>> out;
  for (size_t i = 0; i < labels.size(); ++i) {
    (in_val[i] ? out.second : out.first).push_back(i);
  }
  return out;
}

std::pair<Dataset, Dataset> split_stratified(const Dataset& ds,
                                             double val_fraction,
                                             uint64_t seed) {
  std::vector<Label> labels;
  labels.reserve(ds.samples.size());
  for (const Sample& s : ds.samples) {
    if (!s.label) {
      throw Error(ErrorCode::UnlabeledSample, "sample '" + s.id + "' has no label");
    }
    labels.push_back(*s.label);
  }
  auto [train_idx, val_idx] = stratified_split_indices(labels, val_fraction, seed);

  Dataset train, val;
  train.task = val.task = ds.task;
  train.language = val.language = ds.language;
  for (size_t i : train_idx) train.samples.push_back(ds.samples[i]);
  for (size_t i : val_idx) {
    Sample s = ds.samples[i];
    s.split = Split::val;
    val.samples.push_back(std::move(s));
  }
  return {std::move(train), std::move(val)};
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRow: return "corpus.malformed_row";
    case ErrorCode::UnknownLabel: return "corpus.unknown_label";
    case ErrorCode::DuplicateId: return "corpus.duplicate_id";
    case ErrorCode::EmptyFile: return "corpus.empty_file";
    case ErrorCode::UnlabeledSample: return "corpus.unlabeled_sample";
    case ErrorCode::FractionOutOfRange: return "corpus.fraction_out_of_range";
    case ErrorCode::ProviderUnavailable: return "translate.provider_unavailable";
    case ErrorCode::RateLimited: return "translate.rate_limited";
    case ErrorCode::ProviderError: return "translate.provider_error";
    case ErrorCode::EmptyText: return "encoder.empty_text";
    case ErrorCode::BackendUnavailable: return "encoder.backend_unavailable";
    case ErrorCode::LengthMismatch: return "fusion.length_mismatch";
    case ErrorCode::NonFiniteInput: return "fusion.non_finite_input";
    case ErrorCode::AllMasked: return "fusion.all_masked";
    case ErrorCode::NonFiniteLoss: return "train_eval.non_finite_loss";
    case ErrorCode::EmptyDataset: return "train_eval.empty_dataset";
    case ErrorCode::EmptyInput: return "train_eval.empty_input";
    case ErrorCode::UnknownCommand: return "cli.unknown_command";
    case ErrorCode::MissingFlag: return "cli.missing_flag";
    case ErrorCode::Io: return "io.error";
    case ErrorCode::Config: return "config.error";
  }
  return "unknown";
}

}  // namespace offmix
