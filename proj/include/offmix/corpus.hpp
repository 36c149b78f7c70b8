#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "offmix/error.hpp"

namespace offmix {

enum class Label : uint8_t { NOT = 0, OFF = 1 };
enum class Language : uint8_t { ta, ml };
enum class Task : uint8_t { task1, task2 };
enum class Split : uint8_t { train, val, test };

std::string to_string(Label label);
std::string to_string(Language lang);
std::string to_string(Task task);
Language language_from_string(const std::string& s);
Task task_from_string(const std::string& s);

/// Maps a raw label token ("offensive", "NOT", "not-offensive", ...) to a
/// Label, case-insensitively. Throws Error(UnknownLabel) on anything else.
Label parse_label(const std::string& token);

/// One labeled social-media comment. `label` is empty for unlabeled test
/// rows; everything that trains or scores requires it.
struct Sample {
  std::string id;
  std::string text;
  std::optional<Label> label;
  Language language = Language::ta;
  Split split = Split::train;

  bool operator==(const Sample&) const = default;
};

struct Dataset {
  std::vector<Sample> samples;
  Task task = Task::task1;
  Language language = Language::ta;

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

struct DistributionReport {
  long count_not = 0;
  long count_off = 0;
  long total = 0;
};

/// Loads a TSV or CSV file with a header row naming at least `id` and
/// `text` columns (`label` optional, for test files). The delimiter is
/// sniffed from the header. Empty-text rows are skipped with a per-row
/// warning on the provided stream (default: stderr); duplicate texts under
/// distinct ids only warn.
///
/// Errors: EmptyFile, MalformedRow, UnknownLabel, DuplicateId, Io.
Dataset load_dataset(const std::string& path, Task task, Language language,
                     Split split = Split::train);

/// Writes `ds` as TSV (id/text/label columns). Tabs and newlines inside
/// text are replaced by single spaces so the format stays one row per line.
void save_dataset(const Dataset& ds, const std::string& path);

/// Per-class counts. Throws Error(UnlabeledSample) if any sample lacks a
/// label.
DistributionReport class_distribution(const Dataset& ds);

/// Deterministic stratified split: the second part receives round(f * n_c)
/// samples of each class c, drawn with the seeded generator; both parts
/// keep the original sample order. Same seed, same split.
std::pair<Dataset, Dataset> split_stratified(const Dataset& ds,
                                             double val_fraction,
                                             uint64_t seed);

/// Index-level form of the same split, for collections that are not
/// Datasets. Returned index lists are each in ascending order.
std::pair<std::vector<size_t>, std::vector<size_t>> stratified_split_indices(
    const std::vector<Label>& labels, double val_fraction, uint64_t seed);

}  // namespace offmix
