#pragma once

#include <string>
#include <vector>

#include "offmix/corpus.hpp"

namespace offmix {

/// Text-cleaning switches. Whitespace runs are collapsed to single spaces
/// (and the ends trimmed) whenever a removal pass or strip_trailing_space
/// is active, so deletions never leave double spaces behind.
struct CleanConfig {
  bool remove_emoji = false;
  bool remove_flags = false;
  bool lowercase = false;
  bool strip_punctuation = false;
  bool strip_trailing_space = false;

  /// Emoji and flag stripping plus lowercasing, as used for the
  /// dual-encoder task.
  static CleanConfig task1();
  /// Punctuation and trailing-space stripping plus lowercasing, as used on
  /// the transliterate/translate parallel corpus.
  static CleanConfig task2();
};

/// Total on valid Unicode: removes emoji and regional-indicator pairs when
/// configured, lowercases Latin letters, strips punctuation, and collapses
/// the whitespace the deletions leave behind. Native-script characters are
/// never altered.
std::string clean_text(const std::string& text, const CleanConfig& config);

enum class TargetScript { tamil, malayalam };

/// An ordered roman -> native rewrite table. Rules are applied greedily,
/// longest match first; input with no matching rule passes through.
class TranslitScheme {
 public:
  struct Rule {
    std::string roman;
    std::string native;
  };

  TranslitScheme(std::string name, TargetScript target, std::vector<Rule> rules);

  /// Reads a scheme table: one `roman<TAB>native` rule per line, `#`
  /// comments and blank lines ignored.
  static TranslitScheme load(const std::string& path, std::string name,
                             TargetScript target);

  const std::string& name() const { return name_; }
  TargetScript target_script() const { return target_; }
  const std::vector<Rule>& rules() const { return rules_; }

  /// Greedy longest-match-first rewrite. Characters with no matching rule
  /// (digits, symbols, native script) pass through unchanged, which makes
  /// the function idempotent on its own output.
  std::string transliterate(const std::string& roman_text) const;

  /// Fraction of input code points consumed by a rule in the last
  /// transliterate-with-stats call.
  std::string transliterate(const std::string& roman_text, double* coverage) const;

 private:
  std::string name_;
  TargetScript target_;
  std::vector<Rule> rules_;
  size_t max_rule_len_ = 0;
  // Exact-match lookup; longest-match search probes descending lengths.
  std::vector<std::pair<std::string, size_t>> index_;
  const Rule* find(std::string_view key) const;
};

/// Loads the scheme bundled under data/schemes/ for the given language.
/// `data_dir` empty means the compiled-in default location.
TranslitScheme bundled_scheme(Language lang, const std::string& data_dir = "");

struct TranslitStats {
  size_t samples = 0;
  double mean_coverage = 0.0;  // mean fraction of code points rewritten
  double min_coverage = 1.0;
};

/// clean_text then transliterate for every sample; ids, labels and order
/// are preserved. Per-sample rule coverage is accumulated into `stats`
/// when given.
Dataset transliterate_dataset(const Dataset& ds, const TranslitScheme& scheme,
                              const CleanConfig& config,
                              TranslitStats* stats = nullptr);

}  // namespace offmix
