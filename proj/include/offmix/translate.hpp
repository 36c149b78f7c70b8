#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "offmix/corpus.hpp"
#include "offmix/textprep.hpp"

namespace offmix {

/// Stable content key for a (source_text, source_lang, target_lang) triple.
std::string translation_key(const std::string& source_text,
                            const std::string& source_lang,
                            const std::string& target_lang);

struct TranslationEntry {
  std::string source_hash;
  std::string source_text;
  std::string source_lang;
  std::string target_lang;
  std::string translation;
  std::string provider;
  std::string timestamp;  // ISO-8601 UTC
};

/// Native-script text paired with its English rendering. `suspect` marks
/// translations the quality heuristic distrusts; they are never dropped.
struct ParallelSample {
  std::string id;
  std::string native_text;
  std::string english_text;
  std::optional<Label> label;
  bool suspect = false;
};

/// Batch translation backend. Implementations provide do_translate();
/// the base class counts requests so callers can assert cache behaviour.
class TranslationProvider {
 public:
  virtual ~TranslationProvider() = default;

  std::vector<std::string> translate(const std::vector<std::string>& texts,
                                     const std::string& source_lang,
                                     const std::string& target_lang) {
    ++request_count_;
    requested_texts_ += texts.size();
    return do_translate(texts, source_lang, target_lang);
  }

  virtual std::string name() const = 0;
  /// Number of translate() invocations (batches, not texts).
  uint64_t request_count() const { return request_count_; }
  /// Number of individual texts sent to the backend.
  uint64_t requested_texts() const { return requested_texts_; }
  void reset_counters() { request_count_ = 0; requested_texts_ = 0; }

 protected:
  virtual std::vector<std::string> do_translate(
      const std::vector<std::string>& texts, const std::string& source_lang,
      const std::string& target_lang) = 0;

 private:
  uint64_t request_count_ = 0;
  uint64_t requested_texts_ = 0;
};

/// Echoes every input; used when no real provider is wanted.
std::unique_ptr<TranslationProvider> make_identity_provider();

/// Serves translations from a `source<TAB>translation` TSV. Unknown
/// sources raise ProviderError.
std::unique_ptr<TranslationProvider> make_fixture_provider(const std::string& tsv_path);

struct HttpProviderConfig {
  std::string endpoint;       // e.g. https://host/translate
  std::string api_key;        // taken from OFFMIX_API_KEY when empty
  int max_retries = 4;
  int initial_backoff_ms = 250;
};

/// POSTs JSON {"q":[...],"source":...,"target":...} to the endpoint and
/// expects {"translations":[...]} back. Retries with exponential backoff
/// on HTTP 429 before surfacing RateLimited.
std::unique_ptr<TranslationProvider> make_http_provider(HttpProviderConfig config);

/// Append-only JSON-lines store keyed by translation_key(). One writer at
/// a time; lookups may run concurrently with puts.
class TranslationCache {
 public:
  /// Opens (creating if needed) the JSONL file and loads existing entries.
  /// An empty path keeps the cache memory-only.
  explicit TranslationCache(const std::string& path = "");

  std::optional<std::string> get(const std::string& source_text,
                                 const std::string& source_lang,
                                 const std::string& target_lang) const;

  void put(const TranslationEntry& entry);

  size_t size() const;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, TranslationEntry> entries_;
};

struct TranslateOptions {
  size_t batch_size = 50;
  int max_retries = 4;
  int initial_backoff_ms = 250;  // doubled on each rate-limited retry
};

/// Translates texts through the cache: hits are served without touching
/// the provider, misses are deduplicated, chunked and stored. Output order
/// matches input order. `provider` may be null when everything is cached;
/// a miss then raises ProviderUnavailable.
std::vector<std::string> translate_batch(const std::vector<std::string>& texts,
                                         const std::string& source_lang,
                                         const std::string& target_lang,
                                         TranslationProvider* provider,
                                         TranslationCache& cache,
                                         const TranslateOptions& options = {});

/// True when `translation` looks untrustworthy: mostly non-ASCII letters,
/// equal to its source, or mostly echoing the source's words.
bool is_suspect_translation(const std::string& source, const std::string& translation);

/// Translates a native-script dataset into (native, english) pairs. The
/// English side is cleaned with the task-2 preset; empty or low-quality
/// translations are flagged, never dropped.
std::vector<ParallelSample> build_parallel_corpus(const Dataset& ds,
                                                  TranslationProvider* provider,
                                                  TranslationCache& cache,
                                                  const TranslateOptions& options = {});

/// Round-trips a parallel corpus as TSV: id, native, english, label, suspect.
void save_parallel(const std::vector<ParallelSample>& rows, const std::string& path);
std::vector<ParallelSample> load_parallel(const std::string& path);

}  // namespace offmix
