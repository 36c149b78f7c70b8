#include "offmix/translate.hpp"

#include <chrono>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "offmix/unicode.hpp"

// httplib drags in system networking headers; keep it out of the header.
#include <httplib.h>

namespace offmix {

namespace {

uint64_t fnv1a64(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

std::string utc_now_iso8601() {
  using namespace std::chrono;
  auto now = system_clock::now();
  std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::string> split_words_lower(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) words.push_back(cur);
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

}  // namespace

std::string translation_key(const std::string& source_text,
                            const std::string& source_lang,
                            const std::string& target_lang) {
  // \x1f separators keep ("ab","c") and ("a","bc") apart.
  uint64_t h = fnv1a64(source_lang);
  h = fnv1a64("\x1f", h);
  h = fnv1a64(target_lang, h);
  h = fnv1a64("\x1f", h);
  h = fnv1a64(source_text, h);
  return hex64(h);
}

// ---------------------------------------------------------------- providers

namespace {

class IdentityProvider final : public TranslationProvider {
 public:
  std::string name() const override { return "identity"; }

 protected:
  std::vector<std::string> do_translate(const std::vector<std::string>& texts,
                                        const std::string&,
                                        const std::string&) override {
    return texts;
  }
};

class FixtureProvider final : public TranslationProvider {
 public:
  explicit FixtureProvider(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open fixture file " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      size_t tab = line.find('\t');
      if (tab == std::string::npos) {
        throw Error(ErrorCode::Config, path + ": fixture line without tab");
      }
      table_.emplace(line.substr(0, tab), line.substr(tab + 1));
    }
  }

  std::string name() const override { return "fixture"; }

 protected:
  std::vector<std::string> do_translate(const std::vector<std::string>& texts,
                                        const std::string&,
                                        const std::string&) override {
    std::vector<std::string> out;
    out.reserve(texts.size());
    for (const std::string& text : texts) {
      auto it = table_.find(text);
      if (it == table_.end()) {
        throw Error(ErrorCode::ProviderError,
                    "fixture " + path_ + " has no translation for '" + text + "'");
      }
      out.push_back(it->second);
    }
    return out;
  }

 private:
  std::string path_;
  std::unordered_map<std::string, std::string> table_;
};

class HttpProvider final : public TranslationProvider {
 public:
  explicit HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
    if (config_.api_key.empty()) {
      if (const char* key = std::getenv("OFFMIX_API_KEY")) config_.api_key = key;
    }
    if (config_.endpoint.empty()) {
      throw Error(ErrorCode::Config, "http provider needs an endpoint");
    }
  }

  std::string name() const override { return "http"; }

 protected:
  std::vector<std::string> do_translate(const std::vector<std::string>& texts,
                                        const std::string& source_lang,
                                        const std::string& target_lang) override {
    // Split endpoint into host and path.
    std::string url = config_.endpoint;
    size_t scheme = url.find("://");
    size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
    size_t path_start = url.find('/', host_start);
    std::string host = url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    nlohmann::json body;
    body["q"] = texts;
    body["source"] = source_lang;
    body["target"] = target_lang;
    if (!config_.api_key.empty()) body["key"] = config_.api_key;

    httplib::Client client(host);
    client.set_read_timeout(30, 0);
    int backoff_ms = config_.initial_backoff_ms;
    for (int attempt = 0;; ++attempt) {
      auto res = client.Post(path, body.dump(), "application/json");
      if (!res) {
        throw Error(ErrorCode::ProviderError,
                    "no response from " + config_.endpoint);
      }
      if (res->status == 429) {
        if (attempt >= config_.max_retries) {
          throw Error(ErrorCode::RateLimited,
                      "rate limited after " + std::to_string(attempt + 1) + " attempts");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        backoff_ms *= 2;
        continue;
      }
      if (res->status != 200) {
        throw Error(ErrorCode::ProviderError,
                    "HTTP " + std::to_string(res->status) + " from " + config_.endpoint);
      }
      nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
      if (reply.is_discarded() || !reply.contains("translations")) {
        throw Error(ErrorCode::ProviderError, "malformed provider reply");
      }
      std::vector<std::string> out = reply["translations"].get<std::vector<std::string>>();
      if (out.size() != texts.size()) {
        throw Error(ErrorCode::ProviderError, "provider returned wrong count");
      }
      return out;
    }
  }

 private:
  HttpProviderConfig config_;
};

}  // namespace

std::unique_ptr<TranslationProvider> make_identity_provider() {
  return std::make_unique<IdentityProvider>();
}

std::unique_ptr<TranslationProvider> make_fixture_provider(const std::string& tsv_path) {
  return std::make_unique<FixtureProvider>(tsv_path);
}

std::unique_ptr<TranslationProvider> make_http_provider(HttpProviderConfig config) {
  return std::make_unique<HttpProvider>(std::move(config));
}

// -------------------------------------------------------------------- cache

TranslationCache::TranslationCache(const std::string& path) : path_(path) {
  if (path_.empty()) return;
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;  // fresh cache file, created on first put
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::Io,
                  path_ + ":" + std::to_string(line_no) + ": bad cache line");
    }
    TranslationEntry e;
    e.source_hash = j.value("source_hash", "");
    e.source_text = j.value("source_text", "");
    e.source_lang = j.value("source_lang", "");
    e.target_lang = j.value("target_lang", "");
    e.translation = j.value("translation", "");
    e.provider = j.value("provider", "");
    e.timestamp = j.value("timestamp", "");
    entries_[e.source_hash] = std::move(e);
  }
}

std::optional<std::string> TranslationCache::get(const std::string& source_text,
                                                 const std::string& source_lang,
                                                 const std::string& target_lang) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(translation_key(source_text, source_lang, target_lang));
  if (it == entries_.end()) return std::nullopt;
  return it->second.translation;
}

void TranslationCache::put(const TranslationEntry& entry) {
  std::lock_guard<std::mutex> lock(mutex_);
  entries_[entry.source_hash] = entry;
  if (path_.empty()) return;
  nlohmann::json j;
  j["source_hash"] = entry.source_hash;
  j["source_text"] = entry.source_text;
  j["source_lang"] = entry.source_lang;
  j["target_lang"] = entry.target_lang;
  j["translation"] = entry.translation;
  j["provider"] = entry.provider;
  j["timestamp"] = entry.timestamp;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::Io, "cannot append to cache " + path_);
  out << j.dump() << '\n';
}

size_t TranslationCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

// ---------------------------------------------------------------- batching

std::vector<std::string> translate_batch(const std::vector<std::string>& texts,
                                         const std::string& source_lang,
                                         const std::string& target_lang,
                                         TranslationProvider* provider,
                                         TranslationCache& cache,
                                         const TranslateOptions& options) {
  std::vector<std::string> out(texts.size());
  std::vector<char> resolved(texts.size(), 0);

  // Distinct texts that still need the provider, in first-seen order.
  std::vector<std::string> missing;
  std::unordered_set<std::string> missing_seen;
  for (size_t i = 0; i < texts.size(); ++i) {
    if (auto hit = cache.get(texts[i], source_lang, target_lang)) {
      out[i] = *hit;
      resolved[i] = 1;
    } else if (missing_seen.insert(texts[i]).second) {
      missing.push_back(texts[i]);
    }
  }

  if (!missing.empty()) {
    if (!provider) {
      throw Error(ErrorCode::ProviderUnavailable,
                  std::to_string(missing.size()) +
                      " texts are uncached and no provider is configured");
    }
    for (size_t start = 0; start < missing.size(); start += options.batch_size) {
      size_t end = std::min(missing.size(), start + options.batch_size);
      std::vector<std::string> chunk(missing.begin() + start, missing.begin() + end);
      std::vector<std::string> translated;
      int backoff_ms = options.initial_backoff_ms;
      for (int attempt = 0;; ++attempt) {
        try {
          translated = provider->translate(chunk, source_lang, target_lang);
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::RateLimited || attempt >= options.max_retries) throw;
          std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
          backoff_ms *= 2;
        }
      }
      std::string stamp = utc_now_iso8601();
      for (size_t k = 0; k < chunk.size(); ++k) {
        TranslationEntry e;
        e.source_hash = translation_key(chunk[k], source_lang, target_lang);
        e.source_text = chunk[k];
        e.source_lang = source_lang;
        e.target_lang = target_lang;
        e.translation = translated[k];
        e.provider = provider->name();
        e.timestamp = stamp;
        cache.put(e);
      }
    }
    for (size_t i = 0; i < texts.size(); ++i) {
      if (!resolved[i]) {
        auto hit = cache.get(texts[i], source_lang, target_lang);
        out[i] = hit ? *hit : std::string();
      }
    }
  }
  return out;
}

bool is_suspect_translation(const std::string& source, const std::string& translation) {
  if (translation.empty()) return true;

  size_t letters = 0, ascii_letters = 0;
  size_t pos = 0;
  while (pos < translation.size()) {
    char32_t cp = decode_utf8(translation, pos);
    if (is_whitespace(cp) || is_punctuation(cp) || (cp >= '0' && cp <= '9')) continue;
    ++letters;
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) ++ascii_letters;
  }
  if (letters > 0 &&
      static_cast<double>(ascii_letters) / static_cast<double>(letters) < 0.8) {
    return true;
  }

  std::vector<std::string> src_words = split_words_lower(source);
  std::vector<std::string> dst_words = split_words_lower(translation);
  if (src_words == dst_words) return true;

  // Echoed-source check: a translation mostly made of source words was not
  // translated, merely re-cased or lightly mangled.
  if (!dst_words.empty()) {
    std::unordered_set<std::string> src_set(src_words.begin(), src_words.end());
    size_t echoed = 0;
    for (const std::string& w : dst_words) {
      if (src_set.count(w)) ++echoed;
    }
    if (static_cast<double>(echoed) / static_cast<double>(dst_words.size()) >= 0.5) {
      return true;
    }
  }
  return false;
}

std::vector<ParallelSample> build_parallel_corpus(const Dataset& ds,
                                                  TranslationProvider* provider,
                                                  TranslationCache& cache,
                                                  const TranslateOptions& options) {
  std::vector<std::string> texts;
  texts.reserve(ds.samples.size());
  for (const Sample& s : ds.samples) texts.push_back(s.text);

  std::string source_lang = to_string(ds.language);
  std::vector<std::string> translations =
      translate_batch(texts, source_lang, "en", provider, cache, options);

  CleanConfig clean = CleanConfig::task2();
  std::vector<ParallelSample> out;
  out.reserve(ds.samples.size());
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    ParallelSample p;
    p.id = ds.samples[i].id;
    p.native_text = ds.samples[i].text;
    p.english_text = clean_text(translations[i], clean);
    p.label = ds.samples[i].label;
    p.suspect = is_suspect_translation(ds.samples[i].text, translations[i]);
    out.push_back(std::move(p));
  }
  return out;
}

void save_parallel(const std::vector<ParallelSample>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << "id\tnative\tenglish\tlabel\tsuspect\n";
  for (const ParallelSample& p : rows) {
    auto sanitize = [](std::string s) {
      for (char& c : s) {
        if (c == '\t' || c == '\n' || c == '\r') c = ' ';
      }
      return s;
    };
    out << p.id << '\t' << sanitize(p.native_text) << '\t'
        << sanitize(p.english_text) << '\t'
        << (p.label ? to_string(*p.label) : std::string()) << '\t'
        << (p.suspect ? '1' : '0') << '\n';
  }
}

std::vector<ParallelSample> load_parallel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyFile, path + " is empty");
  std::vector<ParallelSample> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      size_t tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (fields.size() != 5) {
      throw Error(ErrorCode::MalformedRow,
                  path + ":" + std::to_string(line_no) + ": expected 5 fields");
    }
    ParallelSample p;
    p.id = fields[0];
    p.native_text = fields[1];
    p.english_text = fields[2];
    if (!fields[3].empty()) p.label = parse_label(fields[3]);
    p.suspect = fields[4] == "1";
    rows.push_back(std::move(p));
  }
  return rows;
}

}  // namespace offmix
