#include "offmix/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string_view>
#include <unordered_map>

#include <json.hpp>

#include "offmix/unicode.hpp"

namespace offmix {

namespace {

constexpr int32_t kPadId = 0;
constexpr int32_t kBosId = 1;
constexpr int32_t kEosId = 2;
constexpr int32_t kFirstHashId = 3;
constexpr uint64_t kHashVocabSpan = 1u << 20;
// Words longer than this (in code points, so native scripts are not
// penalized for their UTF-8 width) fall back to per-character tokens.
constexpr size_t kToyWordCpLimit = 16;

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<std::string> whitespace_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t start = pos;
    char32_t cp = decode_utf8(text, pos);
    if (is_whitespace(cp)) {
      if (!cur.empty()) words.push_back(cur);
      cur.clear();
    } else {
      cur.append(text, start, pos - start);
    }
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

// xorshift-free uniform double in [0,1) from the top 53 bits.
double uniform53(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

class ToyBackend final : public EncoderBackend {
 public:
  ToyBackend(int dim, uint64_t seed) : seed_(seed) {
    if (dim < 2) throw Error(ErrorCode::Config, "toy backend needs dim >= 2");
    spec_ = {"toy", 1, dim, 1, false};
  }

  const EncoderSpec& spec() const override { return spec_; }
  int32_t pad_id() const override { return kPadId; }

  std::vector<int32_t> token_ids(const std::string& text) const override {
    std::vector<int32_t> ids;
    ids.push_back(kBosId);
    for (const std::string& word : whitespace_words(text)) {
      size_t cps = 0;
      for (size_t pos = 0; pos < word.size(); ++cps) decode_utf8(word, pos);
      if (cps <= kToyWordCpLimit) {
        ids.push_back(hash_token(word));
      } else {
        size_t pos = 0;
        while (pos < word.size()) {
          size_t start = pos;
          decode_utf8(word, pos);
          ids.push_back(hash_token(word.substr(start, pos - start)));
        }
      }
    }
    if (ids.size() == 1) throw Error(ErrorCode::EmptyText, "no tokens in input text");
    ids.push_back(kEosId);
    return ids;
  }

  Eigen::VectorXd embed(int32_t token_id) const override {
    // Fixed pseudorandom unit vector per (token id, seed); position-free.
    std::mt19937_64 rng(mix64(seed_ * 0x9e3779b97f4a7c15ULL ^
                              static_cast<uint64_t>(token_id)));
    Eigen::VectorXd v(spec_.hidden_dim);
    int i = 0;
    while (i < spec_.hidden_dim) {
      // Box-Muller, hand-rolled so the stream is the same everywhere.
      double u1 = uniform53(rng);
      double u2 = uniform53(rng);
      if (u1 <= 0.0) u1 = 0x1.0p-53;
      double r = std::sqrt(-2.0 * std::log(u1));
      v[i++] = r * std::cos(2.0 * M_PI * u2);
      if (i < spec_.hidden_dim) v[i++] = r * std::sin(2.0 * M_PI * u2);
    }
    double norm = v.norm();
    if (norm == 0.0) v[0] = norm = 1.0;
    return v / norm;
  }

 private:
  static int32_t hash_token(const std::string& token) {
    return static_cast<int32_t>(kFirstHashId + fnv1a64(token) % kHashVocabSpan);
  }

  EncoderSpec spec_;
  uint64_t seed_;
};

// Embedding-table backend: a local directory with manifest.json, a vocab
// listing (line number = id) and a row-major float64 embedding matrix.
// This is the shape pretrained weights take after an offline export; the
// transformer stack itself is out of scope here.
class TableBackend final : public EncoderBackend {
 public:
  explicit TableBackend(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) {
      throw Error(ErrorCode::BackendUnavailable, "no manifest.json under " + dir);
    }
    nlohmann::json manifest = nlohmann::json::parse(mf, nullptr, false);
    if (manifest.is_discarded()) {
      throw Error(ErrorCode::Config, dir + "/manifest.json is not valid JSON");
    }
    spec_.name = manifest.value("name", "table");
    spec_.num_layers = manifest.value("num_layers", 0);
    spec_.hidden_dim = manifest.value("hidden_dim", 0);
    spec_.num_heads = manifest.value("num_heads", 0);
    spec_.trainable = false;
    if (spec_.hidden_dim <= 0) {
      throw Error(ErrorCode::Config, dir + ": manifest hidden_dim must be positive");
    }

    std::string vocab_file = dir + "/" + manifest.value("vocab", "vocab.txt");
    std::ifstream vf(vocab_file, std::ios::binary);
    if (!vf) throw Error(ErrorCode::BackendUnavailable, "missing " + vocab_file);
    std::string line;
    int32_t id = 0;
    while (std::getline(vf, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      vocab_.emplace(line, id++);
      max_token_bytes_ = std::max(max_token_bytes_, line.size());
    }
    if (id < 4) {
      throw Error(ErrorCode::Config,
                  vocab_file + " must list [PAD],[BOS],[EOS],[UNK] first");
    }

    std::string emb_file = dir + "/" + manifest.value("embeddings", "embeddings.f64");
    std::ifstream ef(emb_file, std::ios::binary);
    if (!ef) throw Error(ErrorCode::BackendUnavailable, "missing " + emb_file);
    size_t bytes = fs::file_size(emb_file);
    size_t expected = static_cast<size_t>(id) * spec_.hidden_dim * sizeof(double);
    if (bytes != expected) {
      throw Error(ErrorCode::Config,
                  emb_file + ": size " + std::to_string(bytes) + " != vocab*dim*8");
    }
    table_.resize(id, spec_.hidden_dim);
    ef.read(reinterpret_cast<char*>(table_.data()),
            static_cast<std::streamsize>(bytes));
    if (!ef) throw Error(ErrorCode::Io, "short read from " + emb_file);
  }

  const EncoderSpec& spec() const override { return spec_; }
  int32_t pad_id() const override { return 0; }

  std::vector<int32_t> token_ids(const std::string& text) const override {
    std::vector<int32_t> ids;
    ids.push_back(1);  // [BOS]
    for (const std::string& word : whitespace_words(text)) {
      size_t pos = 0;
      while (pos < word.size()) {
        // Greedy longest vocab entry starting here; unknown bytes emit
        // [UNK] and skip one code point.
        size_t best_len = 0;
        int32_t best_id = 3;
        size_t limit = std::min(word.size() - pos, max_token_bytes_);
        for (size_t len = limit; len >= 1; --len) {
          auto it = vocab_.find(word.substr(pos, len));
          if (it != vocab_.end()) {
            best_len = len;
            best_id = it->second;
            break;
          }
        }
        if (best_len == 0) {
          size_t next = pos;
          decode_utf8(word, next);
          best_len = next - pos;
        }
        ids.push_back(best_id);
        pos += best_len;
      }
    }
    if (ids.size() == 1) throw Error(ErrorCode::EmptyText, "no tokens in input text");
    ids.push_back(2);  // [EOS]
    return ids;
  }

  Eigen::VectorXd embed(int32_t token_id) const override {
    if (token_id < 0 || token_id >= table_.rows()) {
      return Eigen::VectorXd::Zero(spec_.hidden_dim);
    }
    return table_.row(token_id).transpose();
  }

 private:
  EncoderSpec spec_;
  std::unordered_map<std::string, int32_t> vocab_;
  size_t max_token_bytes_ = 0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> table_;
};

}  // namespace

EncoderSpec spec_for_name(const std::string& name) {
  if (name == "xlmr-base") return {"xlmr-base", 12, 768, 8, false};
  if (name == "distil-multilingual") return {"distil-multilingual", 6, 768, 12, false};
  if (name == "toy") return {"toy", 1, 16, 1, false};
  throw Error(ErrorCode::Config, "unknown encoder name '" + name + "'");
}

TokenSeq tokenize(const std::string& text, const EncoderBackend& backend,
                  int max_len) {
  if (max_len < 2) {
    throw Error(ErrorCode::Config, "max_len must be >= 2 to fit boundary tokens");
  }
  std::vector<int32_t> raw = backend.token_ids(text);
  TokenSeq seq;
  seq.ids.assign(static_cast<size_t>(max_len), backend.pad_id());
  seq.mask.assign(static_cast<size_t>(max_len), 0);
  size_t n = std::min(raw.size(), static_cast<size_t>(max_len));
  for (size_t i = 0; i < n; ++i) {
    seq.ids[i] = raw[i];
    seq.mask[i] = 1;
  }
  return seq;
}

EmbeddingSeq encode(const TokenSeq& tokens, const EncoderBackend& backend) {
  EmbeddingSeq seq;
  seq.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tokens.ids.size()),
                                     backend.hidden_dim());
  seq.mask = tokens.mask;
  for (size_t i = 0; i < tokens.ids.size(); ++i) {
    if (tokens.mask[i]) {
      seq.values.row(static_cast<Eigen::Index>(i)) =
          backend.embed(tokens.ids[i]).transpose();
    }
  }
  return seq;
}

std::unique_ptr<EncoderBackend> make_toy_backend(int dim, uint64_t seed) {
  return std::make_unique<ToyBackend>(dim, seed);
}

std::unique_ptr<EncoderBackend> make_backend(const std::string& spec_string,
                                             const BackendOptions& options) {
  if (spec_string == "toy" || spec_string.rfind("toy:", 0) == 0) {
    int dim = options.toy_dim;
    uint64_t seed = options.toy_seed;
    if (spec_string.size() > 4) {
      std::string args = spec_string.substr(4);
      size_t start = 0;
      while (start < args.size()) {
        size_t comma = args.find(',', start);
        std::string kv = args.substr(start, comma == std::string::npos
                                                ? std::string::npos
                                                : comma - start);
        size_t eq = kv.find('=');
        if (eq == std::string::npos) {
          throw Error(ErrorCode::Config, "bad toy backend argument '" + kv + "'");
        }
        std::string key = kv.substr(0, eq);
        std::string val = kv.substr(eq + 1);
        if (key == "dim") dim = std::stoi(val);
        else if (key == "seed") seed = std::stoull(val);
        else throw Error(ErrorCode::Config, "unknown toy backend key '" + key + "'");
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
    return make_toy_backend(dim, seed);
  }
  if (spec_string.rfind("table:", 0) == 0) {
    return std::make_unique<TableBackend>(spec_string.substr(6));
  }

  EncoderSpec expected = spec_for_name(spec_string);  // validates the name
  if (!options.weights_dir.empty()) {
    std::string dir = options.weights_dir + "/" + spec_string;
    if (std::filesystem::exists(dir + "/manifest.json")) {
      auto backend = std::make_unique<TableBackend>(dir);
      if (backend->spec().hidden_dim != expected.hidden_dim) {
        throw Error(ErrorCode::Config,
                    dir + ": hidden_dim " + std::to_string(backend->spec().hidden_dim) +
                        " does not match " + spec_string);
      }
      return backend;
    }
  }
  throw Error(ErrorCode::BackendUnavailable,
              "weights for '" + spec_string + "' not found locally" +
                  (options.weights_dir.empty()
                       ? " (no --weights-dir configured)"
                       : " under " + options.weights_dir) +
                  (options.offline ? "; offline mode forbids downloads"
                                   : "; this build never downloads weights"));
}

}  // namespace offmix
