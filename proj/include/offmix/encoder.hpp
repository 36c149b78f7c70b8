#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "offmix/error.hpp"

namespace offmix {

/// Architecture constants for a pretrained encoder family.
struct EncoderSpec {
  std::string name;
  int num_layers = 0;
  int hidden_dim = 0;
  int num_heads = 0;
  bool trainable = false;
};

/// Registry of known encoder names ("xlmr-base", "distil-multilingual",
/// "toy"). Throws Error(Config) on unknown names.
EncoderSpec spec_for_name(const std::string& name);

/// Fixed-length token window: exactly T positions, padded with mask=false.
struct TokenSeq {
  std::vector<int32_t> ids;
  std::vector<uint8_t> mask;  // 1 = real token

  size_t length() const {
    size_t n = 0;
    for (uint8_t m : mask) n += m;
    return n;
  }
};

/// T x D per-token embeddings with the token mask carried through.
struct EmbeddingSeq {
  Eigen::MatrixXd values;      // T rows, D columns
  std::vector<uint8_t> mask;   // length T

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// Tokenizer + frozen embedding extractor behind one interface. Backends
/// are immutable after construction; concurrent calls are fine.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;

  virtual const EncoderSpec& spec() const = 0;
  int hidden_dim() const { return spec().hidden_dim; }

  /// Raw token ids for `text`, boundary tokens included, no padding or
  /// truncation. Throws Error(EmptyText) when no token results.
  virtual std::vector<int32_t> token_ids(const std::string& text) const = 0;

  virtual int32_t pad_id() const = 0;

  /// Embedding row for one token id.
  virtual Eigen::VectorXd embed(int32_t token_id) const = 0;
};

/// Pads or truncates the backend's token stream to exactly max_len
/// positions. max_len must be at least 2 so boundary tokens fit.
TokenSeq tokenize(const std::string& text, const EncoderBackend& backend,
                  int max_len);

/// Embeds a TokenSeq row by row; padding rows are zero and the mask is
/// copied through unchanged.
EmbeddingSeq encode(const TokenSeq& tokens, const EncoderBackend& backend);

/// Deterministic test backend: whitespace tokens with per-character
/// fallback for long words, and a fixed pseudorandom unit vector per
/// (token id, seed). No downloads, no state.
std::unique_ptr<EncoderBackend> make_toy_backend(int dim, uint64_t seed);

struct BackendOptions {
  std::string weights_dir;  // local directory holding exported weights
  bool offline = false;     // forbid anything that would download
  int toy_dim = 16;
  uint64_t toy_seed = 0;
};

/// Resolves a backend string:
///   "toy"                        toy backend (options.toy_dim/toy_seed)
///   "toy:dim=D,seed=S"           toy backend with explicit parameters
///   "table:/path/to/dir"         embedding-table backend from a directory
///   "xlmr-base", "distil-..."    table backend from weights_dir/<name>;
///                                Error(BackendUnavailable) if not present
///                                locally (downloads are never attempted).
std::unique_ptr<EncoderBackend> make_backend(const std::string& spec_string,
                                             const BackendOptions& options = {});

}  // namespace offmix
