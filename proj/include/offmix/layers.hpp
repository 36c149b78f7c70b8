#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <vector>

#include "offmix/corpus.hpp"
#include "offmix/encoder.hpp"

namespace offmix {

// Neural building blocks for both classifier architectures. Everything is
// double precision with explicit backward passes; masked positions never
// enter a recurrence, a pool or a gradient.

struct BiLstmStackConfig {
  int num_layers = 3;
  int units = 128;  // per direction; layer output width is 2*units
};

/// Convex pair weighting the native and English view vectors.
struct FusionWeights {
  double w_native = 0.5;
  double w_english = 0.5;

  FusionWeights() = default;
  /// Validates both weights lie in [0,1] and sum to one (tolerance 1e-9).
  FusionWeights(double native, double english);

  /// (0.7, 0.3) for Tamil, (0.6, 0.4) for Malayalam.
  static FusionWeights defaults_for(Language lang);
};

/// Per-position feature concatenation: [a | b] with masks ANDed.
EmbeddingSeq concat_features(const EmbeddingSeq& a, const EmbeddingSeq& b);

/// Mean of the mask-true rows. Throws Error(AllMasked) when none.
Eigen::VectorXd global_avg_pool(const EmbeddingSeq& seq);

Eigen::VectorXd weighted_fuse(const Eigen::VectorXd& v_native,
                              const Eigen::VectorXd& v_english,
                              const FusionWeights& w);

double sigmoid(double x);

// ------------------------------------------------------------------ LSTM

/// One direction's parameters. Gates are stacked in rows as
/// [input; forget; cell; output], each block `units` tall.
struct LstmParams {
  Eigen::MatrixXd W;  // 4u x input_dim
  Eigen::MatrixXd U;  // 4u x u
  Eigen::VectorXd b;  // 4u

  void init(int input_dim, int units, std::mt19937_64& rng);
  void zero(int input_dim, int units);
};

struct LstmStepCache {
  Eigen::VectorXd x, h_prev, c_prev;
  Eigen::VectorXd i, f, g, o, c, tanh_c;
};

struct BiLstmLayerCache {
  std::vector<int> positions;           // mask-true indices, ascending
  std::vector<LstmStepCache> fwd, bwd;  // per processed step
};

struct BiLstmStackCache {
  std::vector<BiLstmLayerCache> layers;
  std::vector<EmbeddingSeq> inputs;  // input to each layer
};

/// Stack of bidirectional LSTM layers with masked recurrence: only
/// mask-true positions are visited (in both directions), masked output
/// rows stay zero and the mask passes through unchanged.
class BiLstmStack {
 public:
  struct LayerParams {
    LstmParams fwd, bwd;
  };

  BiLstmStack(BiLstmStackConfig config, int input_dim, uint64_t seed);

  const BiLstmStackConfig& config() const { return config_; }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return 2 * config_.units; }
  std::vector<LayerParams>& layers() { return layers_; }
  const std::vector<LayerParams>& layers() const { return layers_; }

  /// Throws Error(NonFiniteInput) on non-finite values in live rows.
  EmbeddingSeq forward(const EmbeddingSeq& seq, BiLstmStackCache* cache = nullptr) const;

  /// Accumulates parameter gradients (and returns the input gradient) for
  /// the forward pass recorded in `cache`.
  EmbeddingSeq backward(const EmbeddingSeq& grad_out, const BiLstmStackCache& cache,
                        std::vector<LayerParams>* grads) const;

  std::vector<LayerParams> zero_grads() const;

  void set_all_zero();

 private:
  BiLstmStackConfig config_;
  int input_dim_;
  std::vector<LayerParams> layers_;
};

// ------------------------------------------------------------------- head

/// Fully-connected head ending in one logit. hidden_dim > 0 inserts a
/// tanh layer (in -> hidden -> 1); hidden_dim == 0 is a plain linear head.
class MlpHead {
 public:
  MlpHead() = default;
  MlpHead(int in_dim, int hidden_dim, std::mt19937_64& rng);

  struct Grads {
    Eigen::MatrixXd W1;
    Eigen::VectorXd b1, w2;
    double b2 = 0.0;
  };
  struct Cache {
    Eigen::VectorXd v, a1;
  };

  int in_dim() const { return in_dim_; }
  int hidden_dim() const { return hidden_dim_; }

  double logit(const Eigen::VectorXd& v, Cache* cache = nullptr) const;
  /// dv for a given dlogit; parameter gradients accumulate into `grads`.
  Eigen::VectorXd backward(double dlogit, const Cache& cache, Grads* grads) const;

  Grads zero_grads() const;
  void set_all_zero();

  // Parameters are public-ish through accessors so tests can pin values.
  Eigen::MatrixXd& W1() { return W1_; }
  Eigen::VectorXd& b1() { return b1_; }
  Eigen::VectorXd& w2() { return w2_; }
  double& b2() { return b2_; }
  const Eigen::MatrixXd& W1() const { return W1_; }
  const Eigen::VectorXd& b1() const { return b1_; }
  const Eigen::VectorXd& w2() const { return w2_; }
  double b2() const { return b2_; }

 private:
  int in_dim_ = 0;
  int hidden_dim_ = 0;
  Eigen::MatrixXd W1_;
  Eigen::VectorXd b1_;
  Eigen::VectorXd w2_;
  double b2_ = 0.0;
};

/// Sigmoid of the head's logit, clamped to the open interval.
/// Throws Error(NonFiniteInput) on a non-finite input vector.
double classify(const Eigen::VectorXd& v, const MlpHead& head);

}  // namespace offmix
