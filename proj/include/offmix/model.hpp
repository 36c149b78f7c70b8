#pragma once

#include <memory>
#include <string>

#include "offmix/layers.hpp"
#include "offmix/textprep.hpp"
#include "offmix/translate.hpp"

namespace offmix {

/// The trainable part shared by both architectures: a BiLSTM stack over
/// per-token embeddings, masked global average pooling and an MLP head.
struct ClassifierCore {
  BiLstmStack stack;
  MlpHead head;

  ClassifierCore(BiLstmStackConfig config, int input_dim, uint64_t seed)
      : stack(config, input_dim, seed),
        head(make_head(config, seed)) {}

  struct Grads {
    std::vector<BiLstmStack::LayerParams> stack;
    MlpHead::Grads head;
  };
  struct Cache {
    BiLstmStackCache stack;
    MlpHead::Cache head;
    long live = 0;  // pooled positions
  };

  Grads zero_grads() const { return {stack.zero_grads(), head.zero_grads()}; }

 private:
  MlpHead make_head(BiLstmStackConfig config, uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x2545f4914f6cdd1dULL);
    return MlpHead(2 * config.units, config.units, rng);
  }
};

/// sigmoid(head(pool(stack(x)))). `cache` enables a later backward call.
double core_forward(const ClassifierCore& core, const EmbeddingSeq& x,
                    ClassifierCore::Cache* cache = nullptr);

/// Backward of core_forward given d(loss)/d(logit); accumulates into grads.
void core_backward(const ClassifierCore& core, const ClassifierCore::Cache& cache,
                   double dlogit, ClassifierCore::Grads* grads);

struct DualViewCache {
  ClassifierCore::Cache native, english;
  MlpHead::Cache head;
};

/// sigmoid(head(fuse(pool(stack(native)), pool(stack(english))))) with the
/// stack shared across the two views.
double dual_view_forward(const ClassifierCore& core, const EmbeddingSeq& native,
                         const EmbeddingSeq& english, const FusionWeights& weights,
                         DualViewCache* cache = nullptr);

void dual_view_backward(const ClassifierCore& core, const DualViewCache& cache,
                        const FusionWeights& weights, double dlogit,
                        ClassifierCore::Grads* grads);

// Flat parameter access, used by the optimizer and the gradient checker.
// Order: per layer fwd.W,U,b then bwd.W,U,b; then head W1,b1,w2,b2.
Eigen::Index core_param_count(const ClassifierCore& core);
Eigen::VectorXd core_get_params(const ClassifierCore& core);
void core_set_params(ClassifierCore& core, const Eigen::VectorXd& flat);
Eigen::VectorXd core_flatten_grads(const ClassifierCore& core,
                                   const ClassifierCore::Grads& grads);

// ------------------------------------------------------------ architectures

/// Dual-encoder feature-concatenation classifier: two frozen encoders,
/// per-position feature concat, then the shared core.
struct DualConcatModel {
  std::shared_ptr<EncoderBackend> backend_a;
  std::shared_ptr<EncoderBackend> backend_b;
  std::string backend_a_spec;
  std::string backend_b_spec;
  int max_len = 128;
  CleanConfig clean = CleanConfig::task1();
  Language language = Language::ta;
  double threshold = 0.5;
  ClassifierCore core;

  DualConcatModel(std::shared_ptr<EncoderBackend> a, std::shared_ptr<EncoderBackend> b,
                  std::string a_spec, std::string b_spec, BiLstmStackConfig config,
                  int max_len_, uint64_t seed)
      : backend_a(std::move(a)),
        backend_b(std::move(b)),
        backend_a_spec(std::move(a_spec)),
        backend_b_spec(std::move(b_spec)),
        max_len(max_len_),
        core(config, backend_a->hidden_dim() + backend_b->hidden_dim(), seed) {}

  /// clean, tokenize with both backends to the same window, encode, concat.
  EmbeddingSeq encode_views(const std::string& text) const;
};

/// Dual-view weighted-fusion classifier: one shared frozen encoder over
/// the native and English renderings, fused by a convex pair.
struct DualViewModel {
  std::shared_ptr<EncoderBackend> backend;
  std::string backend_spec;
  int max_len = 128;
  FusionWeights weights;
  Language language = Language::ta;
  double threshold = 0.5;
  ClassifierCore core;

  DualViewModel(std::shared_ptr<EncoderBackend> b, std::string b_spec,
                BiLstmStackConfig config, int max_len_, FusionWeights w,
                Language lang, uint64_t seed)
      : backend(std::move(b)),
        backend_spec(std::move(b_spec)),
        max_len(max_len_),
        weights(w),
        language(lang),
        core(config, backend->hidden_dim(), seed) {}

  EmbeddingSeq encode_text(const std::string& text) const;
};

/// Full task-1 pipeline on one raw comment.
double forward_task1(const std::string& text, const DualConcatModel& model,
                     const CleanConfig& clean);

/// Full task-2 pipeline on one (native, english) pair.
double forward_task2(const ParallelSample& parallel, const DualViewModel& model);

// ------------------------------------------------------------- checkpoints

/// Writes manifest.json (specs, config, fusion weights, threshold) plus a
/// params.bin blob of little-endian doubles in flat order.
void save_checkpoint(const DualConcatModel& model, const std::string& dir);
void save_checkpoint(const DualViewModel& model, const std::string& dir);

Task checkpoint_task(const std::string& dir);

DualConcatModel load_task1_checkpoint(const std::string& dir,
                                      const BackendOptions& options = {});
DualViewModel load_task2_checkpoint(const std::string& dir,
                                    const BackendOptions& options = {});

}  // namespace offmix
