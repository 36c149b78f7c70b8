#include "offmix/train.hpp"

#include <cmath>

#include <json.hpp>

#include "offmix/metrics.hpp"

namespace offmix {

namespace {

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Adam {
  Eigen::VectorXd m, v;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;

  explicit Adam(Eigen::Index n)
      : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
    ++t;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    params -= (lr / c1) * m.cwiseQuotient((v / c2).cwiseSqrt().array().matrix() +
                                          Eigen::VectorXd::Constant(v.size(), eps));
  }
};

double clamp_prob(double p, double clamp) {
  // Non-finite probabilities must reach the loss, where the training loop
  // aborts with NonFiniteLoss instead of silently clamping them away.
  if (!std::isfinite(p)) return p;
  return std::min(1.0 - clamp, std::max(clamp, p));
}

// One training problem = precomputed inputs + forward/backward plumbing.
// Both architectures reduce to this shape once the frozen encoders ran.
struct Task1Problem {
  ClassifierCore& core;
  const std::vector<EmbeddingSeq>& train_x;
  const std::vector<double>& train_y;
  const std::vector<EmbeddingSeq>& val_x;
  const std::vector<Label>& val_gold;

  double forward_backward(size_t idx, double dlogit_scale, double weight,
                          ClassifierCore::Grads* grads, double clamp) const {
    ClassifierCore::Cache cache;
    double p = core_forward(core, train_x[idx], &cache);
    double y = train_y[idx];
    double dlogit = weight * (p - y) * dlogit_scale;
    core_backward(core, cache, dlogit, grads);
    double pc = clamp_prob(p, clamp);
    return -weight * (y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
  }

  double predict_val(size_t idx) const { return core_forward(core, val_x[idx]); }
};

struct Task2Problem {
  ClassifierCore& core;
  FusionWeights weights;
  const std::vector<std::pair<EmbeddingSeq, EmbeddingSeq>>& train_x;
  const std::vector<double>& train_y;
  const std::vector<std::pair<EmbeddingSeq, EmbeddingSeq>>& val_x;
  const std::vector<Label>& val_gold;

  double forward_backward(size_t idx, double dlogit_scale, double weight,
                          ClassifierCore::Grads* grads, double clamp) const {
    DualViewCache cache;
    double p = dual_view_forward(core, train_x[idx].first, train_x[idx].second,
                                 weights, &cache);
    double y = train_y[idx];
    double dlogit = weight * (p - y) * dlogit_scale;
    dual_view_backward(core, cache, weights, dlogit, grads);
    double pc = clamp_prob(p, clamp);
    return -weight * (y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
  }

  double predict_val(size_t idx) const {
    return dual_view_forward(core, val_x[idx].first, val_x[idx].second, weights);
  }
};

template <typename Problem>
TrainHistory run_training(Problem& prob, ClassifierCore& core,
                          const TrainConfig& config, size_t n_train, size_t n_val) {
  if (n_train == 0) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  if (n_val == 0) throw Error(ErrorCode::EmptyDataset, "validation set is empty");

  TrainHistory history;
  if (config.max_epochs <= 0) return history;

  // Inverse-frequency class weights, normalized so the mean weight is 1.
  double w_off = 1.0, w_not = 1.0;
  if (config.class_weighting == TrainConfig::ClassWeighting::inverse_frequency) {
    double n_off = 0.0;
    for (size_t i = 0; i < n_train; ++i) n_off += prob.train_y[i];
    double n_not = static_cast<double>(n_train) - n_off;
    if (n_off > 0.0 && n_not > 0.0) {
      w_off = static_cast<double>(n_train) / (2.0 * n_off);
      w_not = static_cast<double>(n_train) / (2.0 * n_not);
    }
  }

  Eigen::VectorXd params = core_get_params(core);
  Adam adam(params.size());
  Eigen::VectorXd best_params = params;
  double best_f1 = -1.0;
  int best_epoch = -1;
  int since_best = 0;

  std::mt19937_64 rng(mix64(config.seed));
  std::vector<size_t> order(n_train);
  for (size_t i = 0; i < n_train; ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(rng() % i);
      std::swap(order[i - 1], order[j]);
    }

    double loss_sum = 0.0;
    size_t batch_size = static_cast<size_t>(std::max(1, config.batch_size));
    for (size_t start = 0; start < n_train; start += batch_size) {
      size_t end = std::min(n_train, start + batch_size);
      double scale = 1.0 / static_cast<double>(end - start);
      ClassifierCore::Grads grads = core.zero_grads();
      double batch_loss = 0.0;
      for (size_t k = start; k < end; ++k) {
        size_t idx = order[k];
        double w = prob.train_y[idx] > 0.5 ? w_off : w_not;
        batch_loss +=
            prob.forward_backward(idx, scale, w, &grads, config.prob_clamp);
      }
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorCode::NonFiniteLoss,
                    "epoch " + std::to_string(epoch) + ", batch at sample " +
                        std::to_string(start) + ": loss is not finite");
      }
      Eigen::VectorXd flat_grads = core_flatten_grads(core, grads);
      adam.step(params, flat_grads, config.learning_rate);
      core_set_params(core, params);
      loss_sum += batch_loss;
    }

    std::vector<Label> preds;
    preds.reserve(n_val);
    for (size_t i = 0; i < n_val; ++i) {
      double p = prob.predict_val(i);
      preds.push_back(p > config.threshold ? Label::OFF : Label::NOT);
    }
    MetricsReport report = compute_metrics(preds, prob.val_gold);

    TrainHistory::Epoch entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(n_train);
    entry.val_weighted_f1 = report.weighted_f1;
    history.epochs.push_back(entry);

    if (report.weighted_f1 > best_f1) {
      best_f1 = report.weighted_f1;
      best_epoch = epoch;
      best_params = params;
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= config.early_stop_patience) break;
    }
  }

  core_set_params(core, best_params);
  history.best_epoch = best_epoch;
  return history;
}

double require_label(const std::optional<Label>& label, const std::string& id) {
  if (!label) throw Error(ErrorCode::UnlabeledSample, "sample '" + id + "' has no label");
  return *label == Label::OFF ? 1.0 : 0.0;
}

}  // namespace

double bce_loss(const std::vector<double>& probs, const std::vector<double>& targets,
                double clamp) {
  if (probs.size() != targets.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(probs.size()) + " probs vs " +
                    std::to_string(targets.size()) + " targets");
  }
  if (probs.empty()) throw Error(ErrorCode::EmptyInput, "empty batch");
  double sum = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    double p = clamp_prob(probs[i], clamp);
    sum += -(targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p));
  }
  return sum / static_cast<double>(probs.size());
}

std::string history_to_json(const TrainHistory& history) {
  nlohmann::json j;
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : history.epochs) {
    j["epochs"].push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"val_weighted_f1", e.val_weighted_f1}});
  }
  j["best_epoch"] = history.best_epoch;
  return j.dump(2);
}

TrainHistory train_task1(DualConcatModel& model, const Dataset& train_ds,
                         const Dataset& val_ds, const TrainConfig& config) {
  std::vector<EmbeddingSeq> train_x, val_x;
  std::vector<double> train_y;
  std::vector<Label> val_gold;
  train_x.reserve(train_ds.size());
  val_x.reserve(val_ds.size());
  for (const Sample& s : train_ds.samples) {
    train_y.push_back(require_label(s.label, s.id));
    train_x.push_back(model.encode_views(s.text));
  }
  for (const Sample& s : val_ds.samples) {
    require_label(s.label, s.id);
    val_gold.push_back(*s.label);
    val_x.push_back(model.encode_views(s.text));
  }
  Task1Problem prob{model.core, train_x, train_y, val_x, val_gold};
  return run_training(prob, model.core, config, train_x.size(), val_x.size());
}

TrainHistory train_task2(DualViewModel& model,
                         const std::vector<ParallelSample>& train_rows,
                         const std::vector<ParallelSample>& val_rows,
                         const TrainConfig& config) {
  std::vector<std::pair<EmbeddingSeq, EmbeddingSeq>> train_x, val_x;
  std::vector<double> train_y;
  std::vector<Label> val_gold;
  train_x.reserve(train_rows.size());
  val_x.reserve(val_rows.size());
  for (const ParallelSample& p : train_rows) {
    train_y.push_back(require_label(p.label, p.id));
    train_x.emplace_back(model.encode_text(p.native_text),
                         model.encode_text(p.english_text));
  }
  for (const ParallelSample& p : val_rows) {
    require_label(p.label, p.id);
    val_gold.push_back(*p.label);
    val_x.emplace_back(model.encode_text(p.native_text),
                       model.encode_text(p.english_text));
  }
  Task2Problem prob{model.core, model.weights, train_x, train_y, val_x, val_gold};
  return run_training(prob, model.core, config, train_x.size(), val_x.size());
}

}  // namespace offmix
