#include "offmix/layers.hpp"

#include <cmath>

namespace offmix {

namespace {

double uniform53(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_pm(std::mt19937_64& rng, double radius) {
  return (2.0 * uniform53(rng) - 1.0) * radius;
}

Eigen::VectorXd sigmoid_vec(const Eigen::VectorXd& z) {
  return z.unaryExpr([](double x) { return sigmoid(x); });
}

void check_live_rows_finite(const EmbeddingSeq& seq) {
  for (Eigen::Index t = 0; t < seq.rows(); ++t) {
    if (seq.mask[static_cast<size_t>(t)] && !seq.values.row(t).allFinite()) {
      throw Error(ErrorCode::NonFiniteInput,
                  "non-finite value at sequence position " + std::to_string(t));
    }
  }
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

FusionWeights::FusionWeights(double native, double english)
    : w_native(native), w_english(english) {
  if (!(native >= 0.0 && native <= 1.0 && english >= 0.0 && english <= 1.0)) {
    throw Error(ErrorCode::Config, "fusion weights must lie in [0,1]");
  }
  if (std::abs(native + english - 1.0) > 1e-9) {
    throw Error(ErrorCode::Config, "fusion weights must sum to 1");
  }
}

FusionWeights FusionWeights::defaults_for(Language lang) {
  return lang == Language::ta ? FusionWeights(0.7, 0.3) : FusionWeights(0.6, 0.4);
}

EmbeddingSeq concat_features(const EmbeddingSeq& a, const EmbeddingSeq& b) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::LengthMismatch,
                "concat_features: " + std::to_string(a.rows()) + " vs " +
                    std::to_string(b.rows()) + " positions");
  }
  EmbeddingSeq out;
  out.values.resize(a.rows(), a.cols() + b.cols());
  out.values.leftCols(a.cols()) = a.values;
  out.values.rightCols(b.cols()) = b.values;
  out.mask.resize(a.mask.size());
  for (size_t t = 0; t < a.mask.size(); ++t) out.mask[t] = a.mask[t] & b.mask[t];
  return out;
}

Eigen::VectorXd global_avg_pool(const EmbeddingSeq& seq) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(seq.cols());
  long live = 0;
  for (Eigen::Index t = 0; t < seq.rows(); ++t) {
    if (seq.mask[static_cast<size_t>(t)]) {
      sum += seq.values.row(t).transpose();
      ++live;
    }
  }
  if (live == 0) throw Error(ErrorCode::AllMasked, "global_avg_pool over empty mask");
  return sum / static_cast<double>(live);
}

Eigen::VectorXd weighted_fuse(const Eigen::VectorXd& v_native,
                              const Eigen::VectorXd& v_english,
                              const FusionWeights& w) {
  if (v_native.size() != v_english.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "weighted_fuse: " + std::to_string(v_native.size()) + " vs " +
                    std::to_string(v_english.size()));
  }
  return w.w_native * v_native + w.w_english * v_english;
}

// ------------------------------------------------------------------ LSTM

void LstmParams::init(int input_dim, int units, std::mt19937_64& rng) {
  double radius = 1.0 / std::sqrt(static_cast<double>(units));
  W.resize(4 * units, input_dim);
  U.resize(4 * units, units);
  b = Eigen::VectorXd::Zero(4 * units);
  for (Eigen::Index r = 0; r < W.rows(); ++r) {
    for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = uniform_pm(rng, radius);
  }
  for (Eigen::Index r = 0; r < U.rows(); ++r) {
    for (Eigen::Index c = 0; c < U.cols(); ++c) U(r, c) = uniform_pm(rng, radius);
  }
  // Forget-gate bias starts at 1 so early gradients survive the gate.
  b.segment(units, units).setOnes();
}

void LstmParams::zero(int input_dim, int units) {
  W = Eigen::MatrixXd::Zero(4 * units, input_dim);
  U = Eigen::MatrixXd::Zero(4 * units, units);
  b = Eigen::VectorXd::Zero(4 * units);
}

namespace {

// Runs one direction over `positions` (already ordered for the direction),
// writing h into out columns [col0, col0+u).
void lstm_pass(const EmbeddingSeq& in, const std::vector<int>& positions,
               const LstmParams& p, int units, Eigen::MatrixXd& out, int col0,
               std::vector<LstmStepCache>* cache) {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(units);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(units);
  for (int pos : positions) {
    Eigen::VectorXd x = in.values.row(pos).transpose();
    Eigen::VectorXd z = p.W * x + p.U * h + p.b;
    LstmStepCache step;
    step.i = sigmoid_vec(z.segment(0, units));
    step.f = sigmoid_vec(z.segment(units, units));
    step.g = z.segment(2 * units, units).array().tanh();
    step.o = sigmoid_vec(z.segment(3 * units, units));
    step.c = step.f.cwiseProduct(c) + step.i.cwiseProduct(step.g);
    step.tanh_c = step.c.array().tanh();
    Eigen::VectorXd h_new = step.o.cwiseProduct(step.tanh_c);
    out.row(pos).segment(col0, units) = h_new.transpose();
    if (cache) {
      step.x = std::move(x);
      step.h_prev = h;
      step.c_prev = c;
      cache->push_back(std::move(step));
    }
    h = std::move(h_new);
    c = cache ? cache->back().c : step.c;
  }
}

// Backward through one direction; returns nothing, accumulates into
// `grads` and `dx` (dx rows indexed by original positions).
void lstm_pass_backward(const std::vector<int>& positions,
                        const std::vector<LstmStepCache>& steps,
                        const LstmParams& p, int units,
                        const Eigen::MatrixXd& grad_out, int col0,
                        LstmParams& grads, Eigen::MatrixXd& dx) {
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(units);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(units);
  Eigen::VectorXd dz(4 * units);
  for (size_t k = positions.size(); k-- > 0;) {
    const LstmStepCache& s = steps[k];
    int pos = positions[k];
    Eigen::VectorXd dh = grad_out.row(pos).segment(col0, units).transpose() + dh_next;
    Eigen::VectorXd dout = dh.cwiseProduct(s.tanh_c);
    Eigen::VectorXd dc =
        dh.cwiseProduct(s.o)
            .cwiseProduct(Eigen::VectorXd::Ones(units) - s.tanh_c.cwiseProduct(s.tanh_c)) +
        dc_next;
    Eigen::VectorXd df = dc.cwiseProduct(s.c_prev);
    Eigen::VectorXd di = dc.cwiseProduct(s.g);
    Eigen::VectorXd dg = dc.cwiseProduct(s.i);
    dc_next = dc.cwiseProduct(s.f);
    dz.segment(0, units) =
        di.cwiseProduct(s.i).cwiseProduct(Eigen::VectorXd::Ones(units) - s.i);
    dz.segment(units, units) =
        df.cwiseProduct(s.f).cwiseProduct(Eigen::VectorXd::Ones(units) - s.f);
    dz.segment(2 * units, units) =
        dg.cwiseProduct(Eigen::VectorXd::Ones(units) - s.g.cwiseProduct(s.g));
    dz.segment(3 * units, units) =
        dout.cwiseProduct(s.o).cwiseProduct(Eigen::VectorXd::Ones(units) - s.o);

    grads.W.noalias() += dz * s.x.transpose();
    grads.U.noalias() += dz * s.h_prev.transpose();
    grads.b += dz;
    dx.row(pos) += (p.W.transpose() * dz).transpose();
    dh_next.noalias() = p.U.transpose() * dz;
  }
}

}  // namespace

BiLstmStack::BiLstmStack(BiLstmStackConfig config, int input_dim, uint64_t seed)
    : config_(config), input_dim_(input_dim) {
  if (config_.num_layers < 1) {
    throw Error(ErrorCode::Config, "BiLSTM stack needs at least one layer");
  }
  std::mt19937_64 rng(seed ^ 0x5851f42d4c957f2dULL);
  layers_.resize(static_cast<size_t>(config_.num_layers));
  int in = input_dim_;
  for (auto& layer : layers_) {
    layer.fwd.init(in, config_.units, rng);
    layer.bwd.init(in, config_.units, rng);
    in = output_dim();
  }
}

EmbeddingSeq BiLstmStack::forward(const EmbeddingSeq& seq,
                                  BiLstmStackCache* cache) const {
  if (seq.cols() != input_dim_) {
    throw Error(ErrorCode::LengthMismatch,
                "BiLSTM input width " + std::to_string(seq.cols()) + ", expected " +
                    std::to_string(input_dim_));
  }
  check_live_rows_finite(seq);

  std::vector<int> positions;
  for (size_t t = 0; t < seq.mask.size(); ++t) {
    if (seq.mask[t]) positions.push_back(static_cast<int>(t));
  }
  std::vector<int> reversed(positions.rbegin(), positions.rend());

  EmbeddingSeq current = seq;
  if (cache) {
    cache->layers.resize(layers_.size());
    cache->inputs.clear();
  }
  for (size_t l = 0; l < layers_.size(); ++l) {
    if (cache) {
      cache->inputs.push_back(current);
      cache->layers[l].positions = positions;
      cache->layers[l].fwd.clear();
      cache->layers[l].bwd.clear();
    }
    EmbeddingSeq next;
    next.values = Eigen::MatrixXd::Zero(current.rows(), output_dim());
    next.mask = current.mask;
    lstm_pass(current, positions, layers_[l].fwd, config_.units, next.values, 0,
              cache ? &cache->layers[l].fwd : nullptr);
    lstm_pass(current, reversed, layers_[l].bwd, config_.units, next.values,
              config_.units, cache ? &cache->layers[l].bwd : nullptr);
    current = std::move(next);
  }
  return current;
}

EmbeddingSeq BiLstmStack::backward(const EmbeddingSeq& grad_out,
                                   const BiLstmStackCache& cache,
                                   std::vector<LayerParams>* grads) const {
  Eigen::MatrixXd dcur = grad_out.values;
  for (size_t l = layers_.size(); l-- > 0;) {
    const BiLstmLayerCache& lc = cache.layers[l];
    std::vector<int> reversed(lc.positions.rbegin(), lc.positions.rend());
    Eigen::MatrixXd dx =
        Eigen::MatrixXd::Zero(cache.inputs[l].rows(), cache.inputs[l].cols());
    lstm_pass_backward(lc.positions, lc.fwd, layers_[l].fwd, config_.units, dcur, 0,
                       (*grads)[l].fwd, dx);
    lstm_pass_backward(reversed, lc.bwd, layers_[l].bwd, config_.units, dcur,
                       config_.units, (*grads)[l].bwd, dx);
    dcur = std::move(dx);
  }
  EmbeddingSeq out;
  out.values = std::move(dcur);
  out.mask = cache.inputs.empty() ? grad_out.mask : cache.inputs[0].mask;
  return out;
}

std::vector<BiLstmStack::LayerParams> BiLstmStack::zero_grads() const {
  std::vector<LayerParams> grads(layers_.size());
  int in = input_dim_;
  for (auto& g : grads) {
    g.fwd.zero(in, config_.units);
    g.bwd.zero(in, config_.units);
    in = output_dim();
  }
  return grads;
}

void BiLstmStack::set_all_zero() {
  int in = input_dim_;
  for (auto& layer : layers_) {
    layer.fwd.zero(in, config_.units);
    layer.bwd.zero(in, config_.units);
    in = output_dim();
  }
}

// ------------------------------------------------------------------- head

MlpHead::MlpHead(int in_dim, int hidden_dim, std::mt19937_64& rng)
    : in_dim_(in_dim), hidden_dim_(hidden_dim) {
  if (hidden_dim_ > 0) {
    double r1 = 1.0 / std::sqrt(static_cast<double>(in_dim_));
    double r2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim_));
    W1_.resize(hidden_dim_, in_dim_);
    for (Eigen::Index r = 0; r < W1_.rows(); ++r) {
      for (Eigen::Index c = 0; c < W1_.cols(); ++c) W1_(r, c) = uniform_pm(rng, r1);
    }
    b1_ = Eigen::VectorXd::Zero(hidden_dim_);
    w2_.resize(hidden_dim_);
    for (Eigen::Index i = 0; i < w2_.size(); ++i) w2_[i] = uniform_pm(rng, r2);
  } else {
    double r = 1.0 / std::sqrt(static_cast<double>(in_dim_));
    w2_.resize(in_dim_);
    for (Eigen::Index i = 0; i < w2_.size(); ++i) w2_[i] = uniform_pm(rng, r);
  }
  b2_ = 0.0;
}

double MlpHead::logit(const Eigen::VectorXd& v, Cache* cache) const {
  if (v.size() != in_dim_) {
    throw Error(ErrorCode::LengthMismatch,
                "head input size " + std::to_string(v.size()) + ", expected " +
                    std::to_string(in_dim_));
  }
  if (hidden_dim_ == 0) {
    if (cache) cache->v = v;
    return w2_.dot(v) + b2_;
  }
  Eigen::VectorXd a1 = (W1_ * v + b1_).array().tanh();
  double out = w2_.dot(a1) + b2_;
  if (cache) {
    cache->v = v;
    cache->a1 = std::move(a1);
  }
  return out;
}

Eigen::VectorXd MlpHead::backward(double dlogit, const Cache& cache,
                                  Grads* grads) const {
  grads->b2 += dlogit;
  if (hidden_dim_ == 0) {
    grads->w2 += dlogit * cache.v;
    return dlogit * w2_;
  }
  grads->w2 += dlogit * cache.a1;
  Eigen::VectorXd da1 = dlogit * w2_;
  Eigen::VectorXd dz1 =
      da1.cwiseProduct(Eigen::VectorXd::Ones(hidden_dim_) -
                       cache.a1.cwiseProduct(cache.a1));
  grads->W1.noalias() += dz1 * cache.v.transpose();
  grads->b1 += dz1;
  return W1_.transpose() * dz1;
}

MlpHead::Grads MlpHead::zero_grads() const {
  Grads g;
  if (hidden_dim_ > 0) {
    g.W1 = Eigen::MatrixXd::Zero(hidden_dim_, in_dim_);
    g.b1 = Eigen::VectorXd::Zero(hidden_dim_);
    g.w2 = Eigen::VectorXd::Zero(hidden_dim_);
  } else {
    g.w2 = Eigen::VectorXd::Zero(in_dim_);
  }
  g.b2 = 0.0;
  return g;
}

void MlpHead::set_all_zero() {
  if (hidden_dim_ > 0) {
    W1_.setZero();
    b1_.setZero();
  }
  w2_.setZero();
  b2_ = 0.0;
}

double classify(const Eigen::VectorXd& v, const MlpHead& head) {
  if (!v.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "classify input is not finite");
  }
  double p = sigmoid(head.logit(v));
  return std::min(1.0 - 1e-15, std::max(1e-15, p));
}

}  // namespace offmix
