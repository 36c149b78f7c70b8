#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "offmix/model.hpp"
#include "test_util.hpp"

using namespace offmix;
using offmix::testing::TempDir;

namespace {

EmbeddingSeq make_seq(const Eigen::MatrixXd& values, std::vector<uint8_t> mask) {
  EmbeddingSeq seq;
  seq.values = values;
  seq.mask = std::move(mask);
  return seq;
}

EmbeddingSeq random_seq(int t, int d, std::mt19937_64& rng) {
  Eigen::MatrixXd m(t, d);
  for (int r = 0; r < t; ++r) {
    for (int c = 0; c < d; ++c) {
      m(r, c) = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    }
  }
  std::vector<uint8_t> mask(static_cast<size_t>(t), 1);
  return make_seq(m, std::move(mask));
}

// Scalar reference for one LSTM cell step, written against the textbook
// equations rather than the production code.
void ref_lstm_cell(const Eigen::MatrixXd& W, const Eigen::MatrixXd& U,
                   const Eigen::VectorXd& b, const double* x, const double* h_prev,
                   const double* c_prev, int units, int in_dim, double* h_out,
                   double* c_out) {
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  for (int k = 0; k < units; ++k) {
    double zi = b[k], zf = b[units + k], zg = b[2 * units + k], zo = b[3 * units + k];
    for (int c = 0; c < in_dim; ++c) {
      zi += W(k, c) * x[c];
      zf += W(units + k, c) * x[c];
      zg += W(2 * units + k, c) * x[c];
      zo += W(3 * units + k, c) * x[c];
    }
    for (int c = 0; c < units; ++c) {
      zi += U(k, c) * h_prev[c];
      zf += U(units + k, c) * h_prev[c];
      zg += U(2 * units + k, c) * h_prev[c];
      zo += U(3 * units + k, c) * h_prev[c];
    }
    double i = sig(zi), f = sig(zf), g = std::tanh(zg), o = sig(zo);
    c_out[k] = f * c_prev[k] + i * g;
    h_out[k] = o * std::tanh(c_out[k]);
  }
}

}  // namespace

TEST_CASE("concat_features definition and slicing") {
  EmbeddingSeq a = make_seq((Eigen::MatrixXd(1, 2) << 1, 2).finished(), {1});
  EmbeddingSeq b = make_seq((Eigen::MatrixXd(1, 1) << 3).finished(), {1});
  EmbeddingSeq out = concat_features(a, b);
  CHECK(out.values(0, 0) == 1);
  CHECK(out.values(0, 1) == 2);
  CHECK(out.values(0, 2) == 3);

  // zero second input leaves the first block untouched
  EmbeddingSeq z = make_seq(Eigen::MatrixXd::Zero(1, 2), {1});
  EmbeddingSeq az = concat_features(a, z);
  CHECK(az.values.leftCols(2) == a.values);

  EmbeddingSeq two = make_seq(Eigen::MatrixXd::Zero(2, 1), {1, 1});
  CHECK_THROWS_AS(concat_features(a, two), Error);
}

TEST_CASE("concat_features slicing property on random shapes") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    int t = 1 + static_cast<int>(rng() % 6);
    int d1 = 1 + static_cast<int>(rng() % 8);
    int d2 = 1 + static_cast<int>(rng() % 8);
    EmbeddingSeq a = random_seq(t, d1, rng);
    EmbeddingSeq b = random_seq(t, d2, rng);
    for (size_t i = 0; i < a.mask.size(); ++i) {
      a.mask[i] = rng() % 2;
      b.mask[i] = rng() % 2;
    }
    EmbeddingSeq out = concat_features(a, b);
    CHECK(out.values.leftCols(d1) == a.values);
    CHECK(out.values.rightCols(d2) == b.values);
    for (size_t i = 0; i < out.mask.size(); ++i) {
      CHECK(out.mask[i] == (a.mask[i] & b.mask[i]));
    }
  }
}

TEST_CASE("global_avg_pool means live rows only") {
  EmbeddingSeq seq = make_seq((Eigen::MatrixXd(2, 2) << 1, 3, 3, 5).finished(), {1, 1});
  Eigen::VectorXd mean = global_avg_pool(seq);
  CHECK(mean[0] == 2);
  CHECK(mean[1] == 4);

  EmbeddingSeq single = make_seq((Eigen::MatrixXd(1, 2) << 7, 9).finished(), {1});
  CHECK(global_avg_pool(single)[0] == 7);

  EmbeddingSeq masked =
      make_seq((Eigen::MatrixXd(3, 2) << 2, 2, 4, 4, 99, 99).finished(), {1, 1, 0});
  Eigen::VectorXd m = global_avg_pool(masked);
  CHECK(m[0] == 3);
  CHECK(m[1] == 3);

  EmbeddingSeq none = make_seq(Eigen::MatrixXd::Zero(2, 2), {0, 0});
  try {
    global_avg_pool(none);
    FAIL("expected AllMasked");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AllMasked);
  }
}

TEST_CASE("global_avg_pool ignores values at masked positions") {
  std::mt19937_64 rng(17);
  EmbeddingSeq a = random_seq(6, 4, rng);
  a.mask = {1, 0, 1, 0, 1, 1};
  EmbeddingSeq b = a;
  for (size_t t = 0; t < b.mask.size(); ++t) {
    if (!b.mask[t]) b.values.row(static_cast<Eigen::Index>(t)).setConstant(1e9);
  }
  CHECK(global_avg_pool(a) == global_avg_pool(b));
}

TEST_CASE("weighted_fuse identities") {
  Eigen::VectorXd native(2), english(2);
  native << 1, 2;
  english << 3, 4;

  Eigen::VectorXd keep = weighted_fuse(native, english, FusionWeights(1.0, 0.0));
  CHECK(keep == native);

  Eigen::VectorXd tamil = weighted_fuse(native, english, FusionWeights(0.7, 0.3));
  CHECK(tamil[0] == doctest::Approx(1.6).epsilon(1e-12));
  CHECK(tamil[1] == doctest::Approx(2.6).epsilon(1e-12));

  Eigen::VectorXd same = weighted_fuse(native, native, FusionWeights(0.25, 0.75));
  CHECK((same - native).norm() <= 1e-15);

  Eigen::VectorXd three(3);
  three << 1, 2, 3;
  CHECK_THROWS_AS(weighted_fuse(native, three, FusionWeights(0.5, 0.5)), Error);
}

TEST_CASE("weighted_fuse is linear and permutation-consistent") {
  std::mt19937_64 rng(23);
  auto rand_vec = [&rng](int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
      v[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 4.0 - 2.0;
    }
    return v;
  };
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd a = rand_vec(5), b = rand_vec(5), c = rand_vec(5);
    double p = static_cast<double>(rng() % 1000) / 1000.0;
    FusionWeights w(p, 1.0 - p);
    FusionWeights flipped(1.0 - p, p);
    CHECK((weighted_fuse(a, b, w) - weighted_fuse(b, a, flipped)).norm() <= 1e-15);
    // linearity in the first argument
    Eigen::VectorXd lhs = weighted_fuse(a + c, b, w);
    Eigen::VectorXd rhs = weighted_fuse(a, b, w) + weighted_fuse(c, Eigen::VectorXd::Zero(5), w);
    CHECK((lhs - rhs).norm() <= 1e-12);
  }
}

TEST_CASE("fusion weight validation and per-language defaults") {
  CHECK_THROWS_AS(FusionWeights(0.5, 0.6), Error);
  CHECK_THROWS_AS(FusionWeights(-0.1, 1.1), Error);
  FusionWeights ta = FusionWeights::defaults_for(Language::ta);
  CHECK(ta.w_native == 0.7);
  CHECK(ta.w_english == 0.3);
  FusionWeights ml = FusionWeights::defaults_for(Language::ml);
  CHECK(ml.w_native == 0.6);
  CHECK(ml.w_english == 0.4);
}

TEST_CASE("classify: zero logit, saturation, hand-set linear head") {
  std::mt19937_64 rng(1);
  MlpHead zero_head(4, 2, rng);
  zero_head.set_all_zero();
  Eigen::VectorXd v(4);
  v << 1, -2, 3, 4;
  CHECK(classify(v, zero_head) == 0.5);

  zero_head.b2() = 20.0;
  CHECK(classify(v, zero_head) > 0.999);

  MlpHead linear(2, 0, rng);
  linear.w2() << 1, -1;
  linear.b2() = 0.0;
  Eigen::VectorXd x(2);
  x << 2, 1;
  CHECK(classify(x, linear) == doctest::Approx(0.7310585786).epsilon(1e-9));

  Eigen::VectorXd bad(2);
  bad << 1, std::nan("");
  try {
    classify(bad, linear);
    FAIL("expected NonFiniteInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteInput);
  }
}

TEST_CASE("classify is strictly monotone in the logit") {
  std::mt19937_64 rng(2);
  MlpHead head(3, 2, rng);
  Eigen::VectorXd v(3);
  v << 0.5, -0.25, 1.0;
  double prev = -1.0;
  for (double shift = -6.0; shift <= 6.0; shift += 0.5) {
    MlpHead shifted = head;
    shifted.b2() += shift;
    double p = classify(v, shifted);
    CHECK(p > prev);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    prev = p;
  }
}

TEST_CASE("BiLSTM stack: shapes and the published default width") {
  BiLstmStackConfig cfg;  // 3 layers, 128 units
  BiLstmStack stack(cfg, 768, 5);
  std::mt19937_64 rng(3);
  EmbeddingSeq in = random_seq(4, 768, rng);
  EmbeddingSeq out = stack.forward(in);
  CHECK(out.values.rows() == 4);
  CHECK(out.values.cols() == 256);  // 2 x 128
  CHECK(out.mask == in.mask);
}

TEST_CASE("BiLSTM with all-zero parameters maps anything to zero") {
  BiLstmStackConfig cfg;
  cfg.num_layers = 2;
  cfg.units = 3;
  BiLstmStack stack(cfg, 4, 7);
  stack.set_all_zero();
  std::mt19937_64 rng(4);
  EmbeddingSeq in = random_seq(5, 4, rng);
  EmbeddingSeq out = stack.forward(in);
  CHECK(out.values.norm() == 0.0);
}

TEST_CASE("single-step BiLSTM equals the hand-unrolled cell equations") {
  BiLstmStackConfig cfg;
  cfg.num_layers = 1;
  cfg.units = 2;
  BiLstmStack stack(cfg, 2, 11);

  // pin parameters to a fixed, asymmetric pattern
  auto& layer = stack.layers()[0];
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 2; ++c) {
      layer.fwd.W(r, c) = 0.05 * (r + 1) - 0.03 * c;
      layer.fwd.U(r, c) = 0.02 * (r - 3) + 0.01 * c;
      layer.bwd.W(r, c) = -0.04 * (r + 2) + 0.02 * c;
      layer.bwd.U(r, c) = 0.03 * (r - 1) - 0.02 * c;
    }
    layer.fwd.b[r] = 0.1 - 0.02 * r;
    layer.bwd.b[r] = -0.05 + 0.01 * r;
  }

  EmbeddingSeq in = make_seq((Eigen::MatrixXd(1, 2) << 0.4, -0.7).finished(), {1});
  EmbeddingSeq out = stack.forward(in);

  double x[2] = {0.4, -0.7};
  double zeros[2] = {0.0, 0.0};
  double h_f[2], c_f[2], h_b[2], c_b[2];
  ref_lstm_cell(layer.fwd.W, layer.fwd.U, layer.fwd.b, x, zeros, zeros, 2, 2, h_f, c_f);
  ref_lstm_cell(layer.bwd.W, layer.bwd.U, layer.bwd.b, x, zeros, zeros, 2, 2, h_b, c_b);

  CHECK(out.values(0, 0) == doctest::Approx(h_f[0]).epsilon(1e-10));
  CHECK(out.values(0, 1) == doctest::Approx(h_f[1]).epsilon(1e-10));
  CHECK(out.values(0, 2) == doctest::Approx(h_b[0]).epsilon(1e-10));
  CHECK(out.values(0, 3) == doctest::Approx(h_b[1]).epsilon(1e-10));
}

TEST_CASE("multi-step BiLSTM matches a hand-run recurrence") {
  BiLstmStackConfig cfg;
  cfg.num_layers = 1;
  cfg.units = 2;
  BiLstmStack stack(cfg, 2, 13);
  const auto& layer = stack.layers()[0];

  std::mt19937_64 rng(6);
  EmbeddingSeq in = random_seq(3, 2, rng);
  EmbeddingSeq out = stack.forward(in);

  // forward direction, three steps
  double h[2] = {0, 0}, c[2] = {0, 0}, h_next[2], c_next[2];
  for (int t = 0; t < 3; ++t) {
    double x[2] = {in.values(t, 0), in.values(t, 1)};
    ref_lstm_cell(layer.fwd.W, layer.fwd.U, layer.fwd.b, x, h, c, 2, 2, h_next, c_next);
    CHECK(out.values(t, 0) == doctest::Approx(h_next[0]).epsilon(1e-10));
    CHECK(out.values(t, 1) == doctest::Approx(h_next[1]).epsilon(1e-10));
    h[0] = h_next[0]; h[1] = h_next[1];
    c[0] = c_next[0]; c[1] = c_next[1];
  }
  // backward direction, reversed
  h[0] = h[1] = c[0] = c[1] = 0;
  for (int t = 2; t >= 0; --t) {
    double x[2] = {in.values(t, 0), in.values(t, 1)};
    ref_lstm_cell(layer.bwd.W, layer.bwd.U, layer.bwd.b, x, h, c, 2, 2, h_next, c_next);
    CHECK(out.values(t, 2) == doctest::Approx(h_next[0]).epsilon(1e-10));
    CHECK(out.values(t, 3) == doctest::Approx(h_next[1]).epsilon(1e-10));
    h[0] = h_next[0]; h[1] = h_next[1];
    c[0] = c_next[0]; c[1] = c_next[1];
  }
}

TEST_CASE("BiLSTM output does not depend on padding content") {
  BiLstmStackConfig cfg;
  cfg.num_layers = 2;
  cfg.units = 4;
  BiLstmStack stack(cfg, 3, 21);
  std::mt19937_64 rng(8);
  EmbeddingSeq a = random_seq(6, 3, rng);
  a.mask = {1, 1, 0, 1, 0, 1};
  EmbeddingSeq b = a;
  for (size_t t = 0; t < b.mask.size(); ++t) {
    if (!b.mask[t]) b.values.row(static_cast<Eigen::Index>(t)).setConstant(123456.0);
  }
  EmbeddingSeq out_a = stack.forward(a);
  EmbeddingSeq out_b = stack.forward(b);
  CHECK((out_a.values - out_b.values).norm() == 0.0);
  for (size_t t = 0; t < out_a.mask.size(); ++t) {
    if (!out_a.mask[t]) {
      CHECK(out_a.values.row(static_cast<Eigen::Index>(t)).norm() == 0.0);
    }
  }
}

TEST_CASE("BiLSTM rejects non-finite live rows") {
  BiLstmStack stack({1, 2}, 2, 1);
  EmbeddingSeq in = make_seq(Eigen::MatrixXd::Zero(2, 2), {1, 1});
  in.values(0, 1) = std::numeric_limits<double>::infinity();
  try {
    stack.forward(in);
    FAIL("expected NonFiniteInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteInput);
  }
}

TEST_CASE("forward_task1: zeroed core scores one half everywhere") {
  auto a = std::shared_ptr<EncoderBackend>(make_toy_backend(6, 1));
  auto b = std::shared_ptr<EncoderBackend>(make_toy_backend(6, 2));
  DualConcatModel model(a, b, "toy:dim=6,seed=1", "toy:dim=6,seed=2", {2, 4}, 16, 3);
  model.core.stack.set_all_zero();
  model.core.head.set_all_zero();
  CHECK(forward_task1("any words at all", model, model.clean) == 0.5);
  CHECK(forward_task1("different input", model, model.clean) == 0.5);
}

TEST_CASE("forward_task1 is deterministic and equals its stagewise composition") {
  auto a = std::shared_ptr<EncoderBackend>(make_toy_backend(6, 1));
  auto b = std::shared_ptr<EncoderBackend>(make_toy_backend(8, 2));
  DualConcatModel model(a, b, "toy:dim=6,seed=1", "toy:dim=8,seed=2", {2, 4}, 16, 9);
  const std::string text = "Inta padam romba nalla";

  double p1 = forward_task1(text, model, model.clean);
  double p2 = forward_task1(text, model, model.clean);
  CHECK(p1 == p2);

  // oracle: run each stage separately
  std::string cleaned = clean_text(text, model.clean);
  EmbeddingSeq ea = encode(tokenize(cleaned, *a, 16), *a);
  EmbeddingSeq eb = encode(tokenize(cleaned, *b, 16), *b);
  EmbeddingSeq cat = concat_features(ea, eb);
  EmbeddingSeq rnn = model.core.stack.forward(cat);
  Eigen::VectorXd pooled = global_avg_pool(rnn);
  double oracle = classify(pooled, model.core.head);
  CHECK(p1 == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("forward_task2 fusion identities and stagewise oracle") {
  auto backend = std::shared_ptr<EncoderBackend>(make_toy_backend(6, 5));
  DualViewModel native_only(backend, "toy:dim=6,seed=5", {2, 4}, 16,
                            FusionWeights(1.0, 0.0), Language::ta, 9);

  ParallelSample p;
  p.id = "x";
  p.native_text = "நல்ல படம்";
  p.english_text = "a good movie";
  double base = forward_task2(p, native_only);
  p.english_text = "entirely different english rendering";
  CHECK(forward_task2(p, native_only) == base);  // w = (1, 0)

  // equal views reduce to the single-view score for any weights
  DualViewModel mixed(backend, "toy:dim=6,seed=5", {2, 4}, 16,
                      FusionWeights(0.6, 0.4), Language::ml, 9);
  ParallelSample same;
  same.id = "y";
  same.native_text = "one shared text";
  same.english_text = "one shared text";
  double fused = forward_task2(same, mixed);
  double single = core_forward(mixed.core, mixed.encode_text("one shared text"));
  CHECK(fused == doctest::Approx(single).epsilon(1e-12));

  // stagewise oracle
  ParallelSample s;
  s.id = "z";
  s.native_text = "கதை text";
  s.english_text = "story text";
  double got = forward_task2(s, mixed);
  Eigen::VectorXd pn = global_avg_pool(mixed.core.stack.forward(mixed.encode_text(s.native_text)));
  Eigen::VectorXd pe = global_avg_pool(mixed.core.stack.forward(mixed.encode_text(s.english_text)));
  double oracle = classify(weighted_fuse(pn, pe, mixed.weights), mixed.core.head);
  CHECK(got == doctest::Approx(oracle).epsilon(1e-12));

  ParallelSample empty_side;
  empty_side.id = "e";
  empty_side.native_text = "text";
  empty_side.english_text = "";
  CHECK_THROWS_AS(forward_task2(empty_side, mixed), Error);
}

TEST_CASE("checkpoints round-trip both architectures bit-exactly") {
  TempDir dir("ckpt");
  std::string text = "checkpoint round trip sample";

  auto a = std::shared_ptr<EncoderBackend>(make_toy_backend(6, 1));
  auto b = std::shared_ptr<EncoderBackend>(make_toy_backend(6, 2));
  DualConcatModel m1(a, b, "toy:dim=6,seed=1", "toy:dim=6,seed=2", {2, 4}, 16, 3);
  m1.language = Language::ta;
  m1.threshold = 0.4;
  double before = forward_task1(text, m1, m1.clean);
  save_checkpoint(m1, dir.file("t1"));
  CHECK(checkpoint_task(dir.file("t1")) == Task::task1);
  DualConcatModel m1b = load_task1_checkpoint(dir.file("t1"));
  CHECK(m1b.threshold == 0.4);
  CHECK(m1b.max_len == 16);
  CHECK(forward_task1(text, m1b, m1b.clean) == before);

  auto shared = std::shared_ptr<EncoderBackend>(make_toy_backend(6, 5));
  DualViewModel m2(shared, "toy:dim=6,seed=5", {2, 4}, 16, FusionWeights(0.6, 0.4),
                   Language::ml, 9);
  ParallelSample p;
  p.id = "x";
  p.native_text = "native words";
  p.english_text = "english words";
  double before2 = forward_task2(p, m2);
  save_checkpoint(m2, dir.file("t2"));
  CHECK(checkpoint_task(dir.file("t2")) == Task::task2);
  DualViewModel m2b = load_task2_checkpoint(dir.file("t2"));
  CHECK(m2b.weights.w_native == 0.6);
  CHECK(forward_task2(p, m2b) == before2);

  CHECK_THROWS_AS(load_task2_checkpoint(dir.file("t1")), Error);
}
