#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "offmix/encoder.hpp"
#include "test_util.hpp"

using namespace offmix;
using offmix::testing::TempDir;
using offmix::testing::write_file;

TEST_CASE("pretrained family constants") {
  EncoderSpec xlmr = spec_for_name("xlmr-base");
  CHECK(xlmr.num_layers == 12);
  CHECK(xlmr.hidden_dim == 768);
  CHECK(xlmr.num_heads == 8);

  EncoderSpec distil = spec_for_name("distil-multilingual");
  CHECK(distil.num_layers == 6);
  CHECK(distil.hidden_dim == 768);
  CHECK(distil.num_heads == 12);

  CHECK_THROWS_AS(spec_for_name("mystery-model"), Error);
}

TEST_CASE("tokenize pads to the window and truncates beyond it") {
  auto backend = make_toy_backend(8, 1);
  TokenSeq seq = tokenize("some words here", *backend, 128);
  CHECK(seq.ids.size() == 128);
  CHECK(seq.mask.size() == 128);
  CHECK(seq.length() == 5);  // BOS + 3 words + EOS

  // long single word falls back to characters, then truncation bites
  std::string long_word(500, 'x');
  TokenSeq full = tokenize(long_word, *backend, 128);
  CHECK(full.ids.size() == 128);
  CHECK(full.length() == 128);

  TokenSeq same1 = tokenize("deterministic input", *backend, 32);
  TokenSeq same2 = tokenize("deterministic input", *backend, 32);
  CHECK(same1.ids == same2.ids);

  try {
    tokenize("   ", *backend, 128);
    FAIL("expected EmptyText");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyText);
  }
  CHECK_THROWS_AS(tokenize("x", *backend, 1), Error);
}

TEST_CASE("tokenize never exceeds max_len") {
  auto backend = make_toy_backend(4, 0);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    size_t words = 1 + rng() % 40;
    for (size_t w = 0; w < words; ++w) {
      text += "w" + std::to_string(rng() % 1000) + " ";
    }
    int max_len = 2 + static_cast<int>(rng() % 40);
    TokenSeq seq = tokenize(text, *backend, max_len);
    CHECK(seq.ids.size() == static_cast<size_t>(max_len));
    CHECK(seq.length() <= static_cast<size_t>(max_len));
  }
}

TEST_CASE("toy backend embeddings: determinism, unit norm, spread") {
  auto b1 = make_toy_backend(16, 7);
  auto b2 = make_toy_backend(16, 7);
  auto b3 = make_toy_backend(16, 8);

  std::vector<int32_t> ids = b1->token_ids("vocabulary of a few words for the test");
  for (int32_t id : ids) {
    Eigen::VectorXd v1 = b1->embed(id);
    Eigen::VectorXd v2 = b2->embed(id);
    CHECK((v1 - v2).norm() == 0.0);                    // same (dim, seed)
    CHECK(std::abs(v1.norm() - 1.0) <= 1e-6);          // unit vector
    CHECK((v1 - b3->embed(id)).norm() > 0.0);          // seed matters
  }

  // cosine similarity bounded away from 1 across a whole toy vocabulary
  std::vector<Eigen::VectorXd> vecs;
  for (int32_t id = 3; id < 3 + 200; ++id) vecs.push_back(b1->embed(id));
  double max_cos = -1.0;
  for (size_t i = 0; i < vecs.size(); ++i) {
    for (size_t j = i + 1; j < vecs.size(); ++j) {
      max_cos = std::max(max_cos, vecs[i].dot(vecs[j]));
    }
  }
  CHECK(max_cos < 0.99);
}

TEST_CASE("encode copies the mask and is position-local on the toy backend") {
  auto backend = make_toy_backend(16, 3);
  TokenSeq tokens = tokenize("one two three", *backend, 10);
  EmbeddingSeq seq = encode(tokens, *backend);
  CHECK(seq.values.rows() == 10);
  CHECK(seq.values.cols() == 16);
  CHECK(seq.mask == tokens.mask);
  CHECK(seq.values.allFinite());
  for (size_t t = 0; t < seq.mask.size(); ++t) {
    if (!seq.mask[t]) {
      CHECK(seq.values.row(static_cast<Eigen::Index>(t)).norm() == 0.0);
    }
  }

  // texts differing in one token differ only at that position
  EmbeddingSeq x = encode(tokenize("one two three", *backend, 10), *backend);
  EmbeddingSeq y = encode(tokenize("one blue three", *backend, 10), *backend);
  for (Eigen::Index t = 0; t < x.values.rows(); ++t) {
    double diff = (x.values.row(t) - y.values.row(t)).norm();
    if (t == 2) {  // BOS at 0, first word at 1
      CHECK(diff > 0.0);
    } else {
      CHECK(diff == 0.0);
    }
  }
}

TEST_CASE("toy backend repeats a token's vector at every position") {
  auto backend = make_toy_backend(8, 11);
  EmbeddingSeq seq = encode(tokenize("echo echo echo", *backend, 8), *backend);
  CHECK((seq.values.row(1) - seq.values.row(2)).norm() == 0.0);
  CHECK((seq.values.row(2) - seq.values.row(3)).norm() == 0.0);
}

TEST_CASE("make_backend parses toy arguments") {
  auto backend = make_backend("toy:dim=24,seed=9");
  CHECK(backend->hidden_dim() == 24);
  CHECK(backend->spec().name == "toy");
  CHECK_THROWS_AS(make_backend("toy:bogus"), Error);
  CHECK_THROWS_AS(make_backend("toy:dim=1"), Error);  // dim >= 2
}

TEST_CASE("named pretrained backends are unavailable without local weights") {
  for (const char* name : {"xlmr-base", "distil-multilingual"}) {
    try {
      make_backend(name);
      FAIL("expected BackendUnavailable");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BackendUnavailable);
    }
  }
  BackendOptions offline;
  offline.offline = true;
  offline.weights_dir = "/nonexistent";
  try {
    make_backend("xlmr-base", offline);
    FAIL("expected BackendUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendUnavailable);
  }
}

TEST_CASE("table backend loads an exported embedding table") {
  TempDir dir("table");
  // vocab: 4 specials + 3 real tokens
  write_file(dir.file("vocab.txt"), "[PAD]\n[BOS]\n[EOS]\n[UNK]\ngood\nmovie\tx\nbad\n");
  int vocab = 7, dim = 4;
  std::vector<double> table(static_cast<size_t>(vocab) * dim);
  for (size_t i = 0; i < table.size(); ++i) table[i] = static_cast<double>(i) * 0.5;
  {
    std::ofstream out(dir.file("embeddings.f64"), std::ios::binary);
    out.write(reinterpret_cast<const char*>(table.data()),
              static_cast<std::streamsize>(table.size() * sizeof(double)));
  }
  write_file(dir.file("manifest.json"),
             "{\"name\":\"mini\",\"num_layers\":2,\"hidden_dim\":4,\"num_heads\":2,"
             "\"vocab\":\"vocab.txt\",\"embeddings\":\"embeddings.f64\"}");

  auto backend = make_backend("table:" + dir.str());
  CHECK(backend->hidden_dim() == 4);
  std::vector<int32_t> ids = backend->token_ids("good bad");
  REQUIRE(ids.size() == 4);  // BOS good bad EOS
  CHECK(ids[0] == 1);
  CHECK(ids[1] == 4);
  CHECK(ids[2] == 6);
  CHECK(ids[3] == 2);
  Eigen::VectorXd v = backend->embed(4);
  CHECK(v[0] == doctest::Approx(8.0));  // row 4 starts at element 16

  // unknown word maps to [UNK] per code point
  std::vector<int32_t> unk = backend->token_ids("zz");
  CHECK(unk[1] == 3);
}
