#include "offmix/model.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace offmix {

double core_forward(const ClassifierCore& core, const EmbeddingSeq& x,
                    ClassifierCore::Cache* cache) {
  EmbeddingSeq out = core.stack.forward(x, cache ? &cache->stack : nullptr);
  Eigen::VectorXd pooled = global_avg_pool(out);
  if (cache) {
    cache->live = 0;
    for (uint8_t m : out.mask) cache->live += m;
  }
  double logit = core.head.logit(pooled, cache ? &cache->head : nullptr);
  return sigmoid(logit);
}

void core_backward(const ClassifierCore& core, const ClassifierCore::Cache& cache,
                   double dlogit, ClassifierCore::Grads* grads) {
  Eigen::VectorXd dpooled = core.head.backward(dlogit, cache.head, &grads->head);
  const EmbeddingSeq& top_in = cache.stack.inputs.back();
  EmbeddingSeq grad_out;
  grad_out.values = Eigen::MatrixXd::Zero(top_in.rows(), core.stack.output_dim());
  grad_out.mask = top_in.mask;
  double scale = 1.0 / static_cast<double>(cache.live);
  for (Eigen::Index t = 0; t < grad_out.values.rows(); ++t) {
    if (grad_out.mask[static_cast<size_t>(t)]) {
      grad_out.values.row(t) = (dpooled * scale).transpose();
    }
  }
  core.stack.backward(grad_out, cache.stack, &grads->stack);
}

double dual_view_forward(const ClassifierCore& core, const EmbeddingSeq& native,
                         const EmbeddingSeq& english, const FusionWeights& weights,
                         DualViewCache* cache) {
  EmbeddingSeq out_n = core.stack.forward(native, cache ? &cache->native.stack : nullptr);
  EmbeddingSeq out_e = core.stack.forward(english, cache ? &cache->english.stack : nullptr);
  Eigen::VectorXd pooled_n = global_avg_pool(out_n);
  Eigen::VectorXd pooled_e = global_avg_pool(out_e);
  Eigen::VectorXd fused = weighted_fuse(pooled_n, pooled_e, weights);
  if (cache) {
    cache->native.live = 0;
    for (uint8_t m : out_n.mask) cache->native.live += m;
    cache->english.live = 0;
    for (uint8_t m : out_e.mask) cache->english.live += m;
  }
  double logit = core.head.logit(fused, cache ? &cache->head : nullptr);
  return sigmoid(logit);
}

void dual_view_backward(const ClassifierCore& core, const DualViewCache& cache,
                        const FusionWeights& weights, double dlogit,
                        ClassifierCore::Grads* grads) {
  Eigen::VectorXd dfused = core.head.backward(dlogit, cache.head, &grads->head);
  struct View {
    const ClassifierCore::Cache* cache;
    double weight;
  } views[2] = {{&cache.native, weights.w_native},
                {&cache.english, weights.w_english}};
  for (const View& view : views) {
    const EmbeddingSeq& top_in = view.cache->stack.inputs.back();
    EmbeddingSeq grad_out;
    grad_out.values = Eigen::MatrixXd::Zero(top_in.rows(), core.stack.output_dim());
    grad_out.mask = top_in.mask;
    double scale = view.weight / static_cast<double>(view.cache->live);
    for (Eigen::Index t = 0; t < grad_out.values.rows(); ++t) {
      if (grad_out.mask[static_cast<size_t>(t)]) {
        grad_out.values.row(t) = (dfused * scale).transpose();
      }
    }
    core.stack.backward(grad_out, view.cache->stack, &grads->stack);
  }
}

// ------------------------------------------------------------- flattening

namespace {

template <typename Fn>
void walk_core(const ClassifierCore& core, Fn&& fn) {
  for (const auto& layer : core.stack.layers()) {
    fn(layer.fwd.W);
    fn(layer.fwd.U);
    fn(layer.fwd.b);
    fn(layer.bwd.W);
    fn(layer.bwd.U);
    fn(layer.bwd.b);
  }
  if (core.head.hidden_dim() > 0) {
    fn(core.head.W1());
    fn(core.head.b1());
  }
  fn(core.head.w2());
}

}  // namespace

Eigen::Index core_param_count(const ClassifierCore& core) {
  Eigen::Index count = 0;
  walk_core(core, [&](const auto& m) { count += m.size(); });
  return count + 1;  // + head bias
}

Eigen::VectorXd core_get_params(const ClassifierCore& core) {
  Eigen::VectorXd flat(core_param_count(core));
  Eigen::Index at = 0;
  walk_core(core, [&](const auto& m) {
    flat.segment(at, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    at += m.size();
  });
  flat[at] = core.head.b2();
  return flat;
}

void core_set_params(ClassifierCore& core, const Eigen::VectorXd& flat) {
  if (flat.size() != core_param_count(core)) {
    throw Error(ErrorCode::LengthMismatch, "flat parameter size mismatch");
  }
  Eigen::Index at = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = flat.segment(at, m.size());
    at += m.size();
  };
  for (auto& layer : core.stack.layers()) {
    take(layer.fwd.W);
    take(layer.fwd.U);
    take(layer.fwd.b);
    take(layer.bwd.W);
    take(layer.bwd.U);
    take(layer.bwd.b);
  }
  if (core.head.hidden_dim() > 0) {
    take(core.head.W1());
    take(core.head.b1());
  }
  take(core.head.w2());
  core.head.b2() = flat[at];
}

Eigen::VectorXd core_flatten_grads(const ClassifierCore& core,
                                   const ClassifierCore::Grads& grads) {
  Eigen::VectorXd flat(core_param_count(core));
  Eigen::Index at = 0;
  auto put = [&](const auto& m) {
    flat.segment(at, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    at += m.size();
  };
  for (const auto& layer : grads.stack) {
    put(layer.fwd.W);
    put(layer.fwd.U);
    put(layer.fwd.b);
    put(layer.bwd.W);
    put(layer.bwd.U);
    put(layer.bwd.b);
  }
  if (core.head.hidden_dim() > 0) {
    put(grads.head.W1);
    put(grads.head.b1);
  }
  put(grads.head.w2);
  flat[at] = grads.head.b2;
  return flat;
}

// ---------------------------------------------------------- architectures

EmbeddingSeq DualConcatModel::encode_views(const std::string& text) const {
  std::string cleaned = clean_text(text, clean);
  EmbeddingSeq a = encode(tokenize(cleaned, *backend_a, max_len), *backend_a);
  EmbeddingSeq b = encode(tokenize(cleaned, *backend_b, max_len), *backend_b);
  return concat_features(a, b);
}

EmbeddingSeq DualViewModel::encode_text(const std::string& text) const {
  return encode(tokenize(text, *backend, max_len), *backend);
}

double forward_task1(const std::string& text, const DualConcatModel& model,
                     const CleanConfig& clean) {
  std::string cleaned = clean_text(text, clean);
  EmbeddingSeq a = encode(tokenize(cleaned, *model.backend_a, model.max_len),
                          *model.backend_a);
  EmbeddingSeq b = encode(tokenize(cleaned, *model.backend_b, model.max_len),
                          *model.backend_b);
  return core_forward(model.core, concat_features(a, b));
}

double forward_task2(const ParallelSample& parallel, const DualViewModel& model) {
  if (parallel.native_text.empty() || parallel.english_text.empty()) {
    throw Error(ErrorCode::EmptyText,
                "sample '" + parallel.id + "' is missing a view text");
  }
  EmbeddingSeq native = model.encode_text(parallel.native_text);
  EmbeddingSeq english = model.encode_text(parallel.english_text);
  return dual_view_forward(model.core, native, english, model.weights);
}

// ------------------------------------------------------------- checkpoints

namespace {

void write_params(const ClassifierCore& core, const std::string& path) {
  Eigen::VectorXd flat = core_get_params(core);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path);
}

void read_params(ClassifierCore& core, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  Eigen::VectorXd flat(core_param_count(core));
  in.read(reinterpret_cast<char*>(flat.data()),
          static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(flat.size() * sizeof(double))) {
    throw Error(ErrorCode::Io, path + " is shorter than the model expects");
  }
  core_set_params(core, flat);
}

nlohmann::json clean_to_json(const CleanConfig& c) {
  return {{"remove_emoji", c.remove_emoji},
          {"remove_flags", c.remove_flags},
          {"lowercase", c.lowercase},
          {"strip_punctuation", c.strip_punctuation},
          {"strip_trailing_space", c.strip_trailing_space}};
}

CleanConfig clean_from_json(const nlohmann::json& j) {
  CleanConfig c;
  c.remove_emoji = j.value("remove_emoji", false);
  c.remove_flags = j.value("remove_flags", false);
  c.lowercase = j.value("lowercase", false);
  c.strip_punctuation = j.value("strip_punctuation", false);
  c.strip_trailing_space = j.value("strip_trailing_space", false);
  return c;
}

nlohmann::json load_manifest(const std::string& dir) {
  std::ifstream in(dir + "/manifest.json");
  if (!in) throw Error(ErrorCode::Io, "no manifest.json under " + dir);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Config, dir + "/manifest.json is invalid");
  return j;
}

}  // namespace

void save_checkpoint(const DualConcatModel& model, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["task"] = "task1";
  manifest["language"] = to_string(model.language);
  manifest["max_len"] = model.max_len;
  manifest["threshold"] = model.threshold;
  manifest["backends"] = {{"a", model.backend_a_spec}, {"b", model.backend_b_spec}};
  manifest["clean"] = clean_to_json(model.clean);
  manifest["bilstm"] = {{"num_layers", model.core.stack.config().num_layers},
                        {"units", model.core.stack.config().units},
                        {"input_dim", model.core.stack.input_dim()}};
  manifest["head"] = {{"in_dim", model.core.head.in_dim()},
                      {"hidden_dim", model.core.head.hidden_dim()}};
  manifest["params"] = {{"file", "params.bin"},
                        {"count", core_param_count(model.core)}};
  std::ofstream out(dir + "/manifest.json");
  out << manifest.dump(2) << '\n';
  write_params(model.core, dir + "/params.bin");
}

void save_checkpoint(const DualViewModel& model, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["task"] = "task2";
  manifest["language"] = to_string(model.language);
  manifest["max_len"] = model.max_len;
  manifest["threshold"] = model.threshold;
  manifest["backends"] = {{"shared", model.backend_spec}};
  manifest["fusion_weights"] = {{"native", model.weights.w_native},
                                {"english", model.weights.w_english}};
  manifest["bilstm"] = {{"num_layers", model.core.stack.config().num_layers},
                        {"units", model.core.stack.config().units},
                        {"input_dim", model.core.stack.input_dim()}};
  manifest["head"] = {{"in_dim", model.core.head.in_dim()},
                      {"hidden_dim", model.core.head.hidden_dim()}};
  manifest["params"] = {{"file", "params.bin"},
                        {"count", core_param_count(model.core)}};
  std::ofstream out(dir + "/manifest.json");
  out << manifest.dump(2) << '\n';
  write_params(model.core, dir + "/params.bin");
}

Task checkpoint_task(const std::string& dir) {
  return task_from_string(load_manifest(dir).value("task", ""));
}

DualConcatModel load_task1_checkpoint(const std::string& dir,
                                      const BackendOptions& options) {
  nlohmann::json m = load_manifest(dir);
  if (m.value("task", "") != "task1") {
    throw Error(ErrorCode::Config, dir + " holds a " + m.value("task", "?") + " checkpoint");
  }
  std::string a_spec = m["backends"].value("a", "toy");
  std::string b_spec = m["backends"].value("b", "toy");
  BiLstmStackConfig config;
  config.num_layers = m["bilstm"].value("num_layers", 3);
  config.units = m["bilstm"].value("units", 128);
  DualConcatModel model(make_backend(a_spec, options), make_backend(b_spec, options),
                        a_spec, b_spec, config, m.value("max_len", 128), 0);
  model.language = language_from_string(m.value("language", "ta"));
  model.threshold = m.value("threshold", 0.5);
  model.clean = clean_from_json(m.value("clean", nlohmann::json::object()));
  int input_dim = m["bilstm"].value("input_dim", 0);
  if (input_dim != model.core.stack.input_dim()) {
    throw Error(ErrorCode::Config,
                dir + ": checkpoint input_dim " + std::to_string(input_dim) +
                    " does not match backends (" +
                    std::to_string(model.core.stack.input_dim()) + ")");
  }
  read_params(model.core, dir + "/" + m["params"].value("file", "params.bin"));
  return model;
}

DualViewModel load_task2_checkpoint(const std::string& dir,
                                    const BackendOptions& options) {
  nlohmann::json m = load_manifest(dir);
  if (m.value("task", "") != "task2") {
    throw Error(ErrorCode::Config, dir + " holds a " + m.value("task", "?") + " checkpoint");
  }
  std::string spec = m["backends"].value("shared", "toy");
  BiLstmStackConfig config;
  config.num_layers = m["bilstm"].value("num_layers", 3);
  config.units = m["bilstm"].value("units", 128);
  FusionWeights weights(m["fusion_weights"].value("native", 0.5),
                        m["fusion_weights"].value("english", 0.5));
  DualViewModel model(make_backend(spec, options), spec, config,
                      m.value("max_len", 128), weights,
                      language_from_string(m.value("language", "ta")), 0);
  model.threshold = m.value("threshold", 0.5);
  int input_dim = m["bilstm"].value("input_dim", 0);
  if (input_dim != model.core.stack.input_dim()) {
    throw Error(ErrorCode::Config,
                dir + ": checkpoint input_dim " + std::to_string(input_dim) +
                    " does not match the backend");
  }
  read_params(model.core, dir + "/" + m["params"].value("file", "params.bin"));
  return model;
}

}  // namespace offmix
