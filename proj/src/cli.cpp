#include "offmix/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "offmix/corpus.hpp"
#include "offmix/metrics.hpp"
#include "offmix/model.hpp"
#include "offmix/textprep.hpp"
#include "offmix/train.hpp"
#include "offmix/translate.hpp"

namespace offmix {

namespace {

// Every option can come from the command line, a JSON config file or the
// built-in defaults, in that precedence order.
struct RunOptions {
  std::string task = "task1";
  std::string lang = "ta";
  std::string data;
  std::string val_data;
  double val_fraction = 0.1;
  std::string cache;
  std::string checkpoint;
  std::string out;
  std::string errors_out;
  std::string backend_a = "toy:dim=16,seed=1";
  std::string backend_b = "toy:dim=16,seed=2";
  std::string weights;  // "0.7,0.3"
  std::string weights_dir;
  std::string scheme;
  std::string provider = "identity";
  std::string fixture;
  std::string endpoint;
  double threshold = 0.5;
  uint64_t seed = 0;
  bool offline = false;
  // train overrides
  int batch_size = 32;
  int max_len = 128;
  double learning_rate = 1e-3;
  int max_epochs = 20;
  int patience = 3;
  std::string class_weighting = "none";
};

void apply_config_file(const std::string& path, RunOptions& opt) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::Config, path + " is not valid JSON");
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("task", opt.task);
  get("lang", opt.lang);
  get("data", opt.data);
  get("val", opt.val_data);
  get("val_fraction", opt.val_fraction);
  get("cache", opt.cache);
  get("checkpoint", opt.checkpoint);
  get("out", opt.out);
  get("backend_a", opt.backend_a);
  get("backend_b", opt.backend_b);
  get("weights", opt.weights);
  get("weights_dir", opt.weights_dir);
  get("scheme", opt.scheme);
  get("provider", opt.provider);
  get("fixture", opt.fixture);
  get("endpoint", opt.endpoint);
  get("threshold", opt.threshold);
  get("seed", opt.seed);
  get("offline", opt.offline);
  get("batch_size", opt.batch_size);
  get("max_len", opt.max_len);
  get("learning_rate", opt.learning_rate);
  get("max_epochs", opt.max_epochs);
  get("patience", opt.patience);
  get("class_weighting", opt.class_weighting);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << text;
}

void emit(const std::string& text, const std::string& out_path) {
  if (!out_path.empty()) {
    write_text(out_path, text);
  } else {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  }
}

FusionWeights parse_weights(const std::string& spec, Language lang) {
  if (spec.empty()) return FusionWeights::defaults_for(lang);
  size_t comma = spec.find(',');
  if (comma == std::string::npos) {
    throw Error(ErrorCode::Config, "--weights expects w_native,w_english");
  }
  return FusionWeights(std::stod(spec.substr(0, comma)),
                       std::stod(spec.substr(comma + 1)));
}

std::unique_ptr<TranslationProvider> make_provider(const RunOptions& opt) {
  if (opt.provider == "identity") return make_identity_provider();
  if (opt.provider == "fixture") {
    if (opt.fixture.empty()) {
      throw Error(ErrorCode::MissingFlag, "--provider fixture needs --fixture FILE");
    }
    return make_fixture_provider(opt.fixture);
  }
  if (opt.provider == "http") {
    if (opt.offline) {
      throw Error(ErrorCode::ProviderUnavailable,
                  "--offline forbids the http provider");
    }
    if (opt.endpoint.empty()) {
      throw Error(ErrorCode::MissingFlag, "--provider http needs --endpoint URL");
    }
    HttpProviderConfig cfg;
    cfg.endpoint = opt.endpoint;
    return make_http_provider(cfg);
  }
  if (opt.provider == "none") return nullptr;
  throw Error(ErrorCode::Config, "unknown provider '" + opt.provider +
                                     "' (identity, fixture, http, none)");
}

BackendOptions backend_options(const RunOptions& opt) {
  BackendOptions bo;
  bo.weights_dir = opt.weights_dir;
  bo.offline = opt.offline;
  return bo;
}

TrainConfig train_config(const RunOptions& opt) {
  TrainConfig cfg;
  cfg.batch_size = opt.batch_size;
  cfg.max_len = opt.max_len;
  cfg.learning_rate = opt.learning_rate;
  cfg.max_epochs = opt.max_epochs;
  cfg.early_stop_patience = opt.patience;
  cfg.seed = opt.seed;
  cfg.threshold = opt.threshold;
  if (opt.class_weighting == "inverse-frequency") {
    cfg.class_weighting = TrainConfig::ClassWeighting::inverse_frequency;
  } else if (opt.class_weighting != "none") {
    throw Error(ErrorCode::Config,
                "class_weighting must be none or inverse-frequency");
  }
  return cfg;
}

TranslitScheme resolve_scheme(const RunOptions& opt, Language lang) {
  if (!opt.scheme.empty()) {
    return TranslitScheme::load(opt.scheme, "custom",
                                lang == Language::ta ? TargetScript::tamil
                                                     : TargetScript::malayalam);
  }
  return bundled_scheme(lang);
}

// ------------------------------------------------------------ subcommands

int cmd_stats(const RunOptions& opt) {
  Dataset ds = load_dataset(opt.data, task_from_string(opt.task),
                            language_from_string(opt.lang));
  DistributionReport report = class_distribution(ds);
  nlohmann::json j;
  j["not_offensive"] = report.count_not;
  j["offensive"] = report.count_off;
  j["total"] = report.total;
  emit(j.dump(2), opt.out);
  return 0;
}

int cmd_prep(const RunOptions& opt) {
  Task task = task_from_string(opt.task);
  Dataset ds = load_dataset(opt.data, task, language_from_string(opt.lang));
  CleanConfig clean = task == Task::task1 ? CleanConfig::task1() : CleanConfig::task2();
  for (Sample& s : ds.samples) s.text = clean_text(s.text, clean);
  if (opt.out.empty()) throw Error(ErrorCode::MissingFlag, "prep needs --out FILE");
  save_dataset(ds, opt.out);
  return 0;
}

int cmd_translit(const RunOptions& opt) {
  Language lang = language_from_string(opt.lang);
  Dataset ds = load_dataset(opt.data, task_from_string(opt.task), lang);
  TranslitScheme scheme = resolve_scheme(opt, lang);
  TranslitStats stats;
  Dataset out = transliterate_dataset(ds, scheme, CleanConfig::task2(), &stats);
  if (opt.out.empty()) throw Error(ErrorCode::MissingFlag, "translit needs --out FILE");
  save_dataset(out, opt.out);
  std::clog << "[translit] " << stats.samples << " samples, mean rule coverage "
            << stats.mean_coverage << ", min " << stats.min_coverage << '\n';
  return 0;
}

int cmd_translate(const RunOptions& opt) {
  Language lang = language_from_string(opt.lang);
  Dataset ds = load_dataset(opt.data, task_from_string(opt.task), lang);
  if (opt.cache.empty()) throw Error(ErrorCode::MissingFlag, "translate needs --cache FILE");
  TranslationCache cache(opt.cache);
  std::unique_ptr<TranslationProvider> provider = make_provider(opt);
  std::vector<ParallelSample> rows = build_parallel_corpus(ds, provider.get(), cache);
  if (opt.out.empty()) throw Error(ErrorCode::MissingFlag, "translate needs --out FILE");
  save_parallel(rows, opt.out);
  size_t suspects = 0;
  for (const ParallelSample& p : rows) suspects += p.suspect;
  std::clog << "[translate] " << rows.size() << " rows, " << suspects
            << " flagged suspect, cache now " << cache.size() << " entries\n";
  return 0;
}

int cmd_train(const RunOptions& opt) {
  if (opt.checkpoint.empty()) {
    throw Error(ErrorCode::MissingFlag, "train needs --checkpoint DIR");
  }
  Task task = task_from_string(opt.task);
  Language lang = language_from_string(opt.lang);
  TrainConfig cfg = train_config(opt);
  BiLstmStackConfig stack_cfg;  // 3 x 128, the published shape
  BackendOptions bo = backend_options(opt);
  std::string history_json;

  if (task == Task::task1) {
    Dataset all = load_dataset(opt.data, task, lang);
    Dataset train_ds, val_ds;
    if (!opt.val_data.empty()) {
      train_ds = std::move(all);
      val_ds = load_dataset(opt.val_data, task, lang, Split::val);
    } else {
      std::tie(train_ds, val_ds) = split_stratified(all, opt.val_fraction, opt.seed);
    }
    auto a = std::shared_ptr<EncoderBackend>(make_backend(opt.backend_a, bo));
    auto b = std::shared_ptr<EncoderBackend>(make_backend(opt.backend_b, bo));
    DualConcatModel model(a, b, opt.backend_a, opt.backend_b, stack_cfg,
                          cfg.max_len, opt.seed);
    model.language = lang;
    model.threshold = opt.threshold;
    TrainHistory history = train_task1(model, train_ds, val_ds, cfg);
    save_checkpoint(model, opt.checkpoint);
    history_json = history_to_json(history);
  } else {
    std::vector<ParallelSample> all = load_parallel(opt.data);
    std::vector<ParallelSample> train_rows, val_rows;
    if (!opt.val_data.empty()) {
      train_rows = std::move(all);
      val_rows = load_parallel(opt.val_data);
    } else {
      std::vector<Label> labels;
      for (const ParallelSample& p : all) {
        if (!p.label) {
          throw Error(ErrorCode::UnlabeledSample, "sample '" + p.id + "' has no label");
        }
        labels.push_back(*p.label);
      }
      auto [train_idx, val_idx] =
          stratified_split_indices(labels, opt.val_fraction, opt.seed);
      for (size_t i : train_idx) train_rows.push_back(all[i]);
      for (size_t i : val_idx) val_rows.push_back(all[i]);
    }
    auto backend = std::shared_ptr<EncoderBackend>(make_backend(opt.backend_a, bo));
    DualViewModel model(backend, opt.backend_a, stack_cfg, cfg.max_len,
                        parse_weights(opt.weights, lang), lang, opt.seed);
    model.threshold = opt.threshold;
    TrainHistory history = train_task2(model, train_rows, val_rows, cfg);
    save_checkpoint(model, opt.checkpoint);
    history_json = history_to_json(history);
  }

  std::string history_path =
      opt.out.empty() ? opt.checkpoint + "/history.json" : opt.out;
  write_text(history_path, history_json + "\n");
  return 0;
}

// Shared prediction plumbing for eval and predict.
struct Predictions {
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  std::vector<double> probs;
  std::vector<std::optional<Label>> gold;
  double threshold = 0.5;
};

Predictions run_model(const RunOptions& opt) {
  if (opt.checkpoint.empty()) {
    throw Error(ErrorCode::MissingFlag, "need --checkpoint DIR");
  }
  Predictions out;
  BackendOptions bo = backend_options(opt);
  Task task = checkpoint_task(opt.checkpoint);
  if (task == Task::task1) {
    DualConcatModel model = load_task1_checkpoint(opt.checkpoint, bo);
    out.threshold = model.threshold;
    Dataset ds = load_dataset(opt.data, Task::task1, model.language);
    for (const Sample& s : ds.samples) {
      out.ids.push_back(s.id);
      out.texts.push_back(s.text);
      out.gold.push_back(s.label);
      double p;
      try {
        p = forward_task1(s.text, model, model.clean);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyText) throw;
        std::clog << "[predict] sample '" << s.id
                  << "' is empty after cleaning; scoring 0.5\n";
        p = 0.5;
      }
      out.probs.push_back(p);
    }
  } else {
    DualViewModel model = load_task2_checkpoint(opt.checkpoint, bo);
    out.threshold = model.threshold;
    std::vector<ParallelSample> rows = load_parallel(opt.data);
    for (const ParallelSample& p : rows) {
      out.ids.push_back(p.id);
      out.texts.push_back(p.native_text);
      out.gold.push_back(p.label);
      double prob;
      try {
        prob = forward_task2(p, model);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyText) throw;
        std::clog << "[predict] sample '" << p.id
                  << "' is missing a view; scoring 0.5\n";
        prob = 0.5;
      }
      out.probs.push_back(prob);
    }
  }
  return out;
}

int cmd_eval(const RunOptions& opt) {
  Predictions pred = run_model(opt);
  std::vector<Label> preds, gold;
  std::vector<std::string> texts;
  std::vector<double> probs;
  for (size_t i = 0; i < pred.probs.size(); ++i) {
    if (!pred.gold[i]) {
      throw Error(ErrorCode::UnlabeledSample,
                  "sample '" + pred.ids[i] + "' has no gold label");
    }
    preds.push_back(pred.probs[i] > pred.threshold ? Label::OFF : Label::NOT);
    gold.push_back(*pred.gold[i]);
    texts.push_back(pred.texts[i]);
    probs.push_back(pred.probs[i]);
  }
  MetricsReport report = compute_metrics(preds, gold);
  emit(metrics_to_json(report), opt.out);
  std::clog << metrics_table(report);
  if (!opt.errors_out.empty()) {
    write_text(opt.errors_out,
               error_report_tsv(error_report(probs, gold, texts, pred.threshold)));
  }
  return 0;
}

int cmd_predict(const RunOptions& opt) {
  Predictions pred = run_model(opt);
  std::string tsv = "id\tlabel\tprobability\n";
  char buf[32];
  for (size_t i = 0; i < pred.probs.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f", pred.probs[i]);
    tsv += pred.ids[i];
    tsv += '\t';
    tsv += to_string(pred.probs[i] > pred.threshold ? Label::OFF : Label::NOT);
    tsv += '\t';
    tsv += buf;
    tsv += '\n';
  }
  emit(tsv, opt.out);
  return 0;
}

int cmd_audit(const RunOptions& opt, const std::string& report_path, long correct,
              long incorrect) {
  std::ifstream in(report_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + report_path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  MetricsReport report = metrics_from_json(text);
  AuditResult result = audit_report(report, correct, incorrect);
  emit(audit_to_json(result), opt.out);
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  RunOptions opt;
  std::string config_path, report_path;
  long correct = 0, incorrect = 0;

  // Config file values sit between the defaults and the flags, so the file
  // is applied before CLI11 parses (flags then overwrite).
  for (size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") config_path = args[i + 1];
  }

  try {
    if (!config_path.empty()) apply_config_file(config_path, opt);

    CLI::App app{"offensive-language detection for code-mixed Tamil/Malayalam"};
    app.require_subcommand(1);
    std::string config_dummy;
    app.add_option("--config", config_dummy, "JSON config file (flags win)");

    auto add_common = [&](CLI::App* cmd) {
      cmd->add_option("--task", opt.task, "task1 or task2");
      cmd->add_option("--lang", opt.lang, "ta or ml");
      cmd->add_option("--seed", opt.seed, "global random seed");
      cmd->add_option("--out", opt.out, "output file (default: stdout)");
      cmd->add_flag("--offline", opt.offline, "forbid network use");
      cmd->add_option("--config", config_dummy, "JSON config file (flags win)");
    };

    CLI::App* stats = app.add_subcommand("stats", "class distribution as JSON");
    add_common(stats);
    stats->add_option("--data", opt.data)->required();

    CLI::App* prep = app.add_subcommand("prep", "clean text to a new TSV");
    add_common(prep);
    prep->add_option("--data", opt.data)->required();

    CLI::App* translit =
        app.add_subcommand("translit", "romanized text to native script");
    add_common(translit);
    translit->add_option("--data", opt.data)->required();
    translit->add_option("--scheme", opt.scheme, "scheme table (default: bundled)");

    CLI::App* translate =
        app.add_subcommand("translate", "build the parallel corpus via the cache");
    add_common(translate);
    translate->add_option("--data", opt.data)->required();
    translate->add_option("--cache", opt.cache, "JSONL translation cache")->required();
    translate->add_option("--provider", opt.provider, "identity|fixture|http|none");
    translate->add_option("--fixture", opt.fixture, "fixture TSV for --provider fixture");
    translate->add_option("--endpoint", opt.endpoint, "HTTP endpoint for --provider http");

    CLI::App* train = app.add_subcommand("train", "train and write a checkpoint");
    add_common(train);
    train->add_option("--data", opt.data)->required();
    train->add_option("--val", opt.val_data, "validation file (default: split)");
    train->add_option("--val-fraction", opt.val_fraction);
    train->add_option("--checkpoint", opt.checkpoint)->required();
    train->add_option("--backend-a", opt.backend_a, "encoder A (shared one for task2)");
    train->add_option("--backend-b", opt.backend_b, "encoder B (task1 only)");
    train->add_option("--weights", opt.weights, "w_native,w_english (task2)");
    train->add_option("--weights-dir", opt.weights_dir, "local pretrained weights");
    train->add_option("--threshold", opt.threshold);
    train->add_option("--batch-size", opt.batch_size);
    train->add_option("--max-len", opt.max_len);
    train->add_option("--learning-rate", opt.learning_rate);
    train->add_option("--max-epochs", opt.max_epochs);
    train->add_option("--patience", opt.patience);
    train->add_option("--class-weighting", opt.class_weighting,
                      "none or inverse-frequency");

    CLI::App* eval = app.add_subcommand("eval", "score labeled data");
    add_common(eval);
    eval->add_option("--data", opt.data)->required();
    eval->add_option("--checkpoint", opt.checkpoint)->required();
    eval->add_option("--weights-dir", opt.weights_dir);
    eval->add_option("--errors", opt.errors_out, "misclassification TSV");

    CLI::App* predict = app.add_subcommand("predict", "id/label/probability TSV");
    add_common(predict);
    predict->add_option("--data", opt.data)->required();
    predict->add_option("--checkpoint", opt.checkpoint)->required();
    predict->add_option("--weights-dir", opt.weights_dir);

    CLI::App* audit = app.add_subcommand("audit", "check a report against counts");
    add_common(audit);
    audit->add_option("--report", report_path, "metrics JSON from eval")->required();
    audit->add_option("--correct", correct)->required();
    audit->add_option("--incorrect", incorrect)->required();

    std::vector<const char*> argv;
    argv.push_back("offmix");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
      std::cout << app.help();
      return 0;
    } catch (const CLI::RequiredError& e) {
      bool about_subcommand =
          std::string(e.what()).find("subcommand") != std::string::npos;
      throw Error(about_subcommand && !args.empty() ? ErrorCode::UnknownCommand
                                                    : ErrorCode::MissingFlag,
                  e.what());
    } catch (const CLI::ExtrasError& e) {
      throw Error(ErrorCode::UnknownCommand, e.what());
    } catch (const CLI::ParseError& e) {
      throw Error(ErrorCode::Config, e.what());
    }

    if (stats->parsed()) return cmd_stats(opt);
    if (prep->parsed()) return cmd_prep(opt);
    if (translit->parsed()) return cmd_translit(opt);
    if (translate->parsed()) return cmd_translate(opt);
    if (train->parsed()) return cmd_train(opt);
    if (eval->parsed()) return cmd_eval(opt);
    if (predict->parsed()) return cmd_predict(opt);
    if (audit->parsed()) return cmd_audit(opt, report_path, correct, incorrect);
    throw Error(ErrorCode::UnknownCommand, "no subcommand given");
  } catch (const Error& e) {
    nlohmann::json j;
    j["error"] = {{"code", error_code_name(e.code())}, {"message", e.message()}};
    std::cerr << j.dump() << '\n';
    return e.code() == ErrorCode::UnknownCommand || e.code() == ErrorCode::MissingFlag
               ? 2
               : 1;
  } catch (const std::exception& e) {
    nlohmann::json j;
    j["error"] = {{"code", "internal.error"}, {"message", e.what()}};
    std::cerr << j.dump() << '\n';
    return 70;
  }
}

}  // namespace offmix
