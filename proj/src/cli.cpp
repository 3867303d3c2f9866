#include "cxrnet/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>

#include "cxrnet/checkpoint.hpp"
#include "cxrnet/datapipe.hpp"
#include "cxrnet/report.hpp"

namespace cxrnet {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;  // "init"

void reject_unknown(const json& object, std::initializer_list<const char*> known,
                    const std::string& where) {
  if (!object.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (std::none_of(known.begin(), known.end(),
                     [&](const char* k) { return key == k; })) {
      throw ConfigError("unknown configuration key '" + where + key + "'");
    }
  }
}

template <typename U>
void read(const json& object, const char* key, U& target, const std::string& where) {
  if (!object.contains(key)) return;
  try {
    const json& value = object.at(key);
    if constexpr (std::is_unsigned_v<U> && !std::is_same_v<U, bool>) {
      if (!value.is_number_unsigned()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<U> && !std::is_same_v<U, bool>) {
      if (!value.is_number_integer()) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<U>) {
      if (!value.is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<U, bool>) {
      if (!value.is_boolean()) throw ConfigError("");
    }
    target = value.get<U>();
  } catch (const std::exception&) {
    throw ConfigError("configuration key '" + where + key + "' has the wrong type");
  }
}

void read_path(const json& object, const char* key, fs::path& target) {
  if (!object.contains(key)) return;
  if (!object.at(key).is_string()) {
    throw ConfigError(std::string("configuration key '") + key + "' must be a string");
  }
  target = object.at(key).get<std::string>();
}

std::string hex32(std::uint32_t v) { return fmt::format("{:08x}", v); }

struct CommonFlags {
  std::string config;
  std::string data;
  std::string out;
  std::string checkpoint;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve(const CommonFlags& flags) {
  RunConfig config;
  if (!flags.config.empty()) {
    std::string text;
    try {
      text = read_text_file(flags.config);
    } catch (const FormatError&) {
      throw ConfigError("cannot read config file " + flags.config);
    }
    config = parse_run_config(text);
  }
  if (const char* env = std::getenv(kDatasetRootEnv); env && *env) {
    config.dataset_root = env;
  }
  if (!flags.data.empty()) config.dataset_root = flags.data;
  if (!flags.out.empty()) config.output_dir = flags.out;
  if (!flags.checkpoint.empty()) config.checkpoint = flags.checkpoint;
  if (flags.epochs) config.train.epochs = *flags.epochs;
  if (flags.seed) config.train.seed = *flags.seed;
  config.validate();
  return config;
}

int cmd_train(const CommonFlags& flags, bool quiet, std::ostream& out) {
  const RunConfig config = resolve(flags);
  if (config.dataset_root.empty()) {
    throw ConfigError("no dataset root (use --data, the config file or " +
                      std::string(kDatasetRootEnv) + ")");
  }
  // Everything that can fail on the inputs happens before the output
  // directory is touched.
  const DatasetSplits splits = scan_dataset(config.dataset_root);
  TrainLoaders loaders =
      make_loaders(splits.train, splits.val, config.train, config.model.image_size);

  fs::create_directories(config.output_dir);
  const fs::path model_path = config.output_dir / "model.cxrn";
  const fs::path best_path = config.output_dir / "best.cxrn";
  const fs::path history_path = config.output_dir / "history.csv";

  Prng init = Prng::derive(config.train.seed, {kInitStream});
  Network<float> model(config.model, init);

  History progress;
  double best_val = std::numeric_limits<double>::infinity();
  TrainHooks hooks;
  hooks.on_epoch_end = [&](const EpochRecord& r, const Network<float>& m,
                           const AdamState<float>& adam) {
    progress.epochs.push_back(r);
    write_text_file(history_path, progress.to_csv());
    save_checkpoint(model_path, m, &adam, static_cast<std::uint32_t>(r.epoch),
                    config.train.seed);
    if (r.val_loss < best_val) {
      best_val = r.val_loss;
      save_checkpoint(best_path, m, &adam, static_cast<std::uint32_t>(r.epoch),
                      config.train.seed);
    }
    if (!quiet) {
      out << fmt::format(
          "epoch {}/{} loss={:.4f} acc={:.4f} val_loss={:.4f} val_acc={:.4f} lr={:.3g}\n",
          r.epoch, config.train.epochs, r.train_loss, r.train_accuracy, r.val_loss,
          r.val_accuracy, r.learning_rate);
      out.flush();
    }
    return true;
  };
  const TrainResult result =
      train(model, loaders.train, loaders.val, config.train, hooks);

  write_text_file(history_path, result.history.to_csv());
  if (result.history.epochs.empty()) {
    save_checkpoint(model_path, model, &result.optimizer, 0, config.train.seed);
  }

  const std::string canonical = run_config_json(config);
  nlohmann::ordered_json manifest;
  manifest["seed"] = config.train.seed;
  manifest["config_hash"] = hex32(crc32(std::span(
      reinterpret_cast<const std::uint8_t*>(canonical.data()), canonical.size())));
  manifest["config"] = nlohmann::ordered_json::parse(canonical);
  manifest["epochs_completed"] = result.history.epochs.size();
  manifest["dataset"] = {{"train", splits.train.size()},
                         {"val", splits.val.size()},
                         {"test", splits.test.size()}};
  manifest["parameters"] = model.parameter_count();
  manifest["versions"] = {{"cxrnet", kVersion},
                          {"checkpoint_format", kCheckpointVersion},
                          {"compiler", __VERSION__}};
  write_text_file(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
  out << "wrote " << model_path.string() << "\n";
  return 0;
}

void print_summary(const EvaluationReport& report, std::ostream& out) {
  out << fmt::format("accuracy={:.4f} roc_auc={:.4f} pr_auc={:.4f} total={}\n",
                     report.accuracy, report.roc.auc, report.pr.auc,
                     report.confusion.total());
}

int cmd_evaluate(const CommonFlags& flags, const std::string& split_name,
                 double threshold, std::ostream& out) {
  const RunConfig config = resolve(flags);
  if (config.checkpoint.empty()) throw ConfigError("no checkpoint given");
  if (config.dataset_root.empty()) throw ConfigError("no dataset root given");
  Split split;
  if (split_name == "train") {
    split = Split::train;
  } else if (split_name == "val") {
    split = Split::val;
  } else if (split_name == "test") {
    split = Split::test;
  } else {
    throw ConfigError("unknown split '" + split_name + "'");
  }
  const Checkpoint cp = load_checkpoint(config.checkpoint);
  const LabeledDataset dataset = scan_split(config.dataset_root, split);
  LoaderOptions options;
  options.image_size = cp.model.spec().image_size;
  options.batch_size = config.train.batch_size;
  const BatchLoader loader(dataset, options);
  const Scores scores = evaluate(cp.model, loader);
  const EvaluationReport report =
      make_report(scores.probabilities, scores.labels, threshold);

  fs::create_directories(config.output_dir);
  write_report_files(config.output_dir, report);
  write_text_file(config.output_dir / "scores.csv", scores_csv(scores));
  print_summary(report, out);
  return 0;
}

int cmd_predict(const CommonFlags& flags, const std::vector<std::string>& images,
                std::ostream& out) {
  const RunConfig config = resolve(flags);
  if (config.checkpoint.empty()) throw ConfigError("no checkpoint given");
  const Checkpoint cp = load_checkpoint(config.checkpoint);
  const std::size_t s = cp.model.spec().image_size;
  for (const std::string& path : images) {
    Image image = preprocess(path, s);
    Tensor<float> batch = std::move(image).reshaped({1, 1, s, s});
    const double p = cp.model.predict(batch)[0];
    out << fmt::format("{}\t{:.9g}\t{}\n", path, p,
                       p >= 0.5 ? "PNEUMONIA" : "NORMAL");
  }
  return 0;
}

int cmd_report(const CommonFlags& flags, const std::string& scores_path,
               double threshold, std::ostream& out) {
  const RunConfig config = resolve(flags);
  const Scores scores = parse_scores_csv(read_text_file(scores_path));
  const EvaluationReport report =
      make_report(scores.probabilities, scores.labels, threshold);
  fs::create_directories(config.output_dir);
  write_report_files(config.output_dir, report);
  print_summary(report, out);
  return 0;
}

}  // namespace

void RunConfig::validate() const {
  train.validate();
  model.validate();
  if (output_dir.empty()) throw ConfigError("output directory must not be empty");
}

RunConfig parse_run_config(const std::string& json_text, RunConfig base) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(doc,
                 {"dataset_root", "output_dir", "checkpoint", "epochs", "batch_size",
                  "learning_rate", "seed", "augment", "plateau", "model"},
                 "");
  RunConfig c = std::move(base);
  read_path(doc, "dataset_root", c.dataset_root);
  read_path(doc, "output_dir", c.output_dir);
  read_path(doc, "checkpoint", c.checkpoint);
  read(doc, "epochs", c.train.epochs, "");
  read(doc, "batch_size", c.train.batch_size, "");
  read(doc, "learning_rate", c.train.initial_lr, "");
  read(doc, "seed", c.train.seed, "");
  if (doc.contains("augment")) {
    const json& a = doc["augment"];
    reject_unknown(a, {"enabled", "rotation_deg", "zoom", "horizontal_flip_prob", "shift"},
                   "augment.");
    read(a, "enabled", c.train.augment_enabled, "augment.");
    read(a, "rotation_deg", c.train.augment.rotation_max_deg, "augment.");
    read(a, "zoom", c.train.augment.zoom_max_frac, "augment.");
    read(a, "horizontal_flip_prob", c.train.augment.horizontal_flip_prob, "augment.");
    read(a, "shift", c.train.augment.shift_max_frac, "augment.");
  }
  if (doc.contains("plateau")) {
    const json& p = doc["plateau"];
    reject_unknown(p, {"patience", "factor", "min_lr"}, "plateau.");
    read(p, "patience", c.train.plateau.patience, "plateau.");
    read(p, "factor", c.train.plateau.factor, "plateau.");
    read(p, "min_lr", c.train.plateau.min_lr, "plateau.");
  }
  if (doc.contains("model")) {
    const json& m = doc["model"];
    reject_unknown(m, {"image_size", "conv_filters", "dense_units", "dropout"}, "model.");
    read(m, "image_size", c.model.image_size, "model.");
    if (m.contains("conv_filters")) {
      const json& f = m["conv_filters"];
      if (!f.is_array() || f.size() != 2 || !f[0].is_number_unsigned() ||
          !f[1].is_number_unsigned()) {
        throw ConfigError("model.conv_filters must be two positive integers");
      }
      c.model.conv_filters = {f[0].get<std::size_t>(), f[1].get<std::size_t>()};
    }
    read(m, "dense_units", c.model.dense_units, "model.");
    read(m, "dropout", c.model.dropout_rate, "model.");
  }
  c.validate();
  return c;
}

std::string run_config_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["dataset_root"] = c.dataset_root.string();
  j["output_dir"] = c.output_dir.string();
  j["checkpoint"] = c.checkpoint.string();
  j["epochs"] = c.train.epochs;
  j["batch_size"] = c.train.batch_size;
  j["learning_rate"] = c.train.initial_lr;
  j["seed"] = c.train.seed;
  j["augment"] = {{"enabled", c.train.augment_enabled},
                  {"rotation_deg", c.train.augment.rotation_max_deg},
                  {"zoom", c.train.augment.zoom_max_frac},
                  {"horizontal_flip_prob", c.train.augment.horizontal_flip_prob},
                  {"shift", c.train.augment.shift_max_frac}};
  j["plateau"] = {{"patience", c.train.plateau.patience},
                  {"factor", c.train.plateau.factor},
                  {"min_lr", c.train.plateau.min_lr}};
  j["model"] = {{"image_size", c.model.image_size},
                {"conv_filters", c.model.conv_filters},
                {"dense_units", c.model.dense_units},
                {"dropout", c.model.dropout_rate}};
  return j.dump();
}

int exit_code(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::layout: return 3;
    case ErrorCategory::decode: return 4;
    case ErrorCategory::format: return 5;
    case ErrorCategory::numeric: return 6;
    case ErrorCategory::shape:
    case ErrorCategory::input:
    case ErrorCategory::state: return 7;
  }
  return 1;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Chest X-ray pneumonia classifier: train, evaluate, predict, report"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonFlags flags;
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "JSON run configuration");
    cmd->add_option("--out", flags.out, "Output directory");
  };

  bool quiet = false;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
  add_common(train_cmd);
  train_cmd->add_option("--data", flags.data, "Dataset root (overrides $" +
                                                  std::string(kDatasetRootEnv) + ")");
  train_cmd->add_option("--epochs", flags.epochs, "Number of epochs");
  train_cmd->add_option("--seed", flags.seed, "Random seed");
  train_cmd->add_flag("--quiet", quiet, "No per-epoch progress lines");

  std::string split = "test";
  double threshold = 0.5;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  add_common(eval_cmd);
  eval_cmd->add_option("--data", flags.data, "Dataset root");
  eval_cmd->add_option("--checkpoint", flags.checkpoint, "Checkpoint file");
  eval_cmd->add_option("--split", split, "train, val or test")->capture_default_str();
  eval_cmd->add_option("--threshold", threshold, "Decision threshold")
      ->capture_default_str();

  std::vector<std::string> images;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Classify images");
  predict_cmd->add_option("--config", flags.config, "JSON run configuration");
  predict_cmd->add_option("--checkpoint", flags.checkpoint, "Checkpoint file");
  predict_cmd->add_option("images", images, "Image files")->required();

  std::string scores_path;
  CLI::App* report_cmd =
      app.add_subcommand("report", "Rebuild report files from a scores.csv");
  add_common(report_cmd);
  report_cmd->add_option("--scores", scores_path, "scores.csv from evaluate")
      ->required();
  report_cmd->add_option("--threshold", threshold, "Decision threshold")
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(ErrorCategory::config);
  }

  try {
    if (train_cmd->parsed()) return cmd_train(flags, quiet, out);
    if (eval_cmd->parsed()) return cmd_evaluate(flags, split, threshold, out);
    if (predict_cmd->parsed()) return cmd_predict(flags, images, out);
    if (report_cmd->parsed()) return cmd_report(flags, scores_path, threshold, out);
  } catch (const Error& e) {
    err << "error category=" << to_string(e.category()) << " message=\"" << e.what()
        << "\"\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "error category=internal message=\"" << e.what() << "\"\n";
    return 1;
  }
  return 1;
}

}  // namespace cxrnet
