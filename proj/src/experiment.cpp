/*
 * Copyright (c) 2026 The spq Authors. All Rights Reserved
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "spq/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "spq/error.hpp"
#include "spq/inference.hpp"
#include "spq/model_io.hpp"

namespace spq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::string loss_name(LossKind k) {
  return k == LossKind::MSE ? "mse" : "softmax_ce";
}
LossKind parse_loss(const std::string& s) {
  if (s == "mse") return LossKind::MSE;
  if (s == "softmax_ce") return LossKind::SoftmaxCrossEntropy;
  throw ConfigError("unknown loss '" + s + "'");
}
std::string strategy_name(PruneStrategy s) {
  return s == PruneStrategy::Hard ? "hard" : "semisoft";
}
PruneStrategy parse_strategy(const std::string& s) {
  if (s == "hard") return PruneStrategy::Hard;
  if (s == "semisoft") return PruneStrategy::SemiSoft;
  throw ConfigError("unknown prune strategy '" + s + "'");
}
std::string criterion_name(PruneCriterion c) {
  return c == PruneCriterion::TaylorScore ? "taylor" : "abs";
}
PruneCriterion parse_criterion(const std::string& s) {
  if (s == "taylor") return PruneCriterion::TaylorScore;
  if (s == "abs") return PruneCriterion::AbsValue;
  throw ConfigError("unknown prune criterion '" + s + "'");
}
std::string granularity_name(ScoreGranularity g) {
  return g == ScoreGranularity::PerBatch ? "batch" : "epoch";
}
ScoreGranularity parse_granularity(const std::string& s) {
  if (s == "batch") return ScoreGranularity::PerBatch;
  if (s == "epoch") return ScoreGranularity::PerEpoch;
  throw ConfigError("unknown score granularity '" + s + "'");
}
std::string partition_name(PartitionCriterion p) {
  switch (p) {
    case PartitionCriterion::Abs: return "abs";
    case PartitionCriterion::Taylor: return "taylor";
    case PartitionCriterion::Random: return "random";
  }
  return "";
}
PartitionCriterion parse_partition(const std::string& s) {
  if (s == "abs") return PartitionCriterion::Abs;
  if (s == "taylor") return PartitionCriterion::Taylor;
  if (s == "random") return PartitionCriterion::Random;
  throw ConfigError("unknown partition criterion '" + s + "'");
}

json train_json(const TrainConfig& t, bool with_epochs) {
  json j = {{"learning_rate", t.learning_rate},
            {"momentum", t.momentum},
            {"batch_size", t.batch_size}};
  if (with_epochs) j["epochs"] = t.epochs;
  return j;
}

TrainConfig parse_train(const json& j, const std::string& where,
                        TrainConfig t, bool with_epochs) {
  std::set<std::string> keys{"learning_rate", "momentum", "batch_size"};
  if (with_epochs) keys.insert("epochs");
  check_keys(j, where, keys);
  t.epochs = get_or(j, "epochs", t.epochs);
  t.learning_rate = get_or(j, "learning_rate", t.learning_rate);
  t.momentum = get_or(j, "momentum", t.momentum);
  t.batch_size = get_or(j, "batch_size", t.batch_size);
  return t;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw FormatError("cannot write " + p.string());
  out << text;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw FormatError("cannot open " + p.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw FormatError(p.string() + ": empty CSV");
  return rows;
}

// Re-throws an error from `stage` with the stage name prefixed, keeping
// the error category.
template <typename Fn>
void run_stage(const char* stage, Fn fn) {
  const std::string pre = std::string("stage '") + stage + "': ";
  try {
    fn();
  } catch (const NumericError& e) {
    throw NumericError(pre + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(pre + e.what());
  } catch (const FormatError& e) {
    throw FormatError(pre + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(pre + e.what());
  } catch (const Error& e) {
    throw Error(pre + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (model.layers.empty()) throw ConfigError("model has no layers");
  if (task != Task::CsvRegression && (data.n_train == 0 || data.n_eval == 0))
    throw ConfigError("n_train and n_eval must be > 0");
  train.validate();
  finetune.validate();
  prune.validate();
  quant.validate();
  cost.validate();
}

json ExperimentConfig::to_json() const {
  json layers = json::array();
  for (const auto& l : model.layers) {
    switch (l.kind) {
      case LayerKind::Dense:
        layers.push_back({{"type", "dense"}, {"out", l.out}});
        break;
      case LayerKind::Conv2d:
        layers.push_back(
            {{"type", "conv2d"}, {"out_channels", l.out}, {"kernel", l.kernel}});
        break;
      case LayerKind::ReLU:
        layers.push_back({{"type", "relu"}});
        break;
    }
  }
  json j;
  j["seed"] = seed;
  j["task"] = task_name(task);
  j["data"] = {{"n_train", data.n_train},
               {"n_eval", data.n_eval},
               {"length", data.params.length},
               {"max_shift", data.params.max_shift},
               {"classes", data.params.classes},
               {"features", data.params.features},
               {"blob_stddev", data.params.blob_stddev},
               {"blob_seed", data.params.blob_seed},
               {"csv_path", data.params.csv_path.string()},
               {"eval_csv_path", data.eval_csv_path.string()}};
  j["model"] = {{"input_shape", model.input_shape}, {"layers", layers}};
  j["loss"] = loss_name(loss);
  j["metric"] = metric.str();
  j["train"] = train_json(train, true);
  j["finetune"] = train_json(finetune, false);
  j["prune"] = {{"enabled", prune_enabled},
                {"threshold", prune.threshold},
                {"strategy", strategy_name(prune.strategy)},
                {"max_epochs", prune.max_epochs},
                {"target_sparsity", prune.target_sparsity
                                        ? json(*prune.target_sparsity)
                                        : json(nullptr)},
                {"convergence_delta", prune.convergence_delta},
                {"criterion", criterion_name(prune.criterion)},
                {"granularity", granularity_name(prune.granularity)}};
  j["quant"] = {{"enabled", quant_enabled},
                {"bits", quant.bits},
                {"schedule", quant.schedule},
                {"partition", partition_name(quant.partition)},
                {"retrain_epochs", quant.retrain_epochs},
                {"interleaved_prune_threshold",
                 quant.interleaved_prune_threshold
                     ? json(*quant.interleaved_prune_threshold)
                     : json(nullptr)}};
  j["cost"] = {{"shift_cost_ratio", cost.shift_cost_ratio},
               {"bytes_per_dense_weight", cost.bytes_per_dense_weight},
               {"scale", cost.scale}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j, "config",
             {"seed", "task", "data", "model", "loss", "metric", "train",
              "finetune", "prune", "quant", "cost"});
  ExperimentConfig c;
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.task = parse_task(get_or<std::string>(j, "task", "toy_disparity"));
  if (j.contains("data")) {
    const json& d = j["data"];
    check_keys(d, "data",
               {"n_train", "n_eval", "length", "max_shift", "classes",
                "features", "blob_stddev", "blob_seed", "csv_path",
                "eval_csv_path"});
    c.data.n_train = get_or(d, "n_train", c.data.n_train);
    c.data.n_eval = get_or(d, "n_eval", c.data.n_eval);
    c.data.params.length = get_or(d, "length", c.data.params.length);
    c.data.params.max_shift = get_or(d, "max_shift", c.data.params.max_shift);
    c.data.params.classes = get_or(d, "classes", c.data.params.classes);
    c.data.params.features = get_or(d, "features", c.data.params.features);
    c.data.params.blob_stddev =
        get_or(d, "blob_stddev", c.data.params.blob_stddev);
    c.data.params.blob_seed = get_or(d, "blob_seed", c.data.params.blob_seed);
    c.data.params.csv_path = get_or<std::string>(d, "csv_path", "");
    c.data.eval_csv_path = get_or<std::string>(d, "eval_csv_path", "");
  }
  if (!j.contains("model")) throw ConfigError("config needs a 'model' section");
  {
    const json& m = j["model"];
    check_keys(m, "model", {"input_shape", "layers"});
    c.model.input_shape = get_or<Shape>(m, "input_shape", {});
    if (!m.contains("layers") || !m["layers"].is_array())
      throw ConfigError("model.layers must be an array");
    for (const auto& l : m["layers"]) {
      const auto type = get_or<std::string>(l, "type", "");
      LayerSpec ls;
      if (type == "dense") {
        check_keys(l, "dense layer", {"type", "out"});
        ls.kind = LayerKind::Dense;
        ls.out = get_or<std::size_t>(l, "out", 0);
      } else if (type == "conv2d") {
        check_keys(l, "conv2d layer", {"type", "out_channels", "kernel"});
        ls.kind = LayerKind::Conv2d;
        ls.out = get_or<std::size_t>(l, "out_channels", 0);
        ls.kernel = get_or<std::size_t>(l, "kernel", 0);
      } else if (type == "relu") {
        check_keys(l, "relu layer", {"type"});
        ls.kind = LayerKind::ReLU;
      } else {
        throw ConfigError("unknown layer type '" + type + "'");
      }
      c.model.layers.push_back(ls);
    }
  }
  c.loss = parse_loss(get_or<std::string>(j, "loss", "mse"));
  c.metric = MetricSpec::parse(get_or<std::string>(j, "metric", "threshold:1"));
  if (j.contains("train")) c.train = parse_train(j["train"], "train", c.train, true);
  c.finetune = c.train;
  if (j.contains("finetune"))
    c.finetune = parse_train(j["finetune"], "finetune", c.finetune, false);
  if (j.contains("prune")) {
    const json& p = j["prune"];
    check_keys(p, "prune",
               {"enabled", "threshold", "strategy", "max_epochs",
                "target_sparsity", "convergence_delta", "criterion",
                "granularity"});
    c.prune_enabled = get_or(p, "enabled", true);
    c.prune.threshold = get_or(p, "threshold", c.prune.threshold);
    c.prune.strategy = parse_strategy(get_or<std::string>(p, "strategy", "hard"));
    c.prune.max_epochs = get_or(p, "max_epochs", c.prune.max_epochs);
    if (p.contains("target_sparsity") && !p["target_sparsity"].is_null())
      c.prune.target_sparsity = get_or(p, "target_sparsity", 0.0);
    c.prune.convergence_delta =
        get_or(p, "convergence_delta", c.prune.convergence_delta);
    c.prune.criterion =
        parse_criterion(get_or<std::string>(p, "criterion", "taylor"));
    c.prune.granularity =
        parse_granularity(get_or<std::string>(p, "granularity", "batch"));
  }
  if (j.contains("quant")) {
    const json& q = j["quant"];
    check_keys(q, "quant",
               {"enabled", "bits", "schedule", "partition", "retrain_epochs",
                "interleaved_prune_threshold"});
    c.quant_enabled = get_or(q, "enabled", true);
    c.quant.bits = get_or(q, "bits", c.quant.bits);
    c.quant.schedule = get_or(q, "schedule", c.quant.schedule);
    c.quant.partition =
        parse_partition(get_or<std::string>(q, "partition", "taylor"));
    c.quant.retrain_epochs = get_or(q, "retrain_epochs", c.quant.retrain_epochs);
    if (q.contains("interleaved_prune_threshold") &&
        !q["interleaved_prune_threshold"].is_null())
      c.quant.interleaved_prune_threshold =
          get_or(q, "interleaved_prune_threshold", 0.0);
  }
  if (j.contains("cost")) {
    const json& k = j["cost"];
    check_keys(k, "cost", {"shift_cost_ratio", "bytes_per_dense_weight", "scale"});
    c.cost.shift_cost_ratio = get_or(k, "shift_cost_ratio", c.cost.shift_cost_ratio);
    c.cost.bytes_per_dense_weight =
        get_or(k, "bytes_per_dense_weight", c.cost.bytes_per_dense_weight);
    c.cost.scale = get_or(k, "scale", c.cost.scale);
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::uint64_t stage_seed(std::uint64_t seed, SeedStream stream) {
  // splitmix64 finalizer over (seed, stream).
  std::uint64_t z = seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(stream);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Datasets make_datasets(const ExperimentConfig& cfg) {
  Datasets d;
  if (cfg.task == Task::CsvRegression) {
    d.train = load_csv(cfg.data.params.csv_path);
    d.eval = cfg.data.eval_csv_path.empty() ? d.train
                                            : load_csv(cfg.data.eval_csv_path);
  } else {
    d.train = gen_data(cfg.task, stage_seed(cfg.seed, SeedStream::TrainData),
                       cfg.data.n_train, cfg.data.params);
    d.eval = gen_data(cfg.task, stage_seed(cfg.seed, SeedStream::EvalData),
                      cfg.data.n_eval, cfg.data.params);
  }
  if (!cfg.model.input_shape.empty()) {
    d.train.reshape_inputs(cfg.model.input_shape);
    d.eval.reshape_inputs(cfg.model.input_shape);
  }
  return d;
}

ExperimentConfig resolve_input_shape(ExperimentConfig cfg, const Datasets& data) {
  if (cfg.model.input_shape.empty()) {
    const Shape& s = data.train.inputs.shape();
    cfg.model.input_shape.assign(s.begin() + 1, s.end());
  }
  return cfg;
}

void stage_train(const ExperimentConfig& cfg, const Datasets& data,
                 const fs::path& out_dir) {
  const ExperimentConfig c = resolve_input_shape(cfg, data);
  Model m = build_model(c.model, stage_seed(c.seed, SeedStream::ModelInit));
  std::mt19937_64 rng(stage_seed(c.seed, SeedStream::Baseline));
  Sgd opt(c.train.learning_rate, c.train.momentum);
  std::string log = "epoch,train_loss,eval_metric\n";
  for (int e = 1; e <= c.train.epochs; ++e) {
    const double loss = train_epoch(m, data.train, c.loss, c.train, opt, rng);
    log += std::to_string(e) + "," + fmt("%.9g", loss) + "," +
           fmt("%.4f", evaluate_metric(m, data.eval, c.metric)) + "\n";
  }
  write_text(out_dir / artifacts::kTrainLog, log);
  save_model(m, out_dir / artifacts::kBaseline, Encoding::DenseF32);
}

void stage_prune(const ExperimentConfig& cfg, const Datasets& data,
                 const fs::path& model_in, const fs::path& out_dir) {
  Model m = load_model(model_in);
  const PruneResult r =
      prune_loop(m, data.train, data.eval, cfg.loss, cfg.metric, cfg.prune,
                 cfg.finetune, stage_seed(cfg.seed, SeedStream::Prune));
  std::ostringstream csv;
  write_prune_csv(csv, r);
  write_text(out_dir / artifacts::kPruneCsv, csv.str());
  save_model(m, out_dir / artifacts::kPruned, Encoding::DenseF32);
}

void stage_quantize(const ExperimentConfig& cfg, const Datasets& data,
                    const fs::path& model_in, const fs::path& out_dir) {
  Model m = load_model(model_in);
  const QuantResult r =
      inq_loop(m, data.train, data.eval, cfg.loss, cfg.metric, cfg.quant,
               cfg.finetune, stage_seed(cfg.seed, SeedStream::Quantize));
  std::ostringstream csv;
  write_quant_csv(csv, r);
  write_text(out_dir / artifacts::kQuantCsv, csv.str());
  save_model(m, out_dir / artifacts::kQuantized, Encoding::SparsePow2);
}

std::vector<SummaryRow> summarize(const ExperimentConfig& cfg,
                                  const Datasets& data, const fs::path& run_dir) {
  const ExperimentConfig c = resolve_input_shape(cfg, data);
  std::vector<SummaryRow> rows;
  json costs = json::object();
  double baseline_mem = 0.0;
  const std::pair<const char*, const char*> stages[] = {
      {"baseline", artifacts::kBaseline},
      {"pruned", artifacts::kPruned},
      {"quantized", artifacts::kQuantized}};
  for (const auto& [name, file] : stages) {
    const fs::path p = run_dir / file;
    if (!fs::exists(p)) continue;
    const Model m = load_model(p);
    SummaryRow row;
    row.stage = name;
    row.eval_metric = evaluate_metric(m, data.eval, c.metric);
    const bool quantized = std::string(name) == "quantized";
    row.cost = effective_cost(m, c.model.input_shape, c.cost, quantized);
    if (baseline_mem == 0.0)
      baseline_mem = static_cast<double>(row.cost.memory_compressed);
    row.memory_ratio =
        memory_ratio(static_cast<double>(row.cost.memory_compressed), baseline_mem);
    costs[name] = row.cost.to_json();

    if (quantized) {
      const CompiledModel cm = compile(m);
      const Tensor ref = evaluate(m, data.eval.inputs);
      std::uint64_t ops = 0;
      const Tensor out = forward_shift(cm, data.eval.inputs,
                                       kernels::default_backend(), &ops);
      double max_diff = 0.0;
      bool exact = true;
      for (std::size_t i = 0; i < ref.numel(); ++i) {
        max_diff = std::max(max_diff, std::fabs(ref[i] - out[i]));
        exact = exact && ref[i] == out[i];
      }
      const std::uint64_t per_sample = ops / data.eval.size();
      json v = {{"samples", data.eval.size()},
                {"max_abs_diff", max_diff},
                {"bit_exact", exact},
                {"shift_ops_per_sample", per_sample},
                {"cost_shift_ops", row.cost.shift_ops},
                {"compiled_terms", cm.term_count()}};
      write_text(run_dir / artifacts::kVerifyJson, v.dump(2) + "\n");
      if (!exact || per_sample != row.cost.shift_ops)
        throw NumericError("shift-only forward pass disagrees with the "
                           "reference forward pass");
    }
    rows.push_back(std::move(row));
  }
  write_text(run_dir / artifacts::kCostJson, costs.dump(2) + "\n");

  std::string csv =
      "stage,eval_metric,sparsity,params_total,params_nonzero,memory_raw,"
      "memory_compressed,memory_ratio,macs_dense,ops_effective,hw_cost\n";
  for (const auto& r : rows) {
    csv += r.stage + "," + fmt("%.4f", r.eval_metric) + "," +
           fmt("%.6f", r.cost.sparsity) + "," +
           std::to_string(r.cost.params_total) + "," +
           std::to_string(r.cost.params_nonzero) + "," +
           std::to_string(r.cost.memory_raw) + "," +
           std::to_string(r.cost.memory_compressed) + "," +
           fmt("%.6f", r.memory_ratio) + "," + std::to_string(r.cost.macs_dense) +
           "," + std::to_string(r.cost.ops_effective) + "," +
           fmt("%.6g", r.cost.hw_cost) + "\n";
  }
  write_text(run_dir / artifacts::kSummaryCsv, csv);
  return rows;
}

std::vector<SummaryRow> run_pipeline(const ExperimentConfig& cfg,
                                     const fs::path& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  Datasets data;
  run_stage("data", [&] { data = make_datasets(cfg); });
  const ExperimentConfig c = resolve_input_shape(cfg, data);
  write_text(out_dir / artifacts::kConfigJson, c.to_json().dump(2) + "\n");

  run_stage("train", [&] { stage_train(c, data, out_dir); });
  fs::path current = out_dir / artifacts::kBaseline;
  if (c.prune_enabled) {
    run_stage("prune", [&] { stage_prune(c, data, current, out_dir); });
    current = out_dir / artifacts::kPruned;
  }
  if (c.quant_enabled)
    run_stage("quantize", [&] { stage_quantize(c, data, current, out_dir); });
  std::vector<SummaryRow> rows;
  run_stage("verify", [&] { rows = summarize(c, data, out_dir); });
  return rows;
}

std::string format_report(const fs::path& run_dir) {
  const auto rows = read_csv_rows(run_dir / artifacts::kSummaryCsv);
  const auto& h = rows.front();
  auto col = [&](const char* name) {
    for (std::size_t i = 0; i < h.size(); ++i)
      if (h[i] == name) return i;
    throw FormatError(std::string("summary.csv lacks column ") + name);
  };
  const std::size_t c_stage = col("stage"), c_metric = col("eval_metric"),
                    c_spar = col("sparsity"), c_params = col("params_total"),
                    c_nz = col("params_nonzero"), c_mem = col("memory_compressed"),
                    c_ratio = col("memory_ratio"), c_ops = col("ops_effective"),
                    c_cost = col("hw_cost");
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %9s %8s %9s %9s %18s %12s %12s\n",
                "stage", "metric", "spar.", "params", "nonzero", "memory (B)",
                "ops/fwd", "*cost");
  out += buf;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& v = rows[r];
    if (v.size() < h.size()) throw FormatError("short row in summary.csv");
    const std::string mem = v[c_mem] + " (" +
                            fmt("%.1f", 100.0 * std::stod(v[c_ratio])) + "%)";
    std::snprintf(buf, sizeof buf, "%-10s %8.2f%% %7.2f%% %9s %9s %18s %12s %12s\n",
                  v[c_stage].c_str(), std::stod(v[c_metric]),
                  100.0 * std::stod(v[c_spar]), v[c_params].c_str(),
                  v[c_nz].c_str(), mem.c_str(), v[c_ops].c_str(),
                  v[c_cost].c_str());
    out += buf;
  }
  out += "*cost in 16-bit MAC units; a shift counts as the configured fraction "
         "of a MAC.\n";
  return out;
}

std::string compare_runs(const fs::path& a, const fs::path& b) {
  const auto ra = read_csv_rows(a / artifacts::kQuantCsv);
  const auto rb = read_csv_rows(b / artifacts::kQuantCsv);
  // step_fraction -> (sparsity, eval) per run, in first-seen order.
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::string>>> joined;
  auto add = [&](const auto& rows, bool first) {
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& v = rows[r];
      if (v.size() < 3) throw FormatError("short row in quant_steps.csv");
      if (!joined.count(v[0])) order.push_back(v[0]);
      auto& slot = first ? joined[v[0]].first : joined[v[0]].second;
      slot = {v[1], v[2]};
    }
  };
  add(ra, true);
  add(rb, false);
  std::string out = "step_fraction,sparsity_a,eval_metric_a,sparsity_b,eval_metric_b\n";
  for (const auto& key : order) {
    const auto& [x, y] = joined[key];
    out += key + "," + (x.empty() ? "," : x[0] + "," + x[1]) + "," +
           (y.empty() ? "," : y[0] + "," + y[1]) + "\n";
  }
  return out;
}

std::vector<SweepRun> criterion_sweep(const ExperimentConfig& cfg,
                                      const Datasets& data, const Model& base,
                                      const std::vector<double>& taylor_thresholds,
                                      const std::vector<double>& abs_thresholds) {
  std::vector<SweepRun> runs;
  auto go = [&](PruneCriterion crit, double t) {
    Model m = base.clone();
    PruneConfig pc = cfg.prune;
    pc.criterion = crit;
    pc.threshold = t;
    runs.push_back({crit, t,
                    prune_loop(m, data.train, data.eval, cfg.loss, cfg.metric, pc,
                               cfg.finetune,
                               stage_seed(cfg.seed, SeedStream::Prune))});
  };
  for (double t : taylor_thresholds) go(PruneCriterion::TaylorScore, t);
  for (double t : abs_thresholds) go(PruneCriterion::AbsValue, t);
  return runs;
}

std::string sweep_csv(const std::vector<SweepRun>& runs) {
  std::string out = "criterion,threshold,epoch,sparsity,train_loss,eval_metric\n";
  for (const auto& r : runs) {
    const std::string head =
        criterion_name(r.criterion) + "," + fmt("%.6g", r.threshold) + ",";
    out += head + "0," + fmt("%.6f", r.result.initial_sparsity) + ",," +
           fmt("%.4f", r.result.initial_metric) + "\n";
    for (const auto& s : r.result.trajectory)
      out += head + std::to_string(s.epoch) + "," + fmt("%.6f", s.sparsity) +
             "," + fmt("%.9g", s.train_loss) + "," + fmt("%.4f", s.eval_metric) +
             "\n";
  }
  return out;
}

}  // namespace spq
