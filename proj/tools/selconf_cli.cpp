/*
 * Copyright 2026 The selconf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// selconf: selective-prediction toolkit.
//
//   selconf synth --n 20000 --seed 0 --out data.ndjson
//   selconf eval --data data.ndjson --methods msp,doctor,mcd --out report.csv
//   selconf pipeline --seeds 0,1,2,3,4 --out runs/headline

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "selconf/confidence.hpp"
#include "selconf/pipeline.hpp"

namespace {

using namespace selconf;
namespace fs = std::filesystem;

constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumeric = 4;

struct Clock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::string manifest_path(const std::string& out) { return out + ".manifest.jsonl"; }

void record(const std::string& command, json config, std::vector<uint64_t> seeds,
            std::vector<std::string> inputs, std::vector<std::string> outputs,
            const Clock& clock) {
  RunManifest m{command,         std::move(config), std::move(seeds), std::move(inputs),
                std::move(outputs), kVersion,       clock.seconds()};
  for (const auto& path : m.outputs) m.append_to(manifest_path(path));
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write '" + path + "'");
  out.precision(17);
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<uint64_t> parse_seeds(const std::string& csv) {
  std::vector<uint64_t> out;
  for (const auto& s : split_list(csv)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      fail("invalid seed '" + s + "'");
    }
  }
  if (out.empty()) fail("no seeds given");
  return out;
}

// Options shared by subcommands that read a record file.
struct DataOpts {
  std::string data;
  std::optional<int> k;
  std::optional<int> d;

  void add(CLI::App* cmd, bool required = true) {
    auto* opt = cmd->add_option("--data", data, "Record file (newline-delimited JSON)");
    if (required) opt->required();
    cmd->add_option("--k", k, "Number of classes when the file has no header");
    cmd->add_option("--d", d, "Feature width when the file has no header");
  }
  EvalSet load() const { return staged("load", [&] { return parse_records_file(data, k, d); }); }
};

struct TrainOpts {
  TrainConfig config;
  std::string early_stop = "val_aurc";

  void add(CLI::App* cmd) {
    cmd->add_option("--lr", config.learning_rate, "Adam learning rate")->capture_default_str();
    cmd->add_option("--epochs", config.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--batch-size", config.batch_size, "Minibatch size")->capture_default_str();
    cmd->add_option("--dropout", config.dropout_p, "Dropout probability")->capture_default_str();
    cmd->add_option("--early-stop", early_stop, "val_aurc or none")->capture_default_str();
  }
  TrainConfig resolve(uint64_t seed) const {
    TrainConfig c = config;
    c.seed = seed;
    if (early_stop == "none") {
      c.early_stop = EarlyStop::kNone;
    } else if (early_stop == "val_aurc") {
      c.early_stop = EarlyStop::kValAurc;
    } else {
      fail("--early-stop must be val_aurc or none");
    }
    c.validate();
    return c;
  }
};

struct SynthOpts {
  SynthConfig config;

  void add(CLI::App* cmd) {
    cmd->add_option("--n", config.n, "Number of records")->capture_default_str();
    cmd->add_option("--k", config.k_classes, "Number of classes")->capture_default_str();
    cmd->add_option("--d", config.feat_dim, "Feature width")->capture_default_str();
    cmd->add_option("--tau", config.tau, "Overconfidence of hard items")->capture_default_str();
    cmd->add_option("--margin-max", config.margin_max)->capture_default_str();
    cmd->add_option("--class-noise", config.class_noise)->capture_default_str();
    cmd->add_option("--logit-noise", config.logit_noise)->capture_default_str();
    cmd->add_option("--difficulty-noise", config.difficulty_feature_noise)->capture_default_str();
    cmd->add_option("--mc-passes", config.mc_passes)->capture_default_str();
    cmd->add_option("--mc-noise", config.mc_noise)->capture_default_str();
  }
};

json synth_json(const SynthConfig& c) {
  return {{"n", c.n},
          {"k_classes", c.k_classes},
          {"feat_dim", c.feat_dim},
          {"margin_max", c.margin_max},
          {"class_noise", c.class_noise},
          {"tau", c.tau},
          {"logit_noise", c.logit_noise},
          {"difficulty_feature_noise", c.difficulty_feature_noise},
          {"mc_passes", c.mc_passes},
          {"mc_noise", c.mc_noise},
          {"seed", c.seed}};
}

struct MethodOpts {
  std::string methods = "msp,doctor,mcd,vs,acr";
  std::string heads;
  std::string vs_params;
  std::optional<AcrHeads> loaded_heads;
  std::optional<VsParams> loaded_vs;

  void add(CLI::App* cmd, const std::string& default_methods) {
    methods = default_methods;
    cmd->add_option("--methods", methods, "Comma-separated: msp,doctor,mcd,vs,acr,oracle")
        ->capture_default_str();
    cmd->add_option("--heads", heads, "Trained ACR heads (JSON)");
    cmd->add_option("--vs-params", vs_params, "Vector-scaling parameters (JSON)");
  }
  std::vector<std::string> list() const {
    auto out = split_list(methods);
    if (out.empty()) fail("no methods given");
    return out;
  }
  MethodInputs load() {
    if (!heads.empty()) loaded_heads = acr_heads_from_json(read_json_file(heads));
    if (!vs_params.empty()) loaded_vs = vs_params_from_json(read_json_file(vs_params));
    return {loaded_vs ? &*loaded_vs : nullptr, loaded_heads ? &*loaded_heads : nullptr};
  }
  std::vector<std::string> inputs() const {
    std::vector<std::string> out;
    if (!heads.empty()) out.push_back(heads);
    if (!vs_params.empty()) out.push_back(vs_params);
    return out;
  }
};

void print_human(std::span<const MetricsReport> reports, std::span<const double> risks) {
  write_report_csv(reports, risks, std::cout, 2);
}

// ---------------------------------------------------------------- synth

int cmd_synth(SynthOpts& o, uint64_t seed, const std::string& out) {
  const Clock clock;
  SynthConfig c = o.config;
  c.seed = seed;
  const SynthData data = staged("synth", [&] { return generate(c); });
  serialize_records_file(data.set, out);
  const std::string side = out + ".sstar.csv";
  write_posterior_csv(data, side);
  record("synth", synth_json(c), {seed}, {}, {out, side}, clock);
  std::cerr << "wrote " << data.set.size() << " records to " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------- eval

int cmd_eval(DataOpts& d, MethodOpts& m, const std::string& risks_csv, int bins,
             const std::string& out) {
  const Clock clock;
  const EvalSet set = d.load();
  const auto risks = parse_risks(risks_csv);
  const MethodInputs inputs = m.load();
  std::vector<MetricsReport> reports;
  bool has_oracle = false;
  for (const auto& name : m.list()) {
    has_oracle = has_oracle || name == "oracle";
    reports.push_back(staged(name, [&] {
      if (name == "oracle") return oracle_metrics(msp_table(set).correctness(), risks);
      return evaluate(method_table(name, set, inputs), risks, bins);
    }));
  }
  if (!has_oracle) reports.push_back(oracle_metrics(msp_table(set).correctness(), risks));

  print_human(reports, risks);
  if (!out.empty()) {
    auto f = open_out(out);
    if (ends_with(out, ".json")) {
      json rows = json::array();
      for (const auto& r : reports) rows.push_back(to_json(r));
      f << rows.dump(2) << '\n';
    } else {
      write_report_csv(reports, risks, f);
    }
    std::vector<std::string> ins{d.data};
    for (auto& s : m.inputs()) ins.push_back(s);
    record("eval", {{"methods", m.methods}, {"risks", risks}, {"bins", bins}}, {}, ins, {out},
           clock);
  }
  return 0;
}

// ---------------------------------------------------------------- sweep

int cmd_sweep(DataOpts& d, MethodOpts& m, const std::string& out) {
  const Clock clock;
  const EvalSet set = d.load();
  const MethodInputs inputs = m.load();
  std::vector<std::string> outputs;
  for (const auto& name : m.list()) {
    const auto table = staged(name, [&] { return method_table(name, set, inputs); });
    const std::string path = out + "." + table.method_name() + ".csv";
    auto f = open_out(path);
    write_curve_csv(rc_curve(table), f);
    outputs.push_back(path);
    std::cerr << "wrote " << path << "\n";
  }
  std::vector<std::string> ins{d.data};
  for (auto& s : m.inputs()) ins.push_back(s);
  record("sweep", {{"methods", m.methods}}, {}, ins, outputs, clock);
  return 0;
}

// ---------------------------------------------------------------- calibrate-vs

int cmd_calibrate_vs(DataOpts& d, TrainOpts& t, uint64_t seed, const std::string& out) {
  const Clock clock;
  const EvalSet set = d.load();
  const TrainConfig config = t.resolve(seed);
  const auto result = staged("vs_train", [&] { return vs_train(set, config); });
  json j = to_json(result.params);
  j["train_config"] = to_json(config);
  j["epoch_loss"] = result.epoch_loss;
  write_json_file(j, out);
  record("calibrate-vs", to_json(config), {seed}, {d.data}, {out}, clock);
  return 0;
}

// ---------------------------------------------------------------- train-heads

struct HeadOpts {
  std::string val;
  double fraction_val_g = 0.2;
  std::string input = "features,logits";
  std::string mode = "full";
  double fixed_alpha = 0.5;
  int depth = 3;
  std::optional<int> hidden;
  bool no_standardize = false;
};

int cmd_train_heads(DataOpts& d, TrainOpts& t, HeadOpts& h, uint64_t seed,
                    const std::string& out) {
  const Clock clock;
  const EvalSet full = d.load();
  const TrainConfig config = t.resolve(seed);
  AcrTrainOptions options;
  options.input_spec = parse_input_spec(h.input);
  options.mode = acr_mode_from_string(h.mode);
  options.fixed_alpha = h.fixed_alpha;
  options.depth = h.depth;
  options.d_hidden = h.hidden;
  options.standardize = !h.no_standardize;

  std::vector<std::string> ins{d.data};
  std::optional<EvalSet> train;
  std::optional<EvalSet> val;
  if (!h.val.empty()) {
    train = full;
    val = staged("load", [&] { return parse_records_file(h.val, d.k, d.d); });
    ins.push_back(h.val);
  } else {
    // Hold out a seeded slice of the input for early stopping.
    auto [held, rest] = split_eval(full, h.fraction_val_g, seed);
    val = std::move(held);
    train = std::move(rest);
  }
  const auto result = staged("acr_train", [&] { return acr_train(*train, *val, config, options); });
  json j = to_json(result.heads);
  j["train_config"] = to_json(config);
  j["seed"] = seed;
  j["epoch_loss"] = result.epoch_loss;
  j["val_aurc"] = result.val_aurc;
  j["best_epoch"] = result.best_epoch;
  write_json_file(j, out);
  std::cerr << "best epoch " << result.best_epoch << " of " << config.epochs << "\n";
  json cfg = to_json(config);
  cfg["input"] = h.input;
  cfg["mode"] = h.mode;
  cfg["depth"] = h.depth;
  cfg["fraction_val_g"] = h.val.empty() ? json(h.fraction_val_g) : json(nullptr);
  record("train-heads", cfg, {seed}, ins, {out}, clock);
  return 0;
}

// ---------------------------------------------------------------- verify

int cmd_verify(DataOpts& d, MethodOpts& m, const std::string& posterior,
               const std::string& out) {
  const Clock clock;
  const EvalSet set = d.load();
  const MethodInputs inputs = m.load();
  if (!inputs.heads) fail("verify needs a heads file (--heads)");
  const auto msp = msp_table(set);
  const auto rrh = rrh_table(*inputs.heads, set);
  const auto acr = acr_table(*inputs.heads, set);
  std::optional<PosteriorTable> post;
  if (!posterior.empty()) post = read_posterior_csv(posterior);
  json report = staged("verify", [&] {
    json r = verify_report(msp, rrh, &acr, post ? &*post : nullptr);
    const auto a = alpha_stats(*inputs.heads, set);
    r["alpha"] = {{"mean", a.mean},
                  {"variance", a.variance},
                  {"frac_below_0.01", a.frac_below_001},
                  {"frac_above_0.99", a.frac_above_099},
                  {"histogram", a.histogram}};
    r["gradient_check_max_deviation"] = bce_alpha_gradient_check(*inputs.heads, set);
    return r;
  });
  std::cout << report.dump(2) << '\n';
  std::vector<std::string> ins{d.data, m.heads};
  if (!posterior.empty()) ins.push_back(posterior);
  if (!out.empty()) {
    write_json_file(report, out);
    record("verify", json::object(), {}, ins, {out}, clock);
  }
  return 0;
}

// ---------------------------------------------------------------- thresholds

int cmd_thresholds(DataOpts& d, MethodOpts& m, const std::string& test_path,
                   const std::string& risks_csv, double fraction_val_g, uint64_t seed,
                   const std::string& out) {
  const Clock clock;
  const EvalSet first = d.load();
  std::optional<EvalSet> val;
  std::optional<EvalSet> test;
  std::vector<std::string> ins{d.data};
  if (!test_path.empty()) {
    val = first;
    test = staged("load", [&] { return parse_records_file(test_path, d.k, d.d); });
    ins.push_back(test_path);
  } else {
    auto [v, t] = split_eval(first, fraction_val_g, seed);
    val = std::move(v);
    test = std::move(t);
  }
  const auto risks = parse_risks(risks_csv);
  const MethodInputs inputs = m.load();
  for (auto& s : m.inputs()) ins.push_back(s);

  std::ostringstream rows;
  rows.precision(17);
  rows << "method,risk,gamma,delta_risk,delta_coverage,test_risk,test_coverage\n";
  std::cout << "method,risk,gamma,delta_risk,delta_coverage,test_risk,test_coverage\n";
  bool infeasible = false;
  for (const auto& name : m.list()) {
    const auto vt = staged(name, [&] { return method_table(name, *val, inputs); });
    const auto tt = staged(name, [&] { return method_table(name, *test, inputs); });
    for (double r : risks) {
      try {
        const auto t = threshold_transfer(vt, tt, r);
        rows << vt.method_name() << ',' << r << ',' << t.gamma << ',' << t.delta_risk * 100.0
             << ',' << t.delta_coverage * 100.0 << ',' << t.test_risk * 100.0 << ','
             << t.test_coverage * 100.0 << '\n';
        std::cout << vt.method_name() << ',' << r << ',' << std::fixed << std::setprecision(4)
                  << t.gamma << std::setprecision(2) << ',' << t.delta_risk * 100.0 << ','
                  << t.delta_coverage * 100.0 << ',' << t.test_risk * 100.0 << ','
                  << t.test_coverage * 100.0 << std::defaultfloat << '\n';
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kInfeasible) throw;
        infeasible = true;
        rows << vt.method_name() << ',' << r << ",infeasible,,,,\n";
        std::cout << vt.method_name() << ',' << r << ",infeasible,,,,\n";
        std::cerr << name << " at risk " << r << ": " << e.what() << "\n";
      }
    }
  }
  if (!out.empty()) {
    auto f = open_out(out);
    f << rows.str();
    record("thresholds",
           {{"methods", m.methods},
            {"risks", risks},
            {"fraction_val_g", test_path.empty() ? json(fraction_val_g) : json(nullptr)}},
           {seed}, ins, {out}, clock);
  }
  return infeasible ? kExitInfeasible : 0;
}

// ---------------------------------------------------------------- pipeline

int cmd_pipeline(SynthOpts& s, TrainOpts& t, HeadOpts& h, const std::string& methods,
                 const std::string& risks_csv, int bins, const std::string& seeds_csv,
                 const std::string& out) {
  const Clock clock;
  PipelineConfig config;
  config.synth = s.config;
  config.train = t.resolve(0);
  config.acr.input_spec = parse_input_spec(h.input);
  config.acr.mode = acr_mode_from_string(h.mode);
  config.acr.fixed_alpha = h.fixed_alpha;
  config.acr.depth = h.depth;
  config.acr.d_hidden = h.hidden;
  config.acr.standardize = !h.no_standardize;
  config.methods = split_list(methods);
  for (const auto& m : config.methods) {
    if (m == "oracle") fail("the oracle row is always appended; drop it from --methods");
  }
  config.risks = parse_risks(risks_csv);
  config.bins = bins;
  const auto seeds = parse_seeds(seeds_csv);

  const auto result = run_pipeline(config, seeds, thread_cap_from_env());

  fs::create_directories(out);
  std::vector<std::string> outputs;
  for (const auto& run : result.runs) {
    const std::string stem = out + "/seed-" + std::to_string(run.seed);
    {
      auto f = open_out(stem + ".csv");
      write_report_csv(run.reports, config.risks, f);
    }
    write_json_file(to_json(run.heads), stem + ".heads.json");
    write_json_file(to_json(run.vs), stem + ".vs.json");
    outputs.insert(outputs.end(), {stem + ".csv", stem + ".heads.json", stem + ".vs.json"});
    std::cout << "seed " << run.seed << "\n";
    print_human(run.reports, config.risks);
  }
  write_json_file(to_json(result), out + "/summary.json");
  outputs.push_back(out + "/summary.json");
  if (!result.aggregate.empty()) {
    auto f = open_out(out + "/aggregate.csv");
    f << "method,metric,mean,std\n";
    std::cout << "mean ± std over " << seeds.size() << " seeds\n";
    for (const auto& [method, metrics] : result.aggregate) {
      std::cout << method;
      for (const auto& [name, ms] : metrics) {
        f << method << ',' << name << ',' << ms.mean * 100.0 << ',' << ms.std * 100.0 << '\n';
        std::cout << "  " << name << ' ' << std::fixed << std::setprecision(2) << ms.mean * 100.0
                  << "±" << ms.std * 100.0 << std::defaultfloat;
      }
      std::cout << '\n';
    }
    outputs.push_back(out + "/aggregate.csv");
  }
  json cfg = {{"synth", synth_json(config.synth)},
              {"train", to_json(config.train)},
              {"methods", config.methods},
              {"risks", config.risks},
              {"bins", config.bins},
              {"input", h.input},
              {"mode", h.mode},
              {"depth", h.depth}};
  // The run directory gets one manifest covering every file in it.
  RunManifest manifest{"pipeline", cfg, seeds, {}, outputs, kVersion, clock.seconds()};
  manifest.append_to(manifest_path(out));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective prediction: confidence scoring, risk-coverage metrics and ACR heads"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string out;
  std::string risks = "0.01,0.05,0.10,0.20";
  int bins = kDefaultEceBins;
  uint64_t seed = 0;
  std::string seeds = "0,1,2,3,4";
  double fraction_val_g = 0.2;
  std::string posterior;
  std::string test_path;

  SynthOpts synth_opts;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scored dataset");
  synth_opts.add(synth);
  synth->add_option("--seed", seed)->capture_default_str();
  synth->add_option("--out", out, "Record file to write")->required();

  DataOpts eval_data;
  MethodOpts eval_methods;
  auto* eval = app.add_subcommand("eval", "C@R, AURC and ECE per method");
  eval_data.add(eval);
  eval_methods.add(eval, "msp,doctor,mcd");
  eval->add_option("--risks", risks)->capture_default_str();
  eval->add_option("--bins", bins)->capture_default_str();
  eval->add_option("--out", out, "CSV (or .json) report");

  DataOpts sweep_data;
  MethodOpts sweep_methods;
  auto* sweep = app.add_subcommand("sweep", "Risk-coverage curves as CSV");
  sweep_data.add(sweep);
  sweep_methods.add(sweep, "msp");
  sweep->add_option("--out", out, "Prefix; writes <out>.<method>.csv")->required();

  DataOpts vs_data;
  TrainOpts vs_train_opts;
  auto* calibrate = app.add_subcommand("calibrate-vs", "Fit vector scaling on a record file");
  vs_data.add(calibrate);
  vs_train_opts.add(calibrate);
  calibrate->add_option("--seed", seed)->capture_default_str();
  calibrate->add_option("--out", out, "Parameter file (JSON)")->required();

  DataOpts head_data;
  TrainOpts head_train;
  HeadOpts head_opts;
  auto* train = app.add_subcommand("train-heads", "Train the ACR residual and gating heads");
  head_data.add(train);
  head_train.add(train);
  train->add_option("--val", head_opts.val, "Early-stopping records (else held out from --data)");
  train->add_option("--fraction-val-g", head_opts.fraction_val_g)->capture_default_str();
  train->add_option("--input", head_opts.input, "Head input blocks")->capture_default_str();
  train->add_option("--mode", head_opts.mode, "full, no_rrh, no_cgh or fixed_alpha")
      ->capture_default_str();
  train->add_option("--fixed-alpha", head_opts.fixed_alpha)->capture_default_str();
  train->add_option("--depth", head_opts.depth, "Layers per head (1-4)")->capture_default_str();
  train->add_option("--hidden", head_opts.hidden, "Hidden width (default: input width)");
  train->add_flag("--no-standardize", head_opts.no_standardize, "Feed raw inputs to the heads");
  train->add_option("--seed", seed)->capture_default_str();
  train->add_option("--out", out, "Heads file (JSON)")->required();

  DataOpts verify_data;
  MethodOpts verify_methods;
  auto* verify = app.add_subcommand("verify", "Fusion moments, optimal weight and separation");
  verify_data.add(verify);
  verify_methods.add(verify, "acr");
  verify->add_option("--posterior", posterior, "id,s_star side file for the Brier check");
  verify->add_option("--out", out, "Report file (JSON)");

  DataOpts thr_data;
  MethodOpts thr_methods;
  auto* thresholds =
      app.add_subcommand("thresholds", "Pick thresholds on validation, apply them to test");
  thr_data.add(thresholds);
  thr_methods.add(thresholds, "msp");
  thresholds->add_option("--test", test_path, "Test records (else split from --data)");
  thresholds->add_option("--fraction-val-g", fraction_val_g)->capture_default_str();
  thresholds->add_option("--risks", risks)->capture_default_str();
  thresholds->add_option("--seed", seed)->capture_default_str();
  thresholds->add_option("--out", out, "CSV of transfer rows");

  SynthOpts pipe_synth;
  TrainOpts pipe_train;
  HeadOpts pipe_heads;
  std::string pipe_methods = "msp,doctor,mcd,vs,acr";
  auto* pipeline = app.add_subcommand("pipeline", "Synth, split, train and evaluate per seed");
  pipe_synth.add(pipeline);
  pipe_train.add(pipeline);
  pipeline->add_option("--methods", pipe_methods)->capture_default_str();
  pipeline->add_option("--risks", risks)->capture_default_str();
  pipeline->add_option("--bins", bins)->capture_default_str();
  pipeline->add_option("--seeds", seeds)->capture_default_str();
  pipeline->add_option("--input", pipe_heads.input)->capture_default_str();
  pipeline->add_option("--mode", pipe_heads.mode)->capture_default_str();
  pipeline->add_option("--depth", pipe_heads.depth)->capture_default_str();
  pipeline->add_flag("--no-standardize", pipe_heads.no_standardize);
  pipeline->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*synth) return cmd_synth(synth_opts, seed, out);
    if (*eval) return cmd_eval(eval_data, eval_methods, risks, bins, out);
    if (*sweep) return cmd_sweep(sweep_data, sweep_methods, out);
    if (*calibrate) return cmd_calibrate_vs(vs_data, vs_train_opts, seed, out);
    if (*train) return cmd_train_heads(head_data, head_train, head_opts, seed, out);
    if (*verify) return cmd_verify(verify_data, verify_methods, posterior, out);
    if (*thresholds) {
      return cmd_thresholds(thr_data, thr_methods, test_path, risks, fraction_val_g, seed, out);
    }
    if (*pipeline) {
      return cmd_pipeline(pipe_synth, pipe_train, pipe_heads, pipe_methods, risks, bins, seeds,
                          out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::kInfeasible: return kExitInfeasible;
      case ErrorKind::kNumeric: return kExitNumeric;
      case ErrorKind::kValidation: return kExitValidation;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
