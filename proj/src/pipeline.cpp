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

#include "selconf/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "selconf/confidence.hpp"

namespace selconf {

ConfidenceTable method_table(const std::string& method, const EvalSet& set,
                             const MethodInputs& inputs) {
  if (method == "msp") return msp_table(set);
  if (method == "doctor") return doctor_table(set);
  if (method == "mcd") return mcd_table(set);
  if (method == "oracle") return oracle_table(set);
  if (method == "vs") {
    if (!inputs.vs) fail("method 'vs' needs vector-scaling parameters (--vs-params)");
    return vs_table(set, *inputs.vs);
  }
  if (method == "acr") {
    if (!inputs.heads) fail("method 'acr' needs a heads file (--heads)");
    return acr_table(*inputs.heads, set);
  }
  fail("unknown method '" + method + "'");
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
  }
  return out;
}

std::vector<double> parse_risks(const std::string& csv) {
  std::vector<double> out;
  for (const auto& s : split_list(csv)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      fail("invalid risk '" + s + "'");
    }
    if (!(out.back() >= 0.0 && out.back() < 1.0)) fail("risk '" + s + "' outside [0,1)");
  }
  return out;
}

void write_report_csv(std::span<const MetricsReport> reports, std::span<const double> risks,
                      std::ostream& out, std::optional<int> decimals) {
  out << "method";
  for (double r : risks) out << ',' << risk_column(r);
  out << ",aurc,ece,accuracy,n\n";
  std::ostringstream fmt;
  if (decimals) {
    fmt << std::fixed << std::setprecision(*decimals);
  } else {
    fmt << std::setprecision(std::numeric_limits<double>::max_digits10);
  }
  for (const auto& rep : reports) {
    auto pct = [&](double v) {
      std::ostringstream os;
      os.copyfmt(fmt);
      os << v * 100.0;
      return os.str();
    };
    out << rep.method_name;
    for (double r : risks) {
      const auto it = rep.c_at_r.find(r);
      out << ',' << (it == rep.c_at_r.end() ? std::string() : pct(it->second));
    }
    out << ',' << pct(rep.aurc) << ',' << pct(rep.ece) << ',' << pct(rep.accuracy) << ','
        << rep.n << '\n';
  }
}

void write_curve_csv(const RcCurve& curve, std::ostream& out) {
  out << "gamma,coverage,risk\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& p : curve.points) out << p.gamma << ',' << p.coverage << ',' << p.risk << '\n';
}

RcCurve read_curve_csv(std::istream& in) {
  RcCurve curve;
  std::string line;
  std::getline(in, line);
  if (line != "gamma,coverage,risk") fail("curve CSV lacks the gamma,coverage,risk header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_list(line);
    if (fields.size() != 3) fail("malformed curve row '" + line + "'");
    RcPoint p{};
    try {
      p.gamma = fields[0] == "-inf" ? -std::numeric_limits<double>::infinity() : std::stod(fields[0]);
      p.coverage = std::stod(fields[1]);
      p.risk = std::stod(fields[2]);
    } catch (const std::exception&) {
      fail("malformed curve row '" + line + "'");
    }
    curve.points.push_back(p);
  }
  return curve;
}

namespace {

json separation_json(const ConfidenceTable& t) {
  const auto s = separation_report(t);
  return {{"method", t.method_name()}, {"cohens_d", s.cohens_d}, {"wasserstein", s.wasserstein},
          {"kl", s.kl},   {"aurc", s.aurc * 100.0},  {"kl_bins", s.kl_bins},
          {"kl_eps", s.kl_eps}, {"kl_direction", "correct||incorrect"}};
}

}  // namespace

json verify_report(const ConfidenceTable& msp, const ConfidenceTable& rrh,
                   const ConfidenceTable* acr, const PosteriorTable* posterior) {
  const ErrorMoments m = error_moments(msp, rrh);
  const FusionCondition cond = fusion_condition(m);
  json out = {{"moments",
               {{"sigma2_m", m.sigma2_m}, {"sigma2_r", m.sigma2_r}, {"sigma_mr", m.sigma_mr},
                {"n", m.n}}},
              {"fusion_condition", {{"holds", cond.holds}, {"margin", cond.margin}}},
              {"j_endpoints", {{"j0", j_alpha(m, 0.0)}, {"j1", j_alpha(m, 1.0)}}}};
  try {
    const double a = alpha_star(m);
    out["alpha_star"] = a;
    if (a >= 0.0 && a <= 1.0) out["j_alpha_star"] = j_alpha(m, a);
  } catch (const Error&) {
    out["alpha_star"] = nullptr;
  }
  const auto fixed = best_fixed_lambda(msp, rrh, acr);
  out["best_fixed_lambda"] = {{"lambda", fixed.lambda},
                              {"mse", fixed.mse},
                              {"closed_form", fixed.closed_form},
                              {"mse_closed_form", fixed.mse_closed_form}};
  if (fixed.adaptive_mse) out["best_fixed_lambda"]["adaptive_mse"] = *fixed.adaptive_mse;

  json separation = json::array();
  std::vector<const ConfidenceTable*> tables{&msp, &rrh};
  if (acr) tables.push_back(acr);
  for (const auto* t : tables) {
    try {
      separation.push_back(separation_json(*t));
    } catch (const Error& e) {
      separation.push_back({{"method", t->method_name()}, {"error", e.what()}});
    }
  }
  out["separation"] = separation;
  if (posterior) {
    json brier = json::array();
    for (const auto* t : tables) {
      const auto d = brier_decomposition_check(*t, *posterior);
      const auto g = bayes_gap(*t, *posterior);
      brier.push_back({{"method", t->method_name()},
                       {"lhs", d.lhs},
                       {"refinement", d.refinement},
                       {"irreducible", d.irreducible},
                       {"residual", d.residual},
                       {"mse_to_bayes", g.mse_to_bayes},
                       {"mean_abs_to_bayes", g.mean_abs}});
    }
    out["brier"] = brier;
  }
  return out;
}

const MetricsReport& SeedRun::report(const std::string& method) const {
  for (const auto& r : reports) {
    if (r.method_name == method) return r;
  }
  fail("no report for method '" + method + "'");
}

SeedRun run_seed(const PipelineConfig& config, uint64_t seed) {
  SeedRun run;
  run.seed = seed;
  SynthConfig sc = config.synth;
  sc.seed = seed;
  TrainConfig tc = config.train;
  tc.seed = seed;

  const SynthData data = staged("synth", [&] { return generate(sc); });
  const SplitRoles roles = staged("split", [&] { return split_protocol(data.set, seed); });
  run.n_val_f = roles.val_f.size();
  run.n_val_g = roles.val_g.size();
  run.n_test = roles.test.size();

  const bool want_vs =
      std::find(config.methods.begin(), config.methods.end(), "vs") != config.methods.end();
  if (want_vs) run.vs = staged("vs_train", [&] { return vs_train(roles.val_f, tc).params; });
  const auto trained =
      staged("acr_train", [&] { return acr_train(roles.val_f, roles.val_g, tc, config.acr); });
  run.heads = trained.heads;
  run.best_epoch = trained.best_epoch;

  staged("eval", [&] {
    MethodInputs inputs{&run.vs, &run.heads};
    for (const auto& m : config.methods) {
      run.reports.push_back(
          evaluate(method_table(m, roles.test, inputs), config.risks, config.bins));
    }
    run.reports.push_back(oracle_metrics(oracle_table(roles.test).correctness(), config.risks));
    return 0;
  });

  staged("verify", [&] {
    const auto posterior = data.posterior_table();
    const auto msp = msp_table(roles.test);
    const auto rrh = rrh_table(run.heads, roles.test);
    const auto acr = acr_table(run.heads, roles.test);
    run.moments = error_moments(msp, rrh);
    run.condition = fusion_condition(run.moments);
    try {
      run.alpha_star = alpha_star(run.moments);
    } catch (const Error&) {
      run.alpha_star.reset();
    }
    run.alpha = alpha_stats(run.heads, roles.test);
    run.fixed_lambda = best_fixed_lambda(msp, rrh, &acr);
    run.gap_msp = bayes_gap(msp, posterior);
    run.gap_acr = bayes_gap(acr, posterior);
    return 0;
  });
  return run;
}

int thread_cap_from_env() {
  if (const char* env = std::getenv("SELCONF_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v >= 1) return v;
    } catch (const std::exception&) {
    }
    fail("SELCONF_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

PipelineResult run_pipeline(const PipelineConfig& config, std::span<const uint64_t> seeds,
                            int max_threads) {
  if (seeds.empty()) fail("pipeline needs at least one seed");
  PipelineResult result;
  result.runs.resize(seeds.size());
  const std::size_t cap = static_cast<std::size_t>(std::max(1, max_threads));
  for (std::size_t start = 0; start < seeds.size(); start += cap) {
    const std::size_t stop = std::min(seeds.size(), start + cap);
    if (stop - start == 1) {
      result.runs[start] = run_seed(config, seeds[start]);
      continue;
    }
    std::vector<std::future<SeedRun>> jobs;
    for (std::size_t i = start; i < stop; ++i) {
      jobs.push_back(std::async(std::launch::async, [&, i] { return run_seed(config, seeds[i]); }));
    }
    for (std::size_t i = start; i < stop; ++i) result.runs[i] = jobs[i - start].get();
  }
  if (result.runs.size() >= 2) {
    for (std::size_t m = 0; m < result.runs.front().reports.size(); ++m) {
      std::vector<MetricsReport> per_seed;
      for (const auto& run : result.runs) per_seed.push_back(run.reports[m]);
      result.aggregate[per_seed.front().method_name] = aggregate_seeds(per_seed);
    }
  }
  return result;
}

json to_json(const SeedRun& run) {
  json reports = json::array();
  for (const auto& r : run.reports) reports.push_back(to_json(r));
  json out = {
      {"seed", run.seed},
      {"sizes", {{"val_f", run.n_val_f}, {"val_g", run.n_val_g}, {"test", run.n_test}}},
      {"reports", reports},
      {"best_epoch", run.best_epoch},
      {"moments",
       {{"sigma2_m", run.moments.sigma2_m},
        {"sigma2_r", run.moments.sigma2_r},
        {"sigma_mr", run.moments.sigma_mr}}},
      {"fusion_condition", {{"holds", run.condition.holds}, {"margin", run.condition.margin}}},
      {"alpha",
       {{"mean", run.alpha.mean},
        {"variance", run.alpha.variance},
        {"frac_below_0.01", run.alpha.frac_below_001},
        {"frac_above_0.99", run.alpha.frac_above_099},
        {"histogram", run.alpha.histogram}}},
      {"best_fixed_lambda",
       {{"lambda", run.fixed_lambda.lambda},
        {"mse", run.fixed_lambda.mse},
        {"closed_form", run.fixed_lambda.closed_form},
        {"adaptive_mse", run.fixed_lambda.adaptive_mse.value_or(-1.0)}}},
      {"bayes_gap",
       {{"msp", {{"mse", run.gap_msp.mse_to_bayes}, {"mean_abs", run.gap_msp.mean_abs}}},
        {"acr", {{"mse", run.gap_acr.mse_to_bayes}, {"mean_abs", run.gap_acr.mean_abs}}}}}};
  out["alpha_star"] = run.alpha_star ? json(*run.alpha_star) : json(nullptr);
  return out;
}

json to_json(const PipelineResult& result) {
  json runs = json::array();
  for (const auto& r : result.runs) runs.push_back(to_json(r));
  json agg = json::object();
  for (const auto& [method, metrics] : result.aggregate) {
    for (const auto& [name, ms] : metrics) {
      agg[method][name] = {{"mean", ms.mean * 100.0}, {"std", ms.std * 100.0}};
    }
  }
  return {{"runs", runs}, {"aggregate_percent", agg}};
}

json RunManifest::to_json() const {
  return {{"command", command},   {"config", config},   {"seeds", seeds},
          {"inputs", inputs},     {"outputs", outputs}, {"version", version},
          {"wall_clock_seconds", wall_clock_seconds}};
}

void RunManifest::append_to(const std::string& path) const {
  std::ofstream out(path, std::ios::app);
  if (!out) fail("cannot append manifest '" + path + "'");
  out << to_json().dump() << '\n';
}

}  // namespace selconf
