// aaupower: synth -> train -> eval -> distill -> report, plus predict.
//
// Every command reads and writes inside one run directory (--out) unless an
// input path is given explicitly, and leaves a <command>_summary.json there.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aaupower/error.hpp"
#include "aaupower/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aaupower;

namespace {

enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kMissingFile = 3,
  kSchema = 4,
  kNoConvergence = 5,
  kSingular = 6,
};

constexpr const char* kExitHelp =
    "Exit codes:\n"
    "  0  success\n"
    "  1  unexpected failure (I/O error, internal error)\n"
    "  2  invalid usage, configuration or input values\n"
    "  3  a required input file does not exist\n"
    "  4  schema mismatch (CSV/JSON layout, feature schema, unknown config field)\n"
    "  5  training diverged or a fit did not converge\n"
    "  6  fit is not identifiable (singular system)\n";

struct MissingFile : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string out = "run";
  std::optional<std::uint64_t> seed;

  std::optional<int> num_aaus, train_days, test_days, iterations, batch_size, load_levels;
  std::optional<double> noise_std, learning_rate;

  std::string data, catalog, estimator, params;
  std::vector<int> types;
  int report_type = 0;
};

Scenario resolve_scenario(const Options& o) {
  Scenario s;
  if (!o.config.empty()) {
    if (!fs::exists(o.config)) throw MissingFile("config file not found: " + o.config);
    std::ifstream in(o.config);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw SchemaError(o.config + ": " + e.what());
    }
    from_json(j, s);
  }
  if (o.seed) s.seed = *o.seed;
  if (o.num_aaus) s.num_aaus = *o.num_aaus;
  if (o.train_days) s.train_days = *o.train_days;
  if (o.test_days) s.test_days = *o.test_days;
  if (o.noise_std) s.noise_std = *o.noise_std;
  if (o.iterations) s.train.iterations = *o.iterations;
  if (o.batch_size) s.train.batch_size = *o.batch_size;
  if (o.learning_rate) s.train.learning_rate = *o.learning_rate;
  if (o.load_levels) s.load_levels = *o.load_levels;
  s.train.seed = s.seed;
  s.validate();
  return s;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json provenance(const std::string& command, const Scenario& s) {
  const std::string canonical = json(s).dump();
  return {{"command", command},
          {"seed", s.seed},
          {"config_hash", hex64(fnv1a64(canonical))},
          {"config", json(s)}};
}

fs::path in_path(const Options& o, const std::string& given, const char* default_name) {
  fs::path p = given.empty() ? fs::path(o.out) / default_name : fs::path(given);
  if (!fs::exists(p)) throw MissingFile("input not found: " + p.string());
  return p;
}

fs::path out_path(const Options& o, const char* name) {
  fs::create_directories(o.out);
  return fs::path(o.out) / name;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Shortest round-trip form, so reruns are byte-identical.
std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

Dataset load_inputs(const Options& o, Catalog* catalog_out) {
  const auto catalog = load_catalog(in_path(o, o.catalog, "catalog.json"));
  auto ds = load_dataset(in_path(o, o.data, "telemetry.csv"), catalog);
  if (catalog_out) *catalog_out = catalog;
  return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const Scenario& s) {
  return split_by_days(ds, s.train_days, s.test_days);
}

FittedParams load_fitted(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  FittedParams out;
  try {
    const auto j = json::parse(in);
    for (const auto& [key, value] : j.at("types").items()) {
      out.emplace(std::stoi(key), value.at("params").get<AnalyticalParams>());
    }
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return out;
}

std::vector<HourlyRecord> of_type(const std::vector<HourlyRecord>& records, int type_id) {
  std::vector<HourlyRecord> out;
  for (const auto& r : records) {
    if (r.type_id == type_id) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_synth(const Options& o) {
  const auto s = resolve_scenario(o);
  const auto catalog = default_catalog();
  const auto ds = generate_synthetic_dataset(catalog, s.num_aaus, s.num_days(), s.seed, s.noise_std);
  save_dataset(ds, out_path(o, "telemetry.csv"));
  save_catalog(catalog, out_path(o, "catalog.json"));

  std::size_t rows = 0;
  for (const auto& r : ds.records) rows += r.carriers.size();
  auto summary = provenance("synth", s);
  summary["records"] = ds.records.size();
  summary["csv_rows"] = rows;
  summary["num_aaus"] = s.num_aaus;
  summary["num_days"] = s.num_days();
  summary["noise_std"] = s.noise_std;
  summary["files"] = {"telemetry.csv", "catalog.json"};
  write_json(out_path(o, "synth_summary.json"), summary);
  std::cout << "synth: " << ds.records.size() << " hourly records (" << rows << " CSV rows) -> " << o.out
            << '\n';
  return kOk;
}

int cmd_train(const Options& o) {
  const auto s = resolve_scenario(o);
  const auto ds = load_inputs(o, nullptr);
  const auto [train, test] = split(ds, s);
  const auto est = train_estimator(train.records, s.train);
  save_estimator(est, out_path(o, "estimator.json"));

  CsvWriter trace(out_path(o, "loss_trace.csv"), {"iteration", "nll"});
  for (std::size_t i = 0; i < est.loss_trace.size(); ++i) trace.row({std::to_string(i), num(est.loss_trace[i])});

  const auto& lt = est.loss_trace;
  const std::size_t tenth = std::max<std::size_t>(1, lt.size() / 10);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < tenth; ++i) {
    first += lt[i] / tenth;
    last += lt[lt.size() - 1 - i] / tenth;
  }
  auto summary = provenance("train", s);
  summary["train_records"] = train.records.size();
  summary["iterations"] = lt.size();
  summary["nll_first_10pct"] = first;
  summary["nll_last_10pct"] = last;
  summary["files"] = {"estimator.json", "loss_trace.csv"};
  write_json(out_path(o, "train_summary.json"), summary);
  std::cout << "train: " << train.records.size() << " records, NLL " << first << " -> " << last << '\n';
  return kOk;
}

int cmd_eval(const Options& o) {
  const auto s = resolve_scenario(o);
  const auto ds = load_inputs(o, nullptr);
  const auto est = load_estimator(in_path(o, o.estimator, "estimator.json"));
  const auto [train, test] = split(ds, s);
  const auto preds = estimate(est, test.records);
  const auto y = measured(test.records);

  CsvWriter csv(out_path(o, "eval_predictions.csv"),
                {"timestamp", "aau_id", "type_id", "measured", "mean", "std", "lo95", "hi95"});
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& r = test.records[i];
    const auto [lo, hi] = predict_interval(preds[i], 0.95);
    csv.row({std::to_string(r.timestamp), std::to_string(r.aau_id), std::to_string(r.type_id), num(y[i]),
             num(preds[i].mean), num(preds[i].std), num(lo), num(hi)});
  }

  auto summary = provenance("eval", s);
  const auto m = evaluate(preds, y);
  summary["test_records"] = test.records.size();
  summary["metrics"] = m;
  json per_type = json::object();
  for (const auto& t : ds.catalog) {
    const auto sub = of_type(test.records, t.type_id);
    if (sub.empty()) continue;
    per_type[std::to_string(t.type_id)] = evaluate(estimate(est, sub), measured(sub));
  }
  summary["metrics_by_type"] = per_type;
  summary["files"] = {"eval_predictions.csv"};
  write_json(out_path(o, "eval_summary.json"), summary);
  std::printf("eval: n=%zu RMSE %.5f MAE %.5f MAPE %.3f%% coverage95 %.4f\n", m.count, m.rmse, m.mae, m.mape,
              m.coverage);
  return kOk;
}

int cmd_distill(const Options& o) {
  const auto s = resolve_scenario(o);
  const auto catalog = load_catalog(in_path(o, o.catalog, "catalog.json"));
  const auto est = load_estimator(in_path(o, o.estimator, "estimator.json"));
  std::vector<int> ids = o.types;
  if (ids.empty()) {
    for (const auto& t : catalog) ids.push_back(t.type_id);
  }
  const auto all = distill_types(catalog, ids, est, s.load_levels, s.fit);

  json types = json::object();
  for (const auto& [id, r] : all.results) {
    types[std::to_string(id)] = {{"fit", r.fit}, {"params", r.fit.params}, {"grid_rows", r.grid.size()}};
  }
  json failures = json::object();
  for (const auto& [id, why] : all.failures) failures[std::to_string(id)] = why;
  write_json(out_path(o, "fitted_params.json"), {{"types", types}, {"failures", failures}});

  auto summary = provenance("distill", s);
  summary["fitted"] = all.results.size();
  summary["failures"] = failures;
  summary["files"] = {"fitted_params.json"};
  write_json(out_path(o, "distill_summary.json"), summary);
  std::cout << "distill: " << all.results.size() << " types fitted, " << all.failures.size() << " failed\n";
  for (const auto& [id, why] : all.failures) std::cerr << "  type " << id << ": " << why << '\n';
  if (all.failures.empty()) return kOk;
  bool any_singular = false;
  for (const auto& [id, why] : all.failures) any_singular |= why.find("rank-deficient") != std::string::npos;
  return any_singular ? kSingular : kNoConvergence;
}

int cmd_predict(const Options& o) {
  const auto s = resolve_scenario(o);
  Catalog catalog;
  const auto ds = load_inputs(o, &catalog);
  const auto est = load_estimator(in_path(o, o.estimator, "estimator.json"));
  const auto preds = estimate(est, ds.records);
  // Analytical column only for types that have a fit; blank otherwise.
  std::optional<FittedParams> fitted;
  const fs::path params_path = o.params.empty() ? fs::path(o.out) / "fitted_params.json" : fs::path(o.params);
  if (!o.params.empty() && !fs::exists(params_path)) throw MissingFile("input not found: " + o.params);
  if (fs::exists(params_path)) fitted = load_fitted(params_path);
  std::optional<std::vector<std::string>> analytic;
  if (fitted) {
    analytic.emplace();
    for (const auto& r : ds.records) {
      const auto it = fitted->find(r.type_id);
      analytic->push_back(it == fitted->end()
                              ? std::string()
                              : num(hourly_energy(it->second, activity_from_record(r, find_type(catalog, r.type_id)))));
    }
  }

  std::vector<std::string> header = {"timestamp", "aau_id", "type_id", "mean", "std", "lo95", "hi95"};
  if (analytic) header.push_back("analytical");
  CsvWriter csv(out_path(o, "predictions.csv"), header);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& r = ds.records[i];
    const auto [lo, hi] = predict_interval(preds[i], 0.95);
    std::vector<std::string> cells = {std::to_string(r.timestamp), std::to_string(r.aau_id),
                                      std::to_string(r.type_id),   num(preds[i].mean),
                                      num(preds[i].std),           num(lo),
                                      num(hi)};
    if (analytic) cells.push_back((*analytic)[i]);
    csv.row(cells);
  }
  auto summary = provenance("predict", s);
  summary["records"] = preds.size();
  summary["analytical"] = analytic.has_value();
  summary["files"] = {"predictions.csv"};
  write_json(out_path(o, "predict_summary.json"), summary);
  std::cout << "predict: " << preds.size() << " records\n";
  return kOk;
}

// Power of the type at one shared PRB load in a few configurations.
AAUState load_state(const AAUCatalogEntry& type, double load, std::size_t carriers_on, double m_fraction) {
  AAUState st;
  for (std::size_t c = 0; c < type.carriers.size(); ++c) {
    st.carriers.push_back({c < carriers_on, load, type.carriers[c].p_max});
  }
  st.m_active = type.full_m_active() * m_fraction;
  return st;
}

HourlyRecord load_record(const AAUCatalogEntry& type, double load, double channel_fraction) {
  HourlyRecord r;
  r.type_id = type.type_id;
  for (const auto& c : type.carriers) r.carriers.push_back({c, load, 0.0});
  r.channel_fraction = channel_fraction;
  return r;
}

int cmd_report(const Options& o) {
  const auto s = resolve_scenario(o);
  Catalog catalog;
  const auto ds = load_inputs(o, &catalog);
  const auto est = load_estimator(in_path(o, o.estimator, "estimator.json"));
  const auto fitted = load_fitted(in_path(o, o.params, "fitted_params.json"));
  const auto& type = find_type(catalog, o.report_type);
  const auto fit_it = fitted.find(type.type_id);
  if (fit_it == fitted.end()) {
    throw InvalidInput("fitted_params has no entry for type " + std::to_string(type.type_id));
  }
  const AnalyticalParams& fp = fit_it->second;

  // Savings at zero load, with the reference parameters and with the fit.
  {
    CsvWriter csv(out_path(o, "savings.csv"), {"mode", "savings_reference", "savings_fitted"});
    auto savings_row = [&](const char* mode, auto tweak) {
      auto ref_state = reference_state(reference_params());
      tweak(ref_state);
      auto fit_state = reference_state(fp);
      tweak(fit_state);
      csv.row({mode, num(savings_fraction(reference_params(), ref_state)), num(savings_fraction(fp, fit_state))});
    };
    savings_row("symbol", [](AAUState& st) { st.symbol_shutdown = true; });
    savings_row("carrier", [](AAUState& st) {
      for (auto& c : st.carriers) c.active = false;
    });
    savings_row("dormancy", [](AAUState& st) { st.dormant = true; });
  }

  // Power versus PRB load for the report type.
  {
    const std::size_t n = type.carriers.size();
    std::vector<HourlyRecord> probes;
    for (int i = 0; i <= 20; ++i) probes.push_back(load_record(type, i / 20.0, 0.0));
    const auto est_pred = estimate(est, probes);
    CsvWriter csv(out_path(o, "load_curve.csv"),
                  {"prb_load", "analytical_all_carriers", "analytical_one_carrier", "analytical_mcpa_half",
                   "analytical_mcpa_quarter", "analytical_symbol_shutdown", "estimator_all_carriers",
                   "estimator_std", "legacy_linear"});
    const double static_power = instantaneous_power(fp, reference_state(fp));
    for (int i = 0; i <= 20; ++i) {
      const double load = i / 20.0;
      auto sym = load_state(type, load, n, 1.0);
      sym.symbol_shutdown = true;
      double tx = 0.0;
      for (const auto& c : type.carriers) tx += c.p_max * load;
      csv.row({num(load), num(instantaneous_power(fp, load_state(type, load, n, 1.0))),
               num(instantaneous_power(fp, load_state(type, load, 1, 1.0))),
               num(instantaneous_power(fp, load_state(type, load, n, 0.5))),
               num(instantaneous_power(fp, load_state(type, load, n, 0.25))),
               num(instantaneous_power(fp, sym)), num(est_pred[i].mean), num(est_pred[i].std),
               num(legacy_linear_model(static_power, 1.0 / fp.eta, tx))});
    }
  }

  // Held-out hours of the report type: daily trace and metric comparison.
  const auto [train, test] = split(ds, s);
  const auto held_out = of_type(test.records, type.type_id);
  if (held_out.empty()) throw InvalidInput("no held-out records of type " + std::to_string(type.type_id));
  const auto est_pred = estimate(est, held_out);
  const auto analytic = analytical_predict(held_out, catalog, fitted);
  const auto y = measured(held_out);
  std::vector<double> legacy;
  const double static_power = instantaneous_power(fp, reference_state(fp));
  for (const auto& r : held_out) {
    double tx = 0.0;
    for (const auto& c : r.carriers) tx += c.config.p_max * c.prb_load;
    legacy.push_back(legacy_linear_model(static_power, 1.0 / fp.eta, tx));
  }

  const int aau = held_out.front().aau_id;
  const std::int64_t day_start = held_out.front().timestamp - held_out.front().timestamp % 24;
  double legacy_day = 0.0, truth_day = 0.0;
  {
    CsvWriter csv(out_path(o, "daily.csv"),
                  {"timestamp", "hour", "measured", "estimator_mean", "lo95", "hi95", "analytical", "legacy_linear"});
    for (std::size_t i = 0; i < held_out.size(); ++i) {
      const auto& r = held_out[i];
      if (r.aau_id != aau) continue;
      const auto [lo, hi] = predict_interval(est_pred[i], 0.95);
      csv.row({std::to_string(r.timestamp), std::to_string(r.timestamp % 24), num(y[i]), num(est_pred[i].mean),
               num(lo), num(hi), num(analytic[i]), num(legacy[i])});
      if (r.timestamp >= day_start && r.timestamp < day_start + 24) {
        legacy_day += legacy[i];
        truth_day += y[i];
      }
    }
  }

  const auto est_metrics = evaluate(est_pred, y);
  const auto an_metrics = evaluate(std::span<const double>(analytic), std::span<const double>(y));
  const auto legacy_metrics = evaluate(std::span<const double>(legacy), std::span<const double>(y));
  {
    CsvWriter csv(out_path(o, "metrics_table.csv"), {"model", "rmse", "mae", "mape_percent"});
    csv.row({"estimator", num(est_metrics.rmse), num(est_metrics.mae), num(est_metrics.mape)});
    csv.row({"analytical", num(an_metrics.rmse), num(an_metrics.mae), num(an_metrics.mape)});
    csv.row({"legacy_linear", num(legacy_metrics.rmse), num(legacy_metrics.mae), num(legacy_metrics.mape)});
  }

  auto summary = provenance("report", s);
  summary["report_type"] = type.type_id;
  summary["held_out_records"] = held_out.size();
  summary["metrics"] = {{"estimator", est_metrics}, {"analytical", an_metrics}, {"legacy_linear", legacy_metrics}};
  summary["analytical_vs_estimator_mape_percent"] = mape(analytic, means(est_pred));
  summary["daily_trace_aau"] = aau;
  summary["legacy_overestimation_ratio"] = truth_day > 0.0 ? legacy_day / truth_day : 0.0;
  summary["files"] = {"savings.csv", "load_curve.csv", "daily.csv", "metrics_table.csv"};
  write_json(out_path(o, "report_summary.json"), summary);
  std::printf("report: type %d, estimator MAPE %.3f%%, analytical MAPE %.3f%%, legacy/measured over one day %.2f\n",
              type.type_id, est_metrics.mape, an_metrics.mape, summary["legacy_overestimation_ratio"].get<double>());
  return kOk;
}

template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const MissingFile& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMissingFile;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kSchema;
  } catch (const ConvergenceError& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const SingularSystem& e) {
    std::cerr << "singular fit: " << e.what() << '\n';
    return kSingular;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AAU power modelling: synthetic telemetry, Gaussian MLP estimator, analytical model distillation"};
  app.footer(kExitHelp);
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config, "Scenario JSON (fields as in <cmd>_summary.json \"config\")");
  app.add_option("--seed", o.seed, "Top-level seed for all random streams");
  app.add_option("--out", o.out, "Run directory for inputs and outputs")->capture_default_str();

  auto scenario_flags = [&](CLI::App* c) {
    c->add_option("--train-days", o.train_days, "Days used for training");
    c->add_option("--test-days", o.test_days, "Held-out days after the training days");
  };
  auto input_flags = [&](CLI::App* c) {
    c->add_option("--data", o.data, "Telemetry CSV [<out>/telemetry.csv]");
    c->add_option("--catalog", o.catalog, "Catalog JSON [<out>/catalog.json]");
  };

  auto* synth = app.add_subcommand("synth", "Generate synthetic telemetry and the AAU catalog");
  synth->add_option("--num-aaus", o.num_aaus, "Number of AAUs");
  synth->add_option("--noise", o.noise_std, "Measurement noise std (normalized power)");
  scenario_flags(synth);

  auto* train = app.add_subcommand("train", "Train the Gaussian MLP estimator on the training days");
  input_flags(train);
  scenario_flags(train);
  train->add_option("--iterations", o.iterations, "Adam iterations");
  train->add_option("--batch-size", o.batch_size, "Mini-batch size");
  train->add_option("--lr", o.learning_rate, "Initial learning rate");

  auto* eval = app.add_subcommand("eval", "Evaluate the estimator on the held-out days");
  input_flags(eval);
  scenario_flags(eval);
  eval->add_option("--estimator", o.estimator, "Estimator JSON [<out>/estimator.json]");

  auto* distill = app.add_subcommand("distill", "Fit the analytical model to the estimator on a state grid");
  distill->add_option("--catalog", o.catalog, "Catalog JSON [<out>/catalog.json]");
  distill->add_option("--estimator", o.estimator, "Estimator JSON [<out>/estimator.json]");
  distill->add_option("--types", o.types, "Type ids to fit [all catalog types]");
  distill->add_option("--load-levels", o.load_levels, "Grid load levels per carrier (>= 3)");

  auto* predict = app.add_subcommand("predict", "Estimator (and analytical, if fitted) power for every record");
  input_flags(predict);
  predict->add_option("--estimator", o.estimator, "Estimator JSON [<out>/estimator.json]");
  predict->add_option("--params", o.params, "Fitted parameters JSON [<out>/fitted_params.json if present]");

  auto* report = app.add_subcommand("report", "Savings table, load curve, daily trace and metric comparison");
  input_flags(report);
  scenario_flags(report);
  report->add_option("--estimator", o.estimator, "Estimator JSON [<out>/estimator.json]");
  report->add_option("--params", o.params, "Fitted parameters JSON [<out>/fitted_params.json]");
  report->add_option("--type", o.report_type, "AAU type to report on")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*synth) return guarded([&] { return cmd_synth(o); });
  if (*train) return guarded([&] { return cmd_train(o); });
  if (*eval) return guarded([&] { return cmd_eval(o); });
  if (*distill) return guarded([&] { return cmd_distill(o); });
  if (*predict) return guarded([&] { return cmd_predict(o); });
  if (*report) return guarded([&] { return cmd_report(o); });
  return kUsage;
}
