#include "tglrn/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>

#include "tglrn/checkpoint.hpp"
#include "tglrn/config.hpp"
#include "tglrn/error.hpp"
#include "tglrn/gradsuite.hpp"
#include "tglrn/metrics.hpp"
#include "tglrn/trainer.hpp"

namespace tglrn::cli {

namespace fs = std::filesystem;

namespace {

struct GradcheckFailed : Error {
  explicit GradcheckFailed(const std::string& m) : Error(ErrorCode::kGradcheck, m) {}
};

std::vector<std::pair<std::string, std::string>> parse_overrides(const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const auto& tok = extras[i];
    if (tok.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + tok + "'");
    const auto eq = tok.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(tok.substr(2, eq - 2), tok.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size()) throw ConfigError("option '" + tok + "' needs a value");
      out.emplace_back(tok.substr(2), extras[++i]);
    }
  }
  return out;
}

void prepare_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir(), ec);
  if (ec) throw InputError("cannot create output directory " + cfg.out_dir().string() + ": " + ec.message());
  std::ofstream echo(cfg.out_dir() / "effective.cfg");
  if (!echo) throw InputError("cannot write " + (cfg.out_dir() / "effective.cfg").string());
  echo << cfg.to_text();
}

struct Dataset {
  std::shared_ptr<const data::FlowSeries> series;
  roadnet::RoadNetwork network;
  std::array<data::WindowedDataset, 3> splits;
  data::SplitBounds bounds;
};

Dataset load_dataset(const RunConfig& cfg, int input_len, int horizon) {
  auto series = std::make_shared<data::FlowSeries>(data::load_flows(cfg.get("flows"), -1, cfg.load_options()));
  const auto edges = roadnet::load_edges(cfg.get("edges"));
  Dataset ds;
  ds.network = roadnet::build_asp(edges, series->nodes());
  ds.bounds = data::split_bounds(series->steps(), cfg.split_ratios());
  ds.splits = data::make_windows(series, input_len, horizon, cfg.split_ratios());
  ds.series = std::move(series);
  return ds;
}

data::Scaler fit_scaler(const Dataset& ds, data::ScalerMode mode) {
  return data::Scaler::fit(ds.series->values.topRows(ds.bounds.train_end), mode);
}

// Model rebuilt from the configuration stored in a checkpoint.
struct LoadedModel {
  RunConfig saved;
  data::Scaler scaler;
  std::unique_ptr<Model> model;
};

LoadedModel load_model(const RunConfig& cfg, const roadnet::RoadNetwork& net) {
  const auto ckpt = checkpoint::load(cfg.checkpoint_path());
  LoadedModel lm;
  try {
    lm.saved.merge_text(ckpt.config_text, "checkpoint");
  } catch (const ConfigError& e) {
    throw FormatError(cfg.checkpoint_path().string() + ": bad embedded config: " + e.what());
  }
  lm.scaler = ckpt.scaler;
  lm.model = std::make_unique<Model>(lm.saved.model_config(net.num_nodes), net);
  checkpoint::restore(*lm.model, ckpt);
  return lm;
}

void print_metrics(std::ostream& out, const std::string& label, const MetricsReport& r) {
  out << std::fixed << std::setprecision(4) << label << "  MAE " << r.overall.mae << "  RMSE " << r.overall.rmse
      << "  MAPE " << r.overall.mape << "%" << std::defaultfloat << '\n';
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const auto result = data::synth_generate(cfg.synth_config());
  roadnet::save_edges(cfg.out_dir() / "edges.csv", result.edges);
  data::save_flows(cfg.out_dir() / "flow.csv", result.flows);
  data::save_planted(cfg.out_dir() / "planted.csv", result.planted);
  out << "synth: " << result.flows.nodes() << " sensors, " << result.flows.steps() << " steps, "
      << result.edges.size() << " edges, " << result.planted.size() << " planted couplings -> "
      << cfg.out_dir().string() << '\n';
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const int input_len = cfg.get_int("input_len");
  const int horizon = cfg.get_int("horizon");
  const auto ds = load_dataset(cfg, input_len, horizon);
  const auto scaler = fit_scaler(ds, cfg.scaler_mode());
  Model model(cfg.model_config(ds.series->nodes()), ds.network);
  const auto history = train(model, ds.splits[0], ds.splits[1], scaler, cfg.train_config());
  checkpoint::save(cfg.checkpoint_path(), model, cfg.to_text(), scaler);
  save_history_csv(cfg.out_dir() / "history.csv", history);
  out << "train: " << history.epochs.size() << " epochs, best epoch " << history.best_epoch << ", val MAE "
      << history.best_val_mae << (history.early_stopped ? " (early stop)" : "") << '\n';
  out << "checkpoint: " << cfg.checkpoint_path().string() << '\n';
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const auto probe = checkpoint::load(cfg.checkpoint_path());
  RunConfig saved;
  saved.merge_text(probe.config_text, "checkpoint");
  const auto ds = load_dataset(cfg, saved.get_int("input_len"), saved.get_int("horizon"));
  const auto lm = load_model(cfg, ds.network);
  const auto& test = ds.splits[2];
  const auto report = evaluate(*lm.model, test, lm.scaler, cfg.eval_options());
  const auto ha = baseline_ha(test, cfg.get_double("mape_threshold"));
  write_metrics_csv(cfg.out_dir() / "metrics.csv", {{"tglrn", report}, {"ha", ha}});
  print_metrics(out, "tglrn", report);
  print_metrics(out, "ha   ", ha);
  return 0;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out) {
  const auto probe = checkpoint::load(cfg.checkpoint_path());
  RunConfig saved;
  saved.merge_text(probe.config_text, "checkpoint");
  const auto ds = load_dataset(cfg, saved.get_int("input_len"), saved.get_int("horizon"));
  const auto lm = load_model(cfg, ds.network);
  const auto& test = ds.splits[2];
  if (test.empty()) throw InputError("predict: test split has no windows");
  const fs::path path = cfg.out_dir() / "predictions.csv";
  std::ofstream csv(path);
  if (!csv) throw InputError("cannot write " + path.string());
  csv << "t,horizon,sensor,value\n" << std::setprecision(17);
  const auto opts = cfg.eval_options();
  for (int w = 0; w < test.size(); ++w) {
    const Matrix pred = predict(*lm.model, test.input(w), lm.scaler, opts, test.start(w));
    for (Eigen::Index h = 0; h < pred.rows(); ++h)
      for (Eigen::Index i = 0; i < pred.cols(); ++i)
        csv << test.start(w) + test.input_len() + h << ',' << h + 1 << ',' << i << ',' << pred(h, i) << '\n';
  }
  out << "predict: " << test.size() << " windows -> " << path.string() << '\n';
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg, std::ostream& out) {
  const auto cases = run_gradient_suite(cfg.get_u64("seed"));
  print_suite(out, cases);
  if (!suite_passed(cases)) throw GradcheckFailed("finite-difference check failed");
  out << "gradcheck: all " << cases.size() << " cases passed\n";
  return 0;
}

int cmd_inspect(const RunConfig& cfg, std::ostream& out) {
  const auto probe = checkpoint::load(cfg.checkpoint_path());
  RunConfig saved;
  saved.merge_text(probe.config_text, "checkpoint");
  const auto ds = load_dataset(cfg, saved.get_int("input_len"), saved.get_int("horizon"));
  const auto lm = load_model(cfg, ds.network);
  const auto& which = cfg.get("inspect_split");
  int idx = -1;
  for (int s = 0; s < 3; ++s)
    if (which == data::split_name(static_cast<data::Split>(s))) idx = s;
  if (idx < 0) throw ConfigError("inspect_split must be train, val or test, got '" + which + "'");
  const auto& split = ds.splits[static_cast<std::size_t>(idx)];
  if (split.empty()) throw InputError(std::string("inspect-graph: ") + which + " split has no windows");
  const int dump = cfg.get_int("inspect_window");
  if (dump < 0 || dump >= split.size())
    throw ConfigError("inspect_window " + std::to_string(dump) + " outside [0, " + std::to_string(split.size()) + ")");

  const int levels = lm.model->config().levels;
  const int window = lm.model->config().window;
  std::vector<std::vector<long>> hist(static_cast<std::size_t>(window), std::vector<long>(levels, 0));
  const fs::path graph_path = cfg.out_dir() / "graph_dump.csv";
  std::ofstream graph(graph_path);
  if (!graph) throw InputError("cannot write " + graph_path.string());
  graph << "t,i,j,weight,hop_i\n" << std::setprecision(17);

  for (int w = 0; w < split.size(); ++w) {
    Tape tape(&lm.model->params());
    ForwardOptions fo;
    const auto result = lm.model->forward(tape, lm.scaler.apply(split.input(w)), fo);
    const auto seq = result.graphs.sequence();
    for (int s = 0; s < window; ++s) {
      const auto& hops = seq.hop_choices[static_cast<std::size_t>(s)];
      for (int h : hops) ++hist[static_cast<std::size_t>(s)][static_cast<std::size_t>(h - 1)];
      if (w != dump) continue;
      const Matrix& a = seq.adjacencies[static_cast<std::size_t>(s)];
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
          if (a(i, j) != 0.0)
            graph << split.start(w) + s << ',' << i << ',' << j << ',' << a(i, j) << ','
                  << hops[static_cast<std::size_t>(i)] << '\n';
    }
  }
  const fs::path hist_path = cfg.out_dir() / "hop_histogram.csv";
  std::ofstream hcsv(hist_path);
  if (!hcsv) throw InputError("cannot write " + hist_path.string());
  hcsv << "step,hop,count\n";
  for (int s = 0; s < window; ++s)
    for (int l = 0; l < levels; ++l) hcsv << s << ',' << l + 1 << ',' << hist[static_cast<std::size_t>(s)][static_cast<std::size_t>(l)] << '\n';
  out << "inspect-graph: " << split.size() << " " << which << " windows -> " << graph_path.string() << ", "
      << hist_path.string() << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic-graph traffic forecaster", "tglrn"};
  app.require_subcommand(1);
  const std::map<std::string, std::string> commands = {
      {"synth", "generate a synthetic road network and flow series"},
      {"train", "train a model and write a checkpoint"},
      {"eval", "evaluate a checkpoint on the test split"},
      {"predict", "write test-split forecasts"},
      {"gradcheck", "run the finite-difference gradient suite"},
      {"inspect-graph", "dump learned adjacencies and hop choices"},
  };
  std::string config_path;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->allow_extras();
    subs[name] = sub;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      for (const auto& k : config_keys()) out << "  --" << k.name << " (default '" << k.default_value << "')  " << k.help << '\n';
      return 0;
    } catch (const CLI::ParseError& e) {
      throw ConfigError(e.what());
    }
    std::string command;
    CLI::App* sub = nullptr;
    for (const auto& [name, s] : subs)
      if (s->parsed()) {
        command = name;
        sub = s;
      }

    RunConfig cfg = config_path.empty() ? RunConfig() : RunConfig::from_file(config_path);
    for (const auto& [key, value] : parse_overrides(sub->remaining())) cfg.set(key, value);
    prepare_out_dir(cfg);

    if (command == "synth") return cmd_synth(cfg, out);
    if (command == "train") return cmd_train(cfg, out);
    if (command == "eval") return cmd_eval(cfg, out);
    if (command == "predict") return cmd_predict(cfg, out);
    if (command == "gradcheck") return cmd_gradcheck(cfg, out);
    return cmd_inspect(cfg, out);
  } catch (const Error& e) {
    err << "ERROR:" << static_cast<int>(e.code()) << ": " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "ERROR:" << static_cast<int>(ErrorCode::kData) << ": " << e.what() << '\n';
    return static_cast<int>(ErrorCode::kData);
  } catch (const std::exception& e) {
    err << "ERROR:1: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace tglrn::cli
