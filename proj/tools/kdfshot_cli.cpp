// Command-line front end: gen-data, extract-features, pretrain, adapt,
// evaluate, sweep-shots. Exit codes: 0 ok, 2 config error, 3 data-format
// error, 4 numeric failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdfshot/dataset.hpp"
#include "kdfshot/errors.hpp"
#include "kdfshot/features.hpp"
#include "kdfshot/kdf.hpp"
#include "kdfshot/metrics.hpp"
#include "kdfshot/mutualshot.hpp"
#include "kdfshot/rng.hpp"

using json = nlohmann::json;
using namespace kdfshot;

namespace {

enum class OptKind { Str, Int, Num, Bool };

struct Option {
  const char* name;
  OptKind kind;
  json def;
  bool required = false;
};

// Resolves defaults < --config file < command-line flags, in that order, and
// keeps the result as one JSON object so every artifact can embed it.
json resolve_options(const std::vector<Option>& opts, const std::vector<std::string>& argv) {
  json cfg = json::object();
  std::map<std::string, const Option*> by_name;
  for (const auto& o : opts) {
    cfg[o.name] = o.def;
    by_name[o.name] = &o;
  }

  auto apply = [&](const std::string& name, const json& v, const char* origin) {
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw ConfigError(std::string("unknown option '") + name + "' (" + origin + ")");
    const Option& o = *it->second;
    try {
      switch (o.kind) {
        case OptKind::Str:
          cfg[name] = v.is_string() ? v.get<std::string>() : v.dump();
          break;
        case OptKind::Int:
          cfg[name] = v.is_string() ? static_cast<int64_t>(std::stoll(v.get<std::string>()))
                                    : v.get<int64_t>();
          break;
        case OptKind::Num:
          cfg[name] = v.is_string() ? std::stod(v.get<std::string>()) : v.get<double>();
          break;
        case OptKind::Bool:
          cfg[name] = v.is_string() ? (v.get<std::string>() == "true" || v == "1")
                                    : v.get<bool>();
          break;
      }
    } catch (const json::exception&) {
      throw ConfigError("bad value for option '" + name + "'");
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad value for option '" + name + "'");
    } catch (const std::out_of_range&) {
      throw ConfigError("bad value for option '" + name + "'");
    }
  };

  // Config file pass.
  for (size_t i = 0; i < argv.size(); ++i) {
    if (argv[i] == "--config") {
      if (i + 1 >= argv.size()) throw ConfigError("--config needs a file path");
      std::ifstream in(argv[i + 1]);
      if (!in) throw DataFormatError("cannot open config file: " + argv[i + 1]);
      json file_cfg;
      try {
        in >> file_cfg;
      } catch (const json::exception& e) {
        throw DataFormatError(std::string("bad config JSON: ") + e.what());
      }
      if (!file_cfg.is_object()) throw DataFormatError("config file must hold a JSON object");
      for (auto& [k, v] : file_cfg.items()) apply(k, v, "config file");
    }
  }

  // Flag pass overrides.
  for (size_t i = 0; i < argv.size(); ++i) {
    const std::string& a = argv[i];
    if (a == "--config") {
      ++i;
      continue;
    }
    if (a.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + a + "'");
    std::string name = a.substr(2);
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ConfigError("unknown flag '--" + name + "'");
    if (it->second->kind == OptKind::Bool) {
      cfg[name] = true;
    } else {
      if (i + 1 >= argv.size()) throw ConfigError("flag '--" + name + "' needs a value");
      apply(name, json(argv[++i]), "flag");
    }
  }

  for (const auto& o : opts)
    if (o.required && cfg[o.name].get<std::string>().empty())
      throw ConfigError(std::string("missing required flag '--") + o.name + "'");
  return cfg;
}

std::string dump_config(const json& cfg, const std::string& command) {
  json j = cfg;
  j["command"] = command;
  return j.dump();
}

void log_config(const json& cfg, const std::string& command) {
  std::cerr << "[" << command << "] config " << dump_config(cfg, command) << "\n";
}

json metrics_json(const MetricsReport& r) {
  return json{{"acc", r.acc},
              {"bca", r.bca},
              {"f1_weighted", r.f1_weighted},
              {"n", r.n},
              {"confusion", r.confusion}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw DataFormatError("write failed: " + path);
}

int cmd_gen_data(const std::vector<std::string>& args) {
  json cfg = resolve_options(
      {{"out", OptKind::Str, "", true},
       {"seed", OptKind::Int, 1},
       {"classes", OptKind::Int, 4},
       {"channels", OptKind::Int, 8},
       {"samples", OptKind::Int, 256},
       {"fs", OptKind::Num, 256.0},
       {"n-per-class", OptKind::Int, 60},
       {"n-val-per-class", OptKind::Int, 30},
       {"subjects", OptKind::Int, 12},
       {"shift-amplitude", OptKind::Num, default_shift().amplitude_scale},
       {"shift-noise", OptKind::Num, default_shift().noise_sigma},
       {"shift-freq", OptKind::Num, default_shift().freq_jitter_hz},
       {"shift-drop", OptKind::Num, default_shift().channel_drop_p}},
      args);
  log_config(cfg, "gen-data");

  SynthConfig sc;
  sc.K = cfg["classes"].get<uint32_t>();
  sc.C = cfg["channels"].get<uint32_t>();
  sc.N = cfg["samples"].get<uint32_t>();
  sc.fs = cfg["fs"].get<double>();
  sc.n_subjects = cfg["subjects"].get<uint32_t>();
  ShiftSpec none;
  ShiftSpec shift;
  shift.amplitude_scale = cfg["shift-amplitude"].get<double>();
  shift.noise_sigma = cfg["shift-noise"].get<double>();
  shift.freq_jitter_hz = cfg["shift-freq"].get<double>();
  shift.channel_drop_p = cfg["shift-drop"].get<double>();
  uint64_t seed = cfg["seed"].get<uint64_t>();

  std::filesystem::path dir(cfg["out"].get<std::string>());
  std::filesystem::create_directories(dir);
  uint32_t n_train = cfg["n-per-class"].get<uint32_t>();
  uint32_t n_val = cfg["n-val-per-class"].get<uint32_t>();

  // Both domains are the same generator draw (shared topographies, subjects
  // and trial content); the target pool differs only by the recording-shift
  // transform, like a re-recorded session. Each pool is split per class into
  // train and eval parts, so no window appears in both parts of a domain.
  auto write_part = [&](const char* name, const Dataset& ds) {
    json meta = cfg;
    meta["artifact"] = name;
    std::string path = (dir / (std::string(name) + ".eegw")).string();
    save_dataset(path, ds, dump_config(meta, "gen-data"));
    std::cerr << "[gen-data] wrote " << path << " (" << ds.size() << " windows)\n";
  };
  SynthConfig pool_sc = sc;
  pool_sc.n_per_class = n_train + n_val;
  uint64_t pool_seed = derive_seed(seed, "pool");
  auto [strain, sval] = split_holdout(generate_synthetic(pool_sc, none, pool_seed), n_val);
  auto [ttrain, ttest] = split_holdout(generate_synthetic(pool_sc, shift, pool_seed), n_val);
  write_part("source_train", strain);
  write_part("source_val", sval);
  write_part("target_train", ttrain);
  write_part("target_test", ttest);
  return 0;
}

int cmd_extract_features(const std::vector<std::string>& args) {
  json cfg = resolve_options(
      {{"data", OptKind::Str, "", true}, {"out", OptKind::Str, "", true}}, args);
  log_config(cfg, "extract-features");
  Dataset ds = load_dataset(cfg["data"].get<std::string>());
  FeatureMatrix fm = extract_features_all(ds);
  save_feature_csv(cfg["out"].get<std::string>(), ds, fm, dump_config(cfg, "extract-features"));
  std::cerr << "[extract-features] wrote " << cfg["out"].get<std::string>() << " (" << fm.n_rows
            << " x " << fm.n_cols << ")\n";
  return 0;
}

int cmd_pretrain(const std::vector<std::string>& args) {
  json cfg = resolve_options({{"train", OptKind::Str, "", true},
                              {"val", OptKind::Str, "", true},
                              {"out", OptKind::Str, "", true},
                              {"log", OptKind::Str, ""},
                              {"epochs", OptKind::Int, 50},
                              {"batch", OptKind::Int, 32},
                              {"lr-sdt", OptKind::Num, 1e-2},
                              {"lr-vit", OptKind::Num, 1e-3},
                              {"weight-decay", OptKind::Num, 1e-4},
                              {"alpha", OptKind::Num, 1.0},
                              {"sdt-depth", OptKind::Int, 4},
                              {"sdt-beta", OptKind::Num, 1.0},
                              {"sdt-balance-penalty", OptKind::Num, 0.0},
                              {"patch-len", OptKind::Int, 32},
                              {"d-model", OptKind::Int, 64},
                              {"n-layers", OptKind::Int, 4},
                              {"n-heads", OptKind::Int, 4},
                              {"d-ff", OptKind::Int, 128},
                              {"patience", OptKind::Int, 10},
                              {"jsd-joint-grad", OptKind::Bool, false},
                              {"seed", OptKind::Int, 1}},
                             args);
  log_config(cfg, "pretrain");
  Dataset train = load_dataset(cfg["train"].get<std::string>());
  Dataset val = load_dataset(cfg["val"].get<std::string>());

  KdfModelConfig mc;
  mc.sdt_depth = cfg["sdt-depth"].get<int>();
  mc.sdt_beta = cfg["sdt-beta"].get<double>();
  mc.vit.patch_len = cfg["patch-len"].get<int>();
  mc.vit.d_model = cfg["d-model"].get<int>();
  mc.vit.n_layers = cfg["n-layers"].get<int>();
  mc.vit.n_heads = cfg["n-heads"].get<int>();
  mc.vit.d_ff = cfg["d-ff"].get<int>();
  mc.alpha = cfg["alpha"].get<double>();
  mc.seed = cfg["seed"].get<uint64_t>();
  ModelBundle bundle = init_bundle(train, mc);

  KdfTrainConfig tc;
  tc.epochs = cfg["epochs"].get<int>();
  tc.batch_size = cfg["batch"].get<int>();
  tc.lr_sdt = cfg["lr-sdt"].get<double>();
  tc.lr_vit = cfg["lr-vit"].get<double>();
  tc.weight_decay = cfg["weight-decay"].get<double>();
  tc.alpha = mc.alpha;
  tc.joint_grad = cfg["jsd-joint-grad"].get<bool>();
  tc.balance_penalty = cfg["sdt-balance-penalty"].get<double>();
  tc.patience = cfg["patience"].get<int>();
  tc.seed = mc.seed;

  std::vector<KdfEpochRow> log = kdf_train(bundle, train, val, tc);
  std::string meta = dump_config(cfg, "pretrain");
  save_bundle(cfg["out"].get<std::string>(), bundle, meta);
  std::string log_path = cfg["log"].get<std::string>();
  if (log_path.empty()) log_path = cfg["out"].get<std::string>() + ".log.csv";
  save_kdf_log(log_path, log, meta);
  std::cerr << "[pretrain] " << log.size() << " epochs, best bundle -> "
            << cfg["out"].get<std::string>() << "\n";
  return 0;
}

int cmd_adapt(const std::vector<std::string>& args) {
  // Deliberately no source-dataset flag: adaptation sees the bundle and the
  // target data only.
  json cfg = resolve_options({{"bundle", OptKind::Str, "", true},
                              {"target", OptKind::Str, "", true},
                              {"out", OptKind::Str, "", true},
                              {"log", OptKind::Str, ""},
                              {"shots", OptKind::Int, 1},
                              {"epochs", OptKind::Int, 30},
                              {"batch", OptKind::Int, 32},
                              {"lr-sdt", OptKind::Num, 1e-3},
                              {"lr-vit", OptKind::Num, 1e-4},
                              {"weight-decay", OptKind::Num, 1e-4},
                              {"alpha", OptKind::Num, -1.0},
                              {"no-pseudo", OptKind::Bool, false},
                              {"no-consistency", OptKind::Bool, false},
                              {"no-ssl", OptKind::Bool, false},
                              {"jsd-joint-grad", OptKind::Bool, false},
                              {"sdt-rep", OptKind::Str, "gates"},
                              {"seed", OptKind::Int, 1}},
                             args);
  log_config(cfg, "adapt");
  ModelBundle bundle = load_bundle(cfg["bundle"].get<std::string>());
  Dataset target = load_dataset(cfg["target"].get<std::string>());

  AdaptConfig ac;
  ac.epochs = cfg["epochs"].get<int>();
  ac.batch_size = cfg["batch"].get<int>();
  ac.lr_sdt = cfg["lr-sdt"].get<double>();
  ac.lr_vit = cfg["lr-vit"].get<double>();
  ac.weight_decay = cfg["weight-decay"].get<double>();
  ac.alpha = cfg["alpha"].get<double>() < 0.0 ? bundle.alpha : cfg["alpha"].get<double>();
  ac.shots = cfg["shots"].get<int>();
  ac.no_pseudo = cfg["no-pseudo"].get<bool>();
  ac.no_consistency = cfg["no-consistency"].get<bool>();
  ac.no_ssl = cfg["no-ssl"].get<bool>();
  ac.joint_grad = cfg["jsd-joint-grad"].get<bool>();
  ac.sdt_rep = cfg["sdt-rep"].get<std::string>();
  ac.seed = cfg["seed"].get<uint64_t>();

  std::vector<AdaptLogRow> log = adapt(bundle, make_target(target), ac);
  std::string meta = dump_config(cfg, "adapt");
  save_bundle(cfg["out"].get<std::string>(), bundle, meta);
  std::string log_path = cfg["log"].get<std::string>();
  if (log_path.empty()) log_path = cfg["out"].get<std::string>() + ".log.csv";
  save_adapt_log(log_path, log, meta);
  std::cerr << "[adapt] " << log.size() << " epochs -> " << cfg["out"].get<std::string>() << "\n";
  return 0;
}

int cmd_evaluate(const std::vector<std::string>& args) {
  json cfg = resolve_options({{"bundle", OptKind::Str, ""},
                              {"data", OptKind::Str, "", true},
                              {"out", OptKind::Str, "", true},
                              {"cv", OptKind::Bool, false},
                              {"cells", OptKind::Str, ""},
                              {"folds", OptKind::Int, 3},
                              {"repeats", OptKind::Int, 2},
                              {"epochs", OptKind::Int, 50},
                              {"batch", OptKind::Int, 32},
                              {"lr-sdt", OptKind::Num, 1e-2},
                              {"lr-vit", OptKind::Num, 1e-3},
                              {"weight-decay", OptKind::Num, 1e-4},
                              {"alpha", OptKind::Num, 1.0},
                              {"sdt-depth", OptKind::Int, 4},
                              {"sdt-beta", OptKind::Num, 1.0},
                              {"patch-len", OptKind::Int, 32},
                              {"d-model", OptKind::Int, 64},
                              {"n-layers", OptKind::Int, 4},
                              {"n-heads", OptKind::Int, 4},
                              {"d-ff", OptKind::Int, 128},
                              {"patience", OptKind::Int, 10},
                              {"seed", OptKind::Int, 1}},
                             args);
  log_config(cfg, "evaluate");
  Dataset ds = load_dataset(cfg["data"].get<std::string>());
  json report;
  report["config"] = json::parse(dump_config(cfg, "evaluate"));

  if (cfg["cv"].get<bool>()) {
    CvConfig cc;
    cc.folds = cfg["folds"].get<int>();
    cc.repeats = cfg["repeats"].get<int>();
    cc.model.sdt_depth = cfg["sdt-depth"].get<int>();
    cc.model.sdt_beta = cfg["sdt-beta"].get<double>();
    cc.model.vit.patch_len = cfg["patch-len"].get<int>();
    cc.model.vit.d_model = cfg["d-model"].get<int>();
    cc.model.vit.n_layers = cfg["n-layers"].get<int>();
    cc.model.vit.n_heads = cfg["n-heads"].get<int>();
    cc.model.vit.d_ff = cfg["d-ff"].get<int>();
    cc.model.alpha = cfg["alpha"].get<double>();
    cc.train.epochs = cfg["epochs"].get<int>();
    cc.train.batch_size = cfg["batch"].get<int>();
    cc.train.lr_sdt = cfg["lr-sdt"].get<double>();
    cc.train.lr_vit = cfg["lr-vit"].get<double>();
    cc.train.weight_decay = cfg["weight-decay"].get<double>();
    cc.train.alpha = cc.model.alpha;
    cc.train.patience = cfg["patience"].get<int>();
    std::vector<CvCell> cells = cv_run(ds, cc, cfg["seed"].get<uint64_t>());

    json jcells = json::array();
    std::map<std::string, std::vector<double>> agg;
    for (const auto& c : cells) {
      jcells.push_back(json{{"repeat", c.repeat},
                            {"fold", c.fold},
                            {"sdt", metrics_json(c.sdt)},
                            {"vit", metrics_json(c.vit)}});
      agg["sdt.acc"].push_back(c.sdt.acc);
      agg["sdt.bca"].push_back(c.sdt.bca);
      agg["sdt.f1_weighted"].push_back(c.sdt.f1_weighted);
      agg["vit.acc"].push_back(c.vit.acc);
      agg["vit.bca"].push_back(c.vit.bca);
      agg["vit.f1_weighted"].push_back(c.vit.f1_weighted);
    }
    report["cells"] = jcells;
    json jagg;
    for (const auto& [key, vals] : agg) {
      MeanStd ms = mean_std(vals);
      auto dot = key.find('.');
      jagg[key.substr(0, dot)][key.substr(dot + 1)] = json{{"mean", ms.mean}, {"std", ms.stdev}};
    }
    report["aggregate"] = jagg;

    std::string cells_path = cfg["cells"].get<std::string>();
    if (!cells_path.empty()) {
      std::ofstream out(cells_path);
      if (!out) throw DataFormatError("cannot open for writing: " + cells_path);
      out << "# " << dump_config(cfg, "evaluate") << "\n";
      out << "repeat,fold,model,acc,bca,f1_weighted\n";
      char buf[160];
      for (const auto& c : cells) {
        std::snprintf(buf, sizeof(buf), "%d,%d,sdt,%.9g,%.9g,%.9g\n", c.repeat, c.fold, c.sdt.acc,
                      c.sdt.bca, c.sdt.f1_weighted);
        out << buf;
        std::snprintf(buf, sizeof(buf), "%d,%d,vit,%.9g,%.9g,%.9g\n", c.repeat, c.fold, c.vit.acc,
                      c.vit.bca, c.vit.f1_weighted);
        out << buf;
      }
    }
  } else {
    if (cfg["bundle"].get<std::string>().empty())
      throw ConfigError("evaluate needs --bundle (or --cv)");
    ModelBundle bundle = load_bundle(cfg["bundle"].get<std::string>());
    BundleEval ev = evaluate_bundle(bundle, ds);
    report["sdt"] = metrics_json(ev.sdt);
    report["vit"] = metrics_json(ev.vit);
  }
  write_json(cfg["out"].get<std::string>(), report);
  std::cerr << "[evaluate] wrote " << cfg["out"].get<std::string>() << "\n";
  return 0;
}

int cmd_sweep_shots(const std::vector<std::string>& args) {
  json cfg = resolve_options({{"bundle", OptKind::Str, "", true},
                              {"target", OptKind::Str, "", true},
                              {"test", OptKind::Str, "", true},
                              {"out", OptKind::Str, "", true},
                              {"shots", OptKind::Str, "1,3,5"},
                              {"repeats", OptKind::Int, 3},
                              {"epochs", OptKind::Int, 30},
                              {"batch", OptKind::Int, 32},
                              {"lr-sdt", OptKind::Num, 1e-3},
                              {"lr-vit", OptKind::Num, 1e-4},
                              {"weight-decay", OptKind::Num, 1e-4},
                              {"alpha", OptKind::Num, -1.0},
                              {"jsd-joint-grad", OptKind::Bool, false},
                              {"sdt-rep", OptKind::Str, "gates"},
                              {"seed", OptKind::Int, 1}},
                             args);
  log_config(cfg, "sweep-shots");
  Dataset target = load_dataset(cfg["target"].get<std::string>());
  Dataset test = load_dataset(cfg["test"].get<std::string>());

  std::vector<int> shot_values;
  {
    std::string list = cfg["shots"].get<std::string>();
    size_t at = 0;
    while (at < list.size()) {
      size_t comma = list.find(',', at);
      if (comma == std::string::npos) comma = list.size();
      try {
        shot_values.push_back(std::stoi(list.substr(at, comma - at)));
      } catch (const std::exception&) {
        throw ConfigError("bad --shots list: " + list);
      }
      at = comma + 1;
    }
    if (shot_values.empty()) throw ConfigError("empty --shots list");
  }

  std::ofstream out(cfg["out"].get<std::string>());
  if (!out) throw DataFormatError("cannot open for writing: " + cfg["out"].get<std::string>());
  out << "# " << dump_config(cfg, "sweep-shots") << "\n";
  out << "shots,model,metric,mean,std\n";
  char buf[160];
  for (int shots : shot_values) {
    std::map<std::string, std::vector<double>> vals;
    for (int r = 0; r < cfg["repeats"].get<int>(); ++r) {
      ModelBundle bundle = load_bundle(cfg["bundle"].get<std::string>());
      AdaptConfig ac;
      ac.epochs = cfg["epochs"].get<int>();
      ac.batch_size = cfg["batch"].get<int>();
      ac.lr_sdt = cfg["lr-sdt"].get<double>();
      ac.lr_vit = cfg["lr-vit"].get<double>();
      ac.weight_decay = cfg["weight-decay"].get<double>();
      ac.alpha = cfg["alpha"].get<double>() < 0.0 ? bundle.alpha : cfg["alpha"].get<double>();
      ac.shots = shots;
      ac.joint_grad = cfg["jsd-joint-grad"].get<bool>();
      ac.sdt_rep = cfg["sdt-rep"].get<std::string>();
      ac.seed = cfg["seed"].get<uint64_t>() + static_cast<uint64_t>(r);
      adapt(bundle, make_target(target), ac);
      BundleEval ev = evaluate_bundle(bundle, test);
      vals["sdt.acc"].push_back(ev.sdt.acc);
      vals["sdt.bca"].push_back(ev.sdt.bca);
      vals["sdt.f1_weighted"].push_back(ev.sdt.f1_weighted);
      vals["vit.acc"].push_back(ev.vit.acc);
      vals["vit.bca"].push_back(ev.vit.bca);
      vals["vit.f1_weighted"].push_back(ev.vit.f1_weighted);
      std::cerr << "[sweep-shots] shots=" << shots << " repeat=" << r
                << " sdt_bca=" << ev.sdt.bca << " vit_bca=" << ev.vit.bca << "\n";
    }
    for (const char* model : {"sdt", "vit"}) {
      for (const char* metric : {"acc", "bca", "f1_weighted"}) {
        MeanStd ms = mean_std(vals[std::string(model) + "." + metric]);
        std::snprintf(buf, sizeof(buf), "%d,%s,%s,%.9g,%.9g\n", shots, model, metric, ms.mean,
                      ms.stdev);
        out << buf;
      }
    }
  }
  if (!out) throw DataFormatError("write failed: " + cfg["out"].get<std::string>());
  std::cerr << "[sweep-shots] wrote " << cfg["out"].get<std::string>() << "\n";
  return 0;
}

void usage(std::ostream& os) {
  os << "usage: kdfshot <command> [--config file.json] [--flags...]\n"
        "commands:\n"
        "  gen-data          synthesize source/target dataset files\n"
        "  extract-features  write the per-window feature CSV for a dataset\n"
        "  pretrain          mutual-learning pre-training on labeled source data\n"
        "  adapt             source-free adaptation of a bundle on target data\n"
        "  evaluate          score a bundle on a dataset, or run cross-validation\n"
        "  sweep-shots       adapt at several shot counts and tabulate metrics\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    usage(std::cerr);
    return 2;
  }
  std::string cmd = argv[1];
  std::vector<std::string> args(argv + 2, argv + argc);
  try {
    if (cmd == "gen-data") return cmd_gen_data(args);
    if (cmd == "extract-features") return cmd_extract_features(args);
    if (cmd == "pretrain") return cmd_pretrain(args);
    if (cmd == "adapt") return cmd_adapt(args);
    if (cmd == "evaluate") return cmd_evaluate(args);
    if (cmd == "sweep-shots") return cmd_sweep_shots(args);
    if (cmd == "--help" || cmd == "-h" || cmd == "help") {
      usage(std::cout);
      return 0;
    }
    std::cerr << "error: unknown command '" << cmd << "'\n";
    usage(std::cerr);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataFormatError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
