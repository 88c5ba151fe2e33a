#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kdfshot/dataset.hpp"
#include "kdfshot/errors.hpp"
#include "kdfshot/features.hpp"
#include "kdfshot/kdf.hpp"
#include "kdfshot/metrics.hpp"
#include "kdfshot/mutualshot.hpp"
#include "kdfshot/tensor.hpp"

namespace py = pybind11;
using namespace kdfshot;

namespace {

py::dict metrics_dict(const MetricsReport& r) {
  py::dict d;
  d["acc"] = r.acc;
  d["bca"] = r.bca;
  d["f1_weighted"] = r.f1_weighted;
  d["confusion"] = r.confusion;
  d["n"] = r.n;
  return d;
}

diff::Tensor rows_tensor(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ConfigError("need at least one row");
  size_t cols = rows[0].size();
  std::vector<double> flat;
  flat.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw ConfigError("ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return diff::Tensor::from(rows.size(), cols, flat);
}

}  // namespace

PYBIND11_MODULE(_kdfshot, m) {
  m.doc() = "Mutual knowledge/data learning with source-free few-shot adaptation";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DataFormatError>(m, "DataFormatError");
  py::register_exception<NumericError>(m, "NumericError");

  py::class_<ShiftSpec>(m, "ShiftSpec")
      .def(py::init<>())
      .def_readwrite("amplitude_scale", &ShiftSpec::amplitude_scale)
      .def_readwrite("noise_sigma", &ShiftSpec::noise_sigma)
      .def_readwrite("freq_jitter_hz", &ShiftSpec::freq_jitter_hz)
      .def_readwrite("channel_drop_p", &ShiftSpec::channel_drop_p);

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("K", &SynthConfig::K)
      .def_readwrite("C", &SynthConfig::C)
      .def_readwrite("N", &SynthConfig::N)
      .def_readwrite("fs", &SynthConfig::fs)
      .def_readwrite("n_per_class", &SynthConfig::n_per_class)
      .def_readwrite("n_subjects", &SynthConfig::n_subjects);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("K", &Dataset::K)
      .def_readonly("C", &Dataset::C)
      .def_readonly("N", &Dataset::N)
      .def_readonly("fs", &Dataset::fs)
      .def_readonly("class_names", &Dataset::class_names)
      .def("__len__", &Dataset::size)
      .def("labels",
           [](const Dataset& ds) {
             std::vector<int> y(ds.size());
             for (size_t i = 0; i < ds.size(); ++i) y[i] = ds.windows[i].label;
             return y;
           })
      .def("subjects", &Dataset::subjects)
      .def("window", [](const Dataset& ds, size_t i) { return ds.windows.at(i).samples; });

  py::class_<VitConfig>(m, "VitConfig")
      .def(py::init<>())
      .def_readwrite("patch_len", &VitConfig::patch_len)
      .def_readwrite("d_model", &VitConfig::d_model)
      .def_readwrite("n_layers", &VitConfig::n_layers)
      .def_readwrite("n_heads", &VitConfig::n_heads)
      .def_readwrite("d_ff", &VitConfig::d_ff);

  py::class_<KdfModelConfig>(m, "KdfModelConfig")
      .def(py::init<>())
      .def_readwrite("sdt_depth", &KdfModelConfig::sdt_depth)
      .def_readwrite("sdt_beta", &KdfModelConfig::sdt_beta)
      .def_readwrite("vit", &KdfModelConfig::vit)
      .def_readwrite("alpha", &KdfModelConfig::alpha)
      .def_readwrite("seed", &KdfModelConfig::seed);

  py::class_<KdfTrainConfig>(m, "KdfTrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &KdfTrainConfig::epochs)
      .def_readwrite("batch_size", &KdfTrainConfig::batch_size)
      .def_readwrite("lr_sdt", &KdfTrainConfig::lr_sdt)
      .def_readwrite("lr_vit", &KdfTrainConfig::lr_vit)
      .def_readwrite("weight_decay", &KdfTrainConfig::weight_decay)
      .def_readwrite("alpha", &KdfTrainConfig::alpha)
      .def_readwrite("joint_grad", &KdfTrainConfig::joint_grad)
      .def_readwrite("balance_penalty", &KdfTrainConfig::balance_penalty)
      .def_readwrite("patience", &KdfTrainConfig::patience)
      .def_readwrite("seed", &KdfTrainConfig::seed);

  py::class_<AdaptConfig>(m, "AdaptConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &AdaptConfig::epochs)
      .def_readwrite("batch_size", &AdaptConfig::batch_size)
      .def_readwrite("lr_sdt", &AdaptConfig::lr_sdt)
      .def_readwrite("lr_vit", &AdaptConfig::lr_vit)
      .def_readwrite("weight_decay", &AdaptConfig::weight_decay)
      .def_readwrite("alpha", &AdaptConfig::alpha)
      .def_readwrite("shots", &AdaptConfig::shots)
      .def_readwrite("no_pseudo", &AdaptConfig::no_pseudo)
      .def_readwrite("no_consistency", &AdaptConfig::no_consistency)
      .def_readwrite("no_ssl", &AdaptConfig::no_ssl)
      .def_readwrite("joint_grad", &AdaptConfig::joint_grad)
      .def_readwrite("sdt_rep", &AdaptConfig::sdt_rep)
      .def_readwrite("seed", &AdaptConfig::seed);

  py::class_<ModelBundle>(m, "ModelBundle")
      .def_readonly("K", &ModelBundle::K)
      .def_readonly("C", &ModelBundle::C)
      .def_readonly("N", &ModelBundle::N)
      .def_readonly("fs", &ModelBundle::fs)
      .def_readonly("alpha", &ModelBundle::alpha)
      .def_readonly("registry_version", &ModelBundle::registry_version);

  m.def("default_shift", &default_shift);
  m.def("generate_synthetic", &generate_synthetic, py::arg("config"), py::arg("shift"),
        py::arg("seed"));
  m.def("split_holdout", &split_holdout, py::arg("dataset"), py::arg("n_holdout_per_class"));
  m.def("save_dataset", &save_dataset, py::arg("path"), py::arg("dataset"),
        py::arg("config_json") = "");
  m.def("load_dataset", [](const std::string& path) { return load_dataset(path); },
        py::arg("path"));

  m.def("feature_names", [] { return feature_names(); });
  m.def("extract_features",
        [](const Dataset& ds, size_t i) { return extract_features(ds, i); },
        py::arg("dataset"), py::arg("window_index"));
  m.def(
      "extract_features_all",
      [](const Dataset& ds) {
        FeatureMatrix fm = extract_features_all(ds);
        std::vector<std::vector<double>> rows(fm.n_rows);
        for (size_t r = 0; r < fm.n_rows; ++r)
          rows[r].assign(fm.row(r), fm.row(r) + fm.n_cols);
        return rows;
      },
      py::arg("dataset"));

  m.def("jsd",
        [](const std::vector<std::vector<double>>& p, const std::vector<std::vector<double>>& q) {
          return jsd(rows_tensor(p), rows_tensor(q)).item();
        });
  m.def("im_loss", [](const std::vector<std::vector<double>>& probs) {
    return im_loss(rows_tensor(probs)).item();
  });

  m.def(
      "pretrain",
      [](const Dataset& train, const Dataset& val, const KdfModelConfig& mc,
         const KdfTrainConfig& tc) {
        ModelBundle bundle = init_bundle(train, mc);
        std::vector<KdfEpochRow> log = kdf_train(bundle, train, val, tc);
        py::list rows;
        for (const auto& r : log) {
          py::dict d;
          d["epoch"] = r.epoch;
          d["l_vit"] = r.l_vit;
          d["l_sdt"] = r.l_sdt;
          d["val_bca_sdt"] = r.val_bca_sdt;
          d["val_bca_vit"] = r.val_bca_vit;
          rows.append(d);
        }
        return py::make_tuple(bundle, rows);
      },
      py::arg("train"), py::arg("val"), py::arg("model_config") = KdfModelConfig{},
      py::arg("train_config") = KdfTrainConfig{});

  m.def(
      "adapt",
      [](ModelBundle& bundle, const Dataset& target, const AdaptConfig& ac) {
        std::vector<AdaptLogRow> log = adapt(bundle, make_target(target), ac);
        py::list rows;
        for (const auto& r : log) {
          py::dict d;
          d["epoch"] = r.epoch;
          d["t"] = r.t;
          d["l_im_sdt"] = r.l_im_sdt;
          d["l_im_vit"] = r.l_im_vit;
          d["l_ce_plus"] = r.l_ce_plus;
          d["n_splus"] = r.n_splus;
          d["agreement_rate"] = r.agreement_rate;
          d["val_bca_sdt"] = r.val_bca_sdt;
          d["val_bca_vit"] = r.val_bca_vit;
          rows.append(d);
        }
        return rows;
      },
      py::arg("bundle"), py::arg("target"), py::arg("adapt_config") = AdaptConfig{});

  m.def(
      "evaluate",
      [](const ModelBundle& bundle, const Dataset& ds) {
        BundleEval e = evaluate_bundle(bundle, ds);
        py::dict d;
        d["sdt"] = metrics_dict(e.sdt);
        d["vit"] = metrics_dict(e.vit);
        return d;
      },
      py::arg("bundle"), py::arg("dataset"));

  m.def("compute_metrics",
        [](const std::vector<int>& y_true, const std::vector<int>& y_pred, int n_classes) {
          return metrics_dict(compute_metrics(y_true, y_pred, n_classes));
        });

  m.def("save_bundle", &save_bundle, py::arg("path"), py::arg("bundle"),
        py::arg("config_json") = "");
  m.def("load_bundle", [](const std::string& path) { return load_bundle(path); },
        py::arg("path"));
}
