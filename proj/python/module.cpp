#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mlct/pipeline.hpp"

namespace py = pybind11;
using namespace mlct;

PYBIND11_MODULE(_mlct, m) {
    m.doc() = "Motion latent consistency engine";
    m.attr("engine_version") = kEngineVersion;

    // ---- schedule ----
    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def(py::init<>())
        .def(py::init<double, double>(), py::arg("beta0"), py::arg("beta1"))
        .def_readonly("beta0", &NoiseSchedule::beta0)
        .def_readonly("beta1", &NoiseSchedule::beta1)
        .def("beta", &NoiseSchedule::beta)
        .def("alpha", &NoiseSchedule::alpha)
        .def("sigma", &NoiseSchedule::sigma)
        .def("log_snr", &NoiseSchedule::log_snr)
        .def("drift_diffusion", &NoiseSchedule::drift_diffusion);
    m.def("paper_beta_schedule", &paper_beta_schedule);

    py::class_<TimeGrid>(m, "TimeGrid")
        .def_readonly("epsilon", &TimeGrid::epsilon)
        .def_readonly("T", &TimeGrid::T)
        .def_readonly("N", &TimeGrid::N)
        .def_readonly("rho", &TimeGrid::rho)
        .def_readonly("times", &TimeGrid::times);
    m.def("karras_grid", &karras_grid, py::arg("epsilon") = 0.002,
          py::arg("T") = 1.0, py::arg("N") = 50, py::arg("rho") = 7.0);
    m.def("skip_coeffs", &skip_coeffs, py::arg("t"), py::arg("eta") = 0.5);
    m.def("perturb", &perturb);
    m.def("dpmpp_step", &dpmpp_step);
    m.def("select_nfe_times", &select_nfe_times);

    // ---- codec primitives ----
    m.def("quantize", &quantize, py::arg("z_e"), py::arg("level"));
    m.def("joint_transform", &joint_transform);
    m.def("recon_loss", &recon_loss);

    // ---- config / containers ----
    py::class_<RunConfig> rc(m, "RunConfig");
    rc.def(py::init<>())
        .def("canonical", &RunConfig::canonical)
        .def("hash", &RunConfig::hash)
        .def("effective_cluster_k", &RunConfig::effective_cluster_k)
        .def("schedule", &RunConfig::schedule)
        .def("__getitem__",
             [](const RunConfig& c, const std::string& key) {
                 auto keys = run_config_keys();
                 auto it = keys.find(key);
                 if (it == keys.end()) throw py::key_error(key);
                 return c.*(it->second);
             })
        .def("__setitem__",
             [](RunConfig& c, const std::string& key, double v) {
                 auto keys = run_config_keys();
                 auto it = keys.find(key);
                 if (it == keys.end()) throw py::key_error(key);
                 c.*(it->second) = v;
             })
        .def("keys", [](const RunConfig&) {
            std::vector<std::string> out;
            for (const auto& [k, v] : run_config_keys()) out.push_back(k);
            return out;
        });
    m.def("load_run_config", &load_run_config);
    m.def("save_run_config", &save_run_config);

    py::class_<MotionSequence>(m, "MotionSequence")
        .def(py::init<>())
        .def_readwrite("id", &MotionSequence::id)
        .def_readwrite("label", &MotionSequence::label)
        .def_readwrite("data", &MotionSequence::data)
        .def_property_readonly("frames", &MotionSequence::frames)
        .def_property_readonly("channels", &MotionSequence::channels);

    m.def("write_corpus", &write_corpus);
    m.def("read_corpus", &read_corpus);

    py::class_<Checkpoint>(m, "Checkpoint")
        .def(py::init<>())
        .def_readwrite("config_hash", &Checkpoint::config_hash)
        .def_readwrite("seed", &Checkpoint::seed)
        .def_readwrite("arrays", &Checkpoint::arrays);
    m.def("write_checkpoint", &write_checkpoint);
    m.def("read_checkpoint", &read_checkpoint);

    py::class_<MetricRecord>(m, "MetricRecord")
        .def(py::init<>())
        .def_readwrite("metric", &MetricRecord::metric)
        .def_readwrite("value", &MetricRecord::value)
        .def_readwrite("nfe", &MetricRecord::nfe)
        .def_readwrite("seed", &MetricRecord::seed)
        .def_readwrite("config_hash", &MetricRecord::config_hash);
    m.def("format_metric_record", &format_metric_record);
    m.def("append_metric_records", &append_metric_records);
    m.def("read_metric_records", &read_metric_records);

    // ---- data / metrics ----
    m.def("gen_corpus", &gen_corpus);
    m.def("class_embedding", &class_embedding);
    m.def("sequence_features", &sequence_features);
    m.def("feature_matrix", &feature_matrix);
    py::class_<FrechetResult>(m, "FrechetResult")
        .def_readonly("distance", &FrechetResult::distance)
        .def_readonly("ridged", &FrechetResult::ridged);
    m.def("frechet_gaussian_distance", &frechet_gaussian_distance);
    m.def("frechet_analytic", &frechet_analytic);
    m.def("condition_accuracy", &condition_accuracy);
    m.def("class_centroids", &class_centroids);
    m.def("diversity", &diversity, py::arg("feats"), py::arg("pairs") = 10000,
          py::arg("seed") = 0);
    m.def("multimodality", &multimodality, py::arg("feats"), py::arg("labels"),
          py::arg("pairs_per_cond") = 1000, py::arg("seed") = 0);

    // ---- pipeline stages (opaque artifact handles) ----
    py::class_<ModelParams>(m, "ModelParams")
        .def_readwrite("arrays", &ModelParams::arrays);
    py::class_<ClusterDictionary>(m, "ClusterDictionary")
        .def_readonly("keys", &ClusterDictionary::keys)
        .def_readonly("values", &ClusterDictionary::values)
        .def_property_readonly("k", &ClusterDictionary::k);
    py::class_<ConsistencyModel>(m, "ConsistencyModel")
        .def_readonly("has_dict", &ConsistencyModel::has_dict);
    py::class_<ScoreBaseline>(m, "ScoreBaseline");

    py::class_<CodecArtifacts>(m, "CodecArtifacts")
        .def_readonly("params", &CodecArtifacts::params)
        .def_property_readonly("losses", [](const CodecArtifacts& a) {
            std::vector<std::pair<long, double>> out;
            for (const auto& e : a.log) out.emplace_back(e.step, e.loss);
            return out;
        });
    py::class_<ConsistencyArtifacts>(m, "ConsistencyArtifacts")
        .def_readonly("model", &ConsistencyArtifacts::model);
    py::class_<BaselineArtifacts>(m, "BaselineArtifacts")
        .def_readonly("model", &BaselineArtifacts::model);
    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("frechet", &EvalReport::frechet)
        .def_readonly("cond_accuracy", &EvalReport::cond_accuracy)
        .def_readonly("diversity", &EvalReport::diversity_val)
        .def_readonly("multimodality", &EvalReport::multimodality_val)
        .def_readonly("nfe", &EvalReport::nfe);

    m.def("run_train_codec", &run_train_codec,
          py::call_guard<py::gil_scoped_release>());
    m.def("corpus_latents", &corpus_latents);
    m.def("corpus_labels", &corpus_labels);
    m.def("run_build_dict", &run_build_dict);
    m.def("run_train_cm", &run_train_cm,
          py::call_guard<py::gil_scoped_release>());
    m.def("run_train_baseline", &run_train_baseline,
          py::call_guard<py::gil_scoped_release>());
    m.def("run_sample", &run_sample, py::arg("cfg"), py::arg("model"),
          py::arg("codec"), py::arg("nfe"), py::arg("per_class"), py::arg("seed"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_sample_baseline", &run_sample_baseline, py::arg("cfg"),
          py::arg("model"), py::arg("codec"), py::arg("per_class"), py::arg("seed"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_evaluate", &run_evaluate);
    m.def("report_records", &report_records);
    m.def("pack_cm_checkpoint", &pack_cm_checkpoint);
    m.def("unpack_cm_checkpoint", &unpack_cm_checkpoint);
    m.def("pack_params", &pack_params);
    m.def("unpack_params", &unpack_params);
}
