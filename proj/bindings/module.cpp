// Python bindings for the core operations: pairwise strength fitting,
// supervised topic model fitting, held-out inference, and prediction.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "autopersuade/btrank.hpp"
#include "autopersuade/comparisons.hpp"
#include "autopersuade/embedding.hpp"
#include "autopersuade/errors.hpp"
#include "autopersuade/evaluation.hpp"
#include "autopersuade/inference.hpp"
#include "autopersuade/rng.hpp"
#include "autopersuade/sunmodel.hpp"

namespace ap = autopersuade;
namespace py = pybind11;

namespace {

ap::ComparisonSet records_from_tuples(
    const std::vector<std::tuple<std::string, std::string, std::string>>& records) {
    ap::ComparisonSet set;
    int session = 0;
    for (const auto& [left, right, winner] : records) {
        ap::ComparisonRecord r;
        r.session_id = "s" + std::to_string(session++);
        r.left_id = left;
        r.right_id = right;
        if (winner == "left") {
            r.winner = ap::Winner::left;
        } else if (winner == "right") {
            r.winner = ap::Winner::right;
        } else {
            throw ap::ValidationError("winner must be 'left' or 'right', got '" + winner + "'");
        }
        set.records.push_back(std::move(r));
    }
    return set;
}

ap::SunModel fit_supervised(const ap::Matrix& m, const ap::Vector& y, double alpha, int j_topics,
                            int n_iters, std::uint64_t seed, double embedding_divisor,
                            int n_restarts) {
    const ap::ScalingParams scaling = ap::fit_scaling(m, y, embedding_divisor, nullptr);
    const ap::SupervisedMatrix x = ap::build_supervised_matrix(
        ap::scale_embeddings(m, scaling), ap::scale_response(y, scaling), alpha);
    ap::SunModel model;
    if (n_restarts == 1) {
        model = ap::fit(x, j_topics, n_iters, seed);
    } else {
        model = ap::multi_restart_fit(x, j_topics, n_iters, n_restarts, 0.2, seed).model;
    }
    model.scaling = scaling;
    return model;
}

ap::TopicLoadings infer_loadings(const ap::SunModel& model, const ap::Matrix& m_new,
                                 const std::string& mode, int n_iters, std::uint64_t seed) {
    const ap::Matrix scaled = ap::scale_embeddings(m_new, model.scaling);
    if (ap::inference_mode_from_string(mode) == ap::InferenceMode::converged) {
        return ap::infer_converged(scaled, model);
    }
    return ap::infer_iterative(scaled, model, n_iters, seed);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Pairwise argument scoring and supervised topic modeling";

    py::register_exception<ap::ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ap::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    py::class_<ap::SunModel>(m, "SunModel")
        .def_property_readonly("W", [](const ap::SunModel& s) { return s.w; })
        .def_property_readonly("H", [](const ap::SunModel& s) { return s.h; })
        .def_property_readonly("B", [](const ap::SunModel& s) { return s.b(); })
        .def_property_readonly("gamma", [](const ap::SunModel& s) { return s.gamma(); })
        .def_property_readonly("alpha", [](const ap::SunModel& s) { return s.alpha; })
        .def_property_readonly("j_topics", [](const ap::SunModel& s) { return s.j_topics; })
        .def_property_readonly("seed", [](const ap::SunModel& s) { return s.seed; })
        .def_property_readonly("normalized", [](const ap::SunModel& s) { return s.normalized; })
        .def_property_readonly("loss_trace", [](const ap::SunModel& s) { return s.loss_trace; })
        .def("normalize", [](const ap::SunModel& s) { return ap::normalize(s); })
        .def("to_json", [](const ap::SunModel& s) { return ap::model_to_json(s); })
        .def_static("from_json", [](const std::string& text) { return ap::model_from_json(text); })
        .def("__repr__", [](const ap::SunModel& s) {
            return "<SunModel J=" + std::to_string(s.j_topics) + " s=" + std::to_string(s.s()) +
                   " alpha=" + std::to_string(s.alpha) + ">";
        });

    m.def(
        "fit_bt",
        [](const std::vector<std::tuple<std::string, std::string, std::string>>& records) {
            return ap::fit_bt(records_from_tuples(records)).scores.scores;
        },
        py::arg("records"),
        "Mean-one pairwise strengths from (left_id, right_id, winner) records");

    m.def("fit", &fit_supervised, py::arg("M"), py::arg("Y"), py::arg("alpha") = 0.5,
          py::arg("j_topics") = 10, py::arg("n_iters") = 100, py::arg("seed") = 0,
          py::arg("embedding_divisor") = 2.0, py::arg("n_restarts") = 1,
          "Scale raw embeddings and responses, then fit the supervised topic model");

    m.def(
        "infer",
        [](const ap::SunModel& model, const ap::Matrix& m_new, const std::string& mode, int n_iters,
           std::uint64_t seed) { return infer_loadings(model, m_new, mode, n_iters, seed).w_new; },
        py::arg("model"), py::arg("M_new"), py::arg("mode") = "converged", py::arg("n_iters") = 100,
        py::arg("seed") = 0, "Nonnegative topic loadings for held-out raw embeddings");

    m.def(
        "predict",
        [](const ap::SunModel& model, const ap::Matrix& loadings) {
            ap::TopicLoadings l;
            l.w_new = loadings;
            l.ids.resize(static_cast<std::size_t>(loadings.rows()));
            return ap::predict_response(l, model);
        },
        py::arg("model"), py::arg("loadings"),
        "Predicted responses (original units) from topic loadings");

    m.def("mse", &ap::mse, py::arg("predicted"), py::arg("actual"));
    m.def("derive_seed", &ap::derive_seed, py::arg("base"), py::arg("stream"));
}
