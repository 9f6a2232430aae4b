#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "matchpyramid/baselines.hpp"
#include "matchpyramid/cli.hpp"
#include "matchpyramid/error.hpp"
#include "matchpyramid/evaluation.hpp"
#include "matchpyramid/matching_matrix.hpp"
#include "matchpyramid/porter_stemmer.hpp"
#include "matchpyramid/pyramid_net.hpp"
#include "matchpyramid/text.hpp"
#include "matchpyramid/training.hpp"

namespace py = pybind11;
using namespace matchpyramid;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

MatchingMatrix to_matrix(const Array& a) {
    if (a.ndim() != 2) {
        throw ShapeError("matching matrix must be 2-dimensional");
    }
    MatchingMatrix m;
    m.rows = static_cast<std::size_t>(a.shape(0));
    m.cols = static_cast<std::size_t>(a.shape(1));
    m.values.assign(a.data(), a.data() + a.size());
    return m;
}

Array to_array(const FeatureMaps& f) {
    Array out({f.maps, f.rows, f.cols});
    std::copy(f.values.begin(), f.values.end(), out.mutable_data());
    return out;
}

std::vector<std::string> split_query(const Collection& c, const std::string& text) {
    return tokenize(text, c.tokenizer).tokens;
}

Collection make_index(const std::vector<std::pair<std::string, std::string>>& docs, bool stemming,
                      const std::vector<std::string>& stopwords) {
    TokenizerOptions options;
    options.stemming = stemming;
    options.stopwords.insert(stopwords.begin(), stopwords.end());
    std::vector<std::pair<std::string, TokenizedText>> tokenized;
    tokenized.reserve(docs.size());
    for (const auto& [id, text] : docs) {
        tokenized.emplace_back(id, tokenize(text, options));
    }
    return build_collection(tokenized, options);
}

ScorerOptions scorer_options(const std::string& scorer, double k1, double b, double mu) {
    ScorerOptions s;
    s.kind = parse_scorer_kind(scorer);
    s.bm25 = {k1, b};
    s.mu = mu;
    s.validate();
    return s;
}

py::dict report_to_dict(const EvaluationReport& r) {
    py::dict per_query;
    for (const auto& m : r.per_query) {
        py::dict row;
        row["ap"] = m.average_precision;
        row["ndcg@20"] = m.ndcg_at_20;
        row["p@20"] = m.precision_at_20;
        row["relevant"] = m.relevant;
        row["retrieved"] = m.retrieved;
        per_query[py::str(m.query_id)] = row;
    }
    py::dict out;
    out["map"] = r.map;
    out["ndcg@20"] = r.ndcg_at_20;
    out["p@20"] = r.precision_at_20;
    out["map_queries"] = r.map_queries;
    out["per_query"] = per_query;
    out["warnings"] = r.warnings;
    return out;
}

}  // namespace

PYBIND11_MODULE(_matchpyramid, m) {
    m.doc() = "C++ core of the MatchPyramid toolkit";

    auto base = py::register_exception<Error>(m, "MatchPyramidError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<NumericError>(m, "NumericError", base.ptr());

    m.def(
        "tokenize",
        [](const std::string& text, bool stemming, const std::vector<std::string>& stopwords) {
            TokenizerOptions options;
            options.stemming = stemming;
            options.stopwords.insert(stopwords.begin(), stopwords.end());
            return tokenize(text, options).tokens;
        },
        py::arg("text"), py::arg("stemming") = true, py::arg("stopwords") = std::vector<std::string>{});
    m.def("porter_stem", [](const std::string& w) { return porter_stem(w); }, py::arg("word"));

    m.def(
        "similarity",
        [](const std::string& kind, const std::string& w, const std::string& v, const std::vector<double>& a,
           const std::vector<double>& b, double sigma) {
            return word_similarity(parse_similarity_kind(kind), w, v, a, b, SimilarityOptions{sigma});
        },
        py::arg("kind"), py::arg("w"), py::arg("v"), py::arg("alpha"), py::arg("beta"), py::arg("sigma") = 1.0,
        "Similarity of one word pair: indicator, cosine, dot or gaussian.");

    m.def("pool_boundaries", &pool_boundaries, py::arg("length"), py::arg("cells"));
    m.def(
        "dynamic_max_pool",
        [](const Array& maps, std::size_t pool_rows, std::size_t pool_cols) {
            if (maps.ndim() != 3) {
                throw ShapeError("feature maps must be [maps, rows, cols]");
            }
            FeatureMaps f(static_cast<std::size_t>(maps.shape(0)), static_cast<std::size_t>(maps.shape(1)),
                          static_cast<std::size_t>(maps.shape(2)));
            std::copy(maps.data(), maps.data() + maps.size(), f.values.begin());
            const auto pooled = dynamic_max_pool(f, pool_rows, pool_cols);
            std::vector<std::pair<std::size_t, std::size_t>> argmax;
            for (const auto& c : pooled.argmax) {
                argmax.emplace_back(c.row, c.col);
            }
            return py::make_tuple(to_array(pooled.values), argmax);
        },
        py::arg("maps"), py::arg("pool_rows"), py::arg("pool_cols"),
        "Returns (pooled [maps, pool_rows, pool_cols], argmax (row, col) per cell).");

    py::class_<PyramidConfig>(m, "PyramidConfig")
        .def(py::init<>())
        .def_readwrite("kernel_rows", &PyramidConfig::kernel_rows)
        .def_readwrite("kernel_cols", &PyramidConfig::kernel_cols)
        .def_readwrite("feature_maps", &PyramidConfig::feature_maps)
        .def_readwrite("pool_rows", &PyramidConfig::pool_rows)
        .def_readwrite("pool_cols", &PyramidConfig::pool_cols)
        .def_readwrite("hidden_units", &PyramidConfig::hidden_units)
        .def_readwrite("gaussian_sigma", &PyramidConfig::gaussian_sigma)
        .def_readwrite("query_max_len", &PyramidConfig::query_max_len)
        .def_readwrite("doc_max_len", &PyramidConfig::doc_max_len)
        .def_property(
            "similarity", [](const PyramidConfig& c) { return std::string(to_string(c.similarity)); },
            [](PyramidConfig& c, const std::string& s) { c.similarity = parse_similarity_kind(s); })
        .def("validate", &PyramidConfig::validate);

    py::class_<PyramidModel>(m, "Model")
        .def_static("initialize", &PyramidModel::initialize, py::arg("config"), py::arg("seed"))
        .def_static(
            "load", [](const std::string& path) { return load_model(path); }, py::arg("path"))
        .def(
            "save", [](const PyramidModel& model, const std::string& path) { save_model(path, model); },
            py::arg("path"))
        .def_readonly("config", &PyramidModel::config)
        .def_property_readonly("num_parameters", [](const PyramidModel& model) { return model.params.count(); })
        .def(
            "parameters",
            [](const PyramidModel& model) {
                py::dict out;
                model.params.for_each_block([&](std::string_view name, const std::vector<double>& block) {
                    out[py::str(std::string(name))] = py::array_t<double>(block.size(), block.data());
                });
                return out;
            },
            "Copies of every parameter block, keyed by name.")
        .def(
            "score_matrix",
            [](const PyramidModel& model, const Array& matrix) { return forward_matrix(to_matrix(matrix), model).score; },
            py::arg("matrix"), "Score of one query x document matching matrix.")
        .def(
            "feature_maps",
            [](const PyramidModel& model, const Array& matrix) {
                return to_array(forward_matrix(to_matrix(matrix), model).conv_post);
            },
            py::arg("matrix"), "Post-ReLU convolution output for a matching matrix.")
        .def("__eq__", [](const PyramidModel& a, const PyramidModel& b) { return a == b; });

    m.def("hinge_loss", &hinge_loss, py::arg("s_pos"), py::arg("s_neg"));
    m.def(
        "grad_check",
        [](const PyramidModel& model, const Array& positive, const Array& negative, double step, double tolerance) {
            GradCheckOptions o;
            o.step = step;
            o.tolerance = tolerance;
            const auto r = grad_check(model, to_matrix(positive), to_matrix(negative), o);
            py::dict out;
            out["max_relative_error"] = r.max_relative_error;
            out["mean_relative_error"] = r.mean_relative_error;
            out["checked"] = r.checked;
            out["skipped_kinks"] = r.skipped_kinks;
            out["worst_parameter"] = r.worst_parameter;
            out["passed"] = r.passed;
            return out;
        },
        py::arg("model"), py::arg("positive"), py::arg("negative"), py::arg("step") = 1e-5,
        py::arg("tolerance") = 1e-4);

    py::class_<Collection>(m, "Index")
        .def(py::init(&make_index), py::arg("docs"), py::arg("stemming") = true,
             py::arg("stopwords") = std::vector<std::string>{},
             "Builds BM25/QL statistics from (doc_id, text) pairs.")
        .def_static(
            "load", [](const std::string& path) { return load_collection(path); }, py::arg("path"))
        .def(
            "save", [](const Collection& c, const std::string& path) { save_collection(path, c); }, py::arg("path"))
        .def_property_readonly("num_docs", [](const Collection& c) { return c.stats.num_docs(); })
        .def_property_readonly("avgdl", [](const Collection& c) { return c.stats.avgdl; })
        .def(
            "bm25",
            [](const Collection& c, const std::string& query, const std::string& doc_id, double k1, double b) {
                return bm25_score(split_query(c, query), doc_id, c.stats, c.index, Bm25Params{k1, b});
            },
            py::arg("query"), py::arg("doc_id"), py::arg("k1") = 1.2, py::arg("b") = 0.75)
        .def(
            "ql",
            [](const Collection& c, const std::string& query, const std::string& doc_id, double mu) {
                return ql_dirichlet_score(split_query(c, query), doc_id, c.stats, c.index, mu);
            },
            py::arg("query"), py::arg("doc_id"), py::arg("mu") = 2000.0)
        .def(
            "rank",
            [](const Collection& c, const std::string& query, const std::string& scorer, std::size_t top_k, double k1,
               double b, double mu) {
                std::vector<std::pair<std::string, double>> out;
                for (const auto& d : rank_collection(split_query(c, query), c, scorer_options(scorer, k1, b, mu), top_k)) {
                    out.emplace_back(d.doc_id, d.score);
                }
                return out;
            },
            py::arg("query"), py::arg("scorer") = "bm25", py::arg("top_k") = 1000, py::arg("k1") = 1.2,
            py::arg("b") = 0.75, py::arg("mu") = 2000.0);

    m.def(
        "average_precision",
        [](const std::vector<std::string>& ranking, const std::map<std::string, int>& judged) {
            return average_precision(ranking, judged);
        },
        py::arg("ranking"), py::arg("judged"));
    m.def(
        "ndcg_at_k",
        [](const std::vector<std::string>& ranking, const std::map<std::string, int>& judged, std::size_t k) {
            return ndcg_at_k(ranking, judged, k);
        },
        py::arg("ranking"), py::arg("judged"), py::arg("k") = 20);
    m.def(
        "precision_at_k",
        [](const std::vector<std::string>& ranking, const std::map<std::string, int>& judged, std::size_t k) {
            return precision_at_k(ranking, judged, k);
        },
        py::arg("ranking"), py::arg("judged"), py::arg("k") = 20);
    m.def(
        "evaluate",
        [](const std::map<std::string, std::vector<std::pair<std::string, double>>>& run, const Qrels& qrels) {
            RankedRun r;
            for (const auto& [qid, docs] : run) {
                auto& list = r[qid];
                for (const auto& [doc, s] : docs) {
                    list.push_back({doc, s});
                }
            }
            return report_to_dict(evaluate_run(r, qrels));
        },
        py::arg("run"), py::arg("qrels"), "MAP, nDCG@20 and P@20 of {qid: [(doc_id, score), ...]}.");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out;
            std::ostringstream err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs a `matchpyramid` subcommand; returns (exit_code, stdout, stderr).");
}
