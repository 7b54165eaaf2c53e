#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <unordered_set>

#include "mhel/adjudicator.hpp"
#include "mhel/calibration.hpp"
#include "mhel/corpus_io.hpp"
#include "mhel/encoder.hpp"
#include "mhel/error.hpp"
#include "mhel/evaluation.hpp"
#include "mhel/kb_store.hpp"
#include "mhel/mock_backends.hpp"
#include "mhel/pipeline.hpp"
#include "mhel/vector_index.hpp"

namespace py = pybind11;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

std::span<const float> as_span(const FloatArray& a) {
  if (a.ndim() != 1) throw mhel::DimensionError("query must be one-dimensional");
  return {a.data(), static_cast<std::size_t>(a.shape(0))};
}

mhel::EmbeddingMatrix to_matrix(const FloatArray& vectors, std::vector<std::string> ids) {
  if (vectors.ndim() != 2) throw mhel::DimensionError("vectors must be a 2-d array");
  mhel::EmbeddingMatrix m;
  m.count = static_cast<std::uint32_t>(vectors.shape(0));
  m.dim = static_cast<std::uint32_t>(vectors.shape(1));
  m.data.assign(vectors.data(), vectors.data() + vectors.size());
  m.ids = std::move(ids);
  return m;
}

py::list hits_to_list(const std::vector<mhel::RetrievalHit>& hits) {
  py::list out;
  for (const auto& h : hits) out.append(py::make_tuple(h.qid, h.score, h.rank));
  return out;
}

std::vector<mhel::EvalPair> to_pairs(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  if (gold.size() != pred.size()) throw mhel::PreconditionError("gold and pred differ in length");
  std::vector<mhel::EvalPair> pairs;
  for (std::size_t i = 0; i < gold.size(); ++i) pairs.push_back({std::to_string(i), gold[i], pred[i], 0.0});
  return pairs;
}

// json -> Python via the json module keeps nested reports intact.
py::object to_py(const mhel::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict prediction_dict(const mhel::PredictionRecord& r) {
  py::dict d;
  d["mention_id"] = r.mention_id;
  d["doc_id"] = r.doc_id;
  d["pred_qid"] = r.pred_qid;
  d["route"] = r.route;
  d["top_score"] = r.top_score ? py::object(py::float_(*r.top_score)) : py::object(py::none());
  d["candidates_considered"] = r.candidates_considered;
  d["gold_qid"] = r.gold_qid ? py::object(py::str(*r.gold_qid)) : py::object(py::none());
  return d;
}

}  // namespace

PYBIND11_MODULE(_mhel, m) {
  m.doc() = "Retrieval, routing and evaluation core";

  py::register_exception<mhel::Error>(m, "MhelError", PyExc_ValueError);

  py::class_<mhel::VectorIndex>(m, "Index")
      .def(py::init([](const FloatArray& vectors, std::vector<std::string> ids) {
             return mhel::VectorIndex(to_matrix(vectors, std::move(ids)));
           }),
           py::arg("vectors"), py::arg("ids"))
      .def_static("load", &mhel::VectorIndex::load, py::arg("vectors_path"), py::arg("ids_path"))
      .def_property_readonly("count", &mhel::VectorIndex::count)
      .def_property_readonly("dim", &mhel::VectorIndex::dim)
      .def(
          "search",
          [](const mhel::VectorIndex& idx, const FloatArray& q, int k) { return hits_to_list(idx.search(as_span(q), k)); },
          py::arg("query"), py::arg("k"))
      .def(
          "brute_force_search",
          [](const mhel::VectorIndex& idx, const FloatArray& q, int k) {
            return hits_to_list(mhel::brute_force_search(idx.matrix(), as_span(q), k));
          },
          py::arg("query"), py::arg("k"))
      .def(
          "save",
          [](const mhel::VectorIndex& idx, const std::string& vectors_path, const std::string& ids_path) {
            mhel::write_embeddings(idx.matrix(), vectors_path, ids_path);
          },
          py::arg("vectors_path"), py::arg("ids_path"));

  m.def(
      "mock_encode",
      [](const std::string& marked, const std::string& language, std::size_t dim) {
        const auto v = mhel::MockEncoder(dim).encode({marked, language, ""});
        FloatArray out(static_cast<py::ssize_t>(v.size()));
        std::copy(v.begin(), v.end(), out.mutable_data());
        return out;
      },
      py::arg("marked_text"), py::arg("language"), py::arg("dim"));

  m.def("mark_mention", [](const std::string& text, std::size_t start, std::size_t end) {
    return mhel::mark_mention(text, start, end);
  }, py::arg("text"), py::arg("start"), py::arg("end"), "Offsets are UTF-8 byte offsets.");

  m.def("parse_binary_answer", [](const std::string& reply) {
    return mhel::parse_binary_answer(reply) == mhel::BinaryAnswer::yes;
  }, py::arg("reply"));

  m.def("extract_selection", [](const std::string& reply, const std::vector<std::string>& allowed) {
    return mhel::extract_selection(reply, std::unordered_set<std::string>(allowed.begin(), allowed.end()));
  }, py::arg("reply"), py::arg("allowed"));

  m.def("harmonic_f1", &mhel::harmonic_f1, py::arg("precision"), py::arg("recall"));

  m.def("micro_scores", [](const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
    return to_py(mhel::to_json(mhel::micro_scores(to_pairs(gold, pred))));
  }, py::arg("gold"), py::arg("pred"));

  m.def("nil_scores", [](const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
    return to_py(mhel::to_json(mhel::nil_scores(to_pairs(gold, pred))));
  }, py::arg("gold"), py::arg("pred"));

  m.def("point_biserial", [](const std::vector<double>& scores, const std::vector<int>& correct) {
    const auto r = mhel::point_biserial(scores, correct);
    py::dict d;
    d["r_pb"] = r.r_pb;
    d["n"] = r.n;
    d["t_stat"] = r.t_stat;
    d["p_value"] = r.p_value;
    return d;
  }, py::arg("scores"), py::arg("correct"));

  m.def(
      "calibrate_threshold",
      [](const std::vector<std::pair<std::string, std::vector<std::pair<std::string, float>>>>& records,
         bool gold_in_hits) {
        std::vector<mhel::DevRetrievalRecord> recs;
        for (const auto& [gold, hits] : records) {
          mhel::DevRetrievalRecord r{std::to_string(recs.size()), gold, {}};
          for (const auto& [qid, score] : hits) r.hits.push_back({qid, score, static_cast<int>(r.hits.size()) + 1});
          recs.push_back(std::move(r));
        }
        return mhel::calibrate_threshold(
            recs, gold_in_hits ? mhel::CorrectnessRule::gold_in_hits : mhel::CorrectnessRule::rank1);
      },
      py::arg("records"), py::arg("gold_in_hits") = false,
      "records: [(gold_qid, [(qid, score), ...]), ...] with hits in rank order.");

  m.def(
      "select_block_size",
      [](const std::vector<std::pair<int, double>>& curve, double epsilon) {
        std::vector<mhel::RecallPoint> pts;
        for (const auto& [k, r] : curve) pts.push_back({k, r});
        return mhel::select_block_size(pts, epsilon);
      },
      py::arg("curve"), py::arg("epsilon") = 0.01);

  m.def("import_kb", [](const std::string& jsonl, const std::string& store) {
    return mhel::import_kb(jsonl, store).count;
  }, py::arg("jsonl"), py::arg("store"));

  m.def("tally_errors", [](const std::string& path) {
    return to_py(mhel::to_json(mhel::tally_error_relations(mhel::read_error_annotations(path))));
  }, py::arg("path"));

  m.def(
      "link",
      [](const std::string& corpus, const std::string& kb_store, const std::string& vectors,
         const std::string& ids, const std::string& chat_script, const std::string& variant,
         std::optional<double> theta, int k, const std::string& prompt, std::size_t max_inflight) {
        mhel::PipelineConfig cfg;
        if (variant != "vanilla" && variant != "threshold") throw mhel::PreconditionError("unknown variant " + variant);
        if (prompt != "chain" && prompt != "single") throw mhel::PreconditionError("unknown prompt mode " + prompt);
        cfg.variant = variant == "vanilla" ? mhel::Variant::vanilla : mhel::Variant::threshold;
        cfg.prompt_mode = prompt == "chain" ? mhel::PromptMode::chain : mhel::PromptMode::single;
        cfg.threshold = theta;
        cfg.block_size = k;
        cfg.max_inflight = max_inflight;
        cfg.validate();
        mhel::CorpusRun run;
        {
          py::gil_scoped_release release;
          const auto file = mhel::load_corpus(corpus);
          const auto store = mhel::KbStore::open(kb_store);
          const auto index = mhel::VectorIndex::load(vectors, ids);
          const mhel::MockEncoder encoder(index.dim());
          const auto chat = mhel::ScriptedChat::from_file(chat_script);
          run = mhel::link_corpus(file.mentions, cfg, {encoder, index, store, *chat});
        }
        py::list out;
        for (const auto& d : run.decisions) out.append(prediction_dict(mhel::to_prediction(d)));
        py::dict stats;
        stats["mentions"] = run.stats.mentions;
        stats["chat_calls"] = run.stats.chat_calls;
        stats["routes"] = run.stats.routes;
        return py::make_tuple(out, stats);
      },
      py::arg("corpus"), py::arg("kb_store"), py::arg("vectors"), py::arg("ids"), py::arg("chat_script"),
      py::arg("variant") = "threshold", py::arg("theta") = py::none(), py::arg("k") = 10,
      py::arg("prompt") = "chain", py::arg("max_inflight") = 4,
      "Offline linking with the mock encoder and a scripted chat backend.");
}
