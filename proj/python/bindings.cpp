#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mixsp/analysis.hpp"
#include "mixsp/data.hpp"
#include "mixsp/errors.hpp"
#include "mixsp/evaluate.hpp"
#include "mixsp/json_io.hpp"
#include "mixsp/metrics.hpp"
#include "mixsp/model.hpp"
#include "mixsp/trainer.hpp"

namespace py = pybind11;
using namespace mixsp;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

head::HeadConfig variant_preset(const std::string& name) {
  if (name == "mixsp") return head::HeadConfig::mixsp();
  if (name == "ft") return head::HeadConfig::fine_tune();
  if (name == "moe") return head::HeadConfig::moe();
  throw ConfigError("unknown variant '" + name + "' (expected mixsp, ft or moe)");
}

// Same seed derivation as the command-line tool, so runs are comparable.
Model make_model(const std::string& variant, std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
  return Model(variant_preset(variant),
               std::make_unique<encoder::ToyEncoder>(
                   encoder::init_encoder_params(vocab_size, dim, Rng::derive(seed, 1))),
               Rng::derive(seed, 2));
}

analysis::Space parse_space(const std::string& s) {
  if (s == "projected") return analysis::Space::Projected;
  if (s == "encoder") return analysis::Space::Encoder;
  throw ConfigError("unknown space '" + s + "' (expected projected or encoder)");
}

py::dict prediction_dict(const Prediction& p) {
  py::dict d;
  d["score"] = p.score;
  d["z1"] = p.z1;
  d["z2"] = p.z2;
  if (p.decision) {
    d["chosen"] = py::make_tuple(p.decision->chosen[0], p.decision->chosen[1]);
    d["beta"] = py::make_tuple(p.decision->beta[0], p.decision->beta[1]);
    d["p_hat"] = py::make_tuple(p.decision->p_hat[0], p.decision->p_hat[1]);
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Classify-and-rank sentence-pair scoring core";

  auto base = py::register_exception<Error>(m, "MixspError");
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<UndefinedMetric>(m, "UndefinedMetric", base.ptr());

  // -- data
  py::class_<data::SentencePair>(m, "SentencePair")
      .def(py::init([](std::string id, std::vector<std::int32_t> s1, std::vector<std::int32_t> s2, double gold) {
             return data::make_pair(std::move(id), std::move(s1), std::move(s2), gold);
           }),
           py::arg("id"), py::arg("sent1"), py::arg("sent2"), py::arg("gold"))
      .def_readonly("id", &data::SentencePair::id)
      .def_readonly("sent1", &data::SentencePair::sent1)
      .def_readonly("sent2", &data::SentencePair::sent2)
      .def_readonly("gold_score", &data::SentencePair::gold_score)
      .def_readonly("bin", &data::SentencePair::bin)
      .def_property_readonly("label", [](const data::SentencePair& p) { return data::to_string(p.class_label()); })
      .def("__repr__", [](const data::SentencePair& p) {
        return "<SentencePair " + p.id + " gold=" + std::to_string(p.gold_score) + ">";
      });

  py::class_<data::Corpus>(m, "Corpus")
      .def_readonly("name", &data::Corpus::name)
      .def_readonly("pairs", &data::Corpus::pairs)
      .def_property_readonly("vocab", [](const data::Corpus& c) { return c.vocab.tokens(); })
      .def_property_readonly("vocab_size", [](const data::Corpus& c) { return c.vocab.size(); })
      .def("__len__", [](const data::Corpus& c) { return c.pairs.size(); });

  m.def(
      "synth_corpus",
      [](std::size_t pairs, std::size_t dim, std::size_t vocab, std::uint64_t seed, double noise) {
        data::SynthOptions o;
        o.noise = noise;
        return data::synth_corpus(pairs, dim, vocab, seed, o).corpus;
      },
      py::arg("pairs") = 2000, py::arg("dim") = 16, py::arg("vocab") = 512, py::arg("seed") = 7,
      py::arg("noise") = 0.15, "Deterministic synthetic corpus with a latent similarity geometry.");
  m.def(
      "split",
      [](const data::Corpus& c, std::vector<double> fractions, std::uint64_t seed) {
        auto s = data::split(c, fractions, seed);
        return py::make_tuple(s.train, s.dev, s.test);
      },
      py::arg("corpus"), py::arg("fractions") = std::vector<double>{0.8, 0.1, 0.1}, py::arg("seed") = 0);
  m.def(
      "load_tsv",
      [](const std::filesystem::path& path, std::vector<std::string> vocab) {
        const bool fixed = !vocab.empty();
        return data::load_tsv(path, data::Vocabulary(std::move(vocab)), fixed);
      },
      py::arg("path"), py::arg("vocab") = std::vector<std::string>{},
      "Loads a sentence-pair TSV. A non-empty vocab is used as a fixed vocabulary.");
  m.def("write_tsv", &data::write_tsv, py::arg("corpus"), py::arg("path"));

  // -- model
  py::class_<Model>(m, "Model")
      .def(py::init(&make_model), py::arg("variant") = "mixsp", py::arg("vocab_size"), py::arg("dim") = 16,
           py::arg("seed") = 1)
      .def_property_readonly("dim", &Model::dim)
      .def_property_readonly("config", [](const Model& md) { return to_py(to_json(md.config())); })
      .def_property_readonly("param_count", [](const Model& md) { return to_py(to_json(md.param_count())); })
      .def("predict", [](const Model& md, const data::SentencePair& p) { return prediction_dict(md.predict(p)); })
      .def("predict_scores", [](const Model& md, const std::vector<data::SentencePair>& ps) {
        return md.predict_scores(ps);
      })
      .def("loss", [](Model& md, const std::vector<data::SentencePair>& batch) {
        diff::Tape t;
        LossParts parts;
        const double total = md.total_loss(t, batch, &parts).scalar();
        py::dict d;
        d["total"] = total;
        d["rl"] = parts.rl;
        d["clf"] = parts.clf;
        return d;
      });

  m.def(
      "train",
      [](const data::Corpus& train_split, const data::Corpus& dev, const Model& model, double lr,
         std::size_t batch_size, std::size_t epochs, std::uint64_t seed, const std::string& mode) {
        trainer::TrainConfig tc;
        tc.learning_rate = lr;
        tc.batch_size = batch_size;
        tc.epochs = epochs;
        tc.seed = seed;
        tc.mode = trainer::parse_mode(mode);
        auto r = [&] {
          py::gil_scoped_release release;
          return trainer::train(train_split, dev, model, tc);
        }();
        return py::make_tuple(std::move(r.model), to_py(to_json(r.history)));
      },
      py::arg("train"), py::arg("dev"), py::arg("model"), py::arg("lr") = 5e-5, py::arg("batch_size") = 16,
      py::arg("epochs") = 10, py::arg("seed") = 0, py::arg("mode") = "end_to_end",
      "Returns (trained model, history).");
  m.def(
      "evaluate",
      [](const Model& model, const std::vector<data::SentencePair>& pairs, const std::string& space) {
        return to_py(to_json(evaluate(model, pairs, parse_space(space)).report));
      },
      py::arg("model"), py::arg("pairs"), py::arg("space") = "projected");
  m.def(
      "save_checkpoint",
      [](const Model& model, const std::filesystem::path& path, const data::Corpus* corpus) {
        trainer::save_checkpoint({model, std::nullopt, {}, corpus ? corpus->vocab : data::Vocabulary{}}, path);
      },
      py::arg("model"), py::arg("path"), py::arg("corpus") = nullptr,
      "Writes a checkpoint; the corpus, if given, supplies the vocabulary.");
  m.def(
      "load_checkpoint", [](const std::filesystem::path& path) { return trainer::load_checkpoint(path).model; },
      py::arg("path"));

  // -- metrics
  m.def("spearman", [](std::vector<double> x, std::vector<double> y) { return metrics::spearman(x, y); });
  m.def("pearson", [](std::vector<double> x, std::vector<double> y) { return metrics::pearson(x, y); });
  m.def("average_ranks", [](std::vector<double> v) { return metrics::average_ranks(v); });
  m.def("auc", [](std::vector<double> s, std::vector<int> y) { return metrics::auc(s, y); }, py::arg("scores"),
        py::arg("labels"));
  m.def(
      "average_precision",
      [](const std::vector<std::pair<double, bool>>& c) {
        std::vector<metrics::Candidate> cands;
        for (const auto& [s, r] : c) cands.push_back({s, r});
        return metrics::average_precision(cands);
      },
      py::arg("candidates"), "Candidates are (score, relevant) tuples.");

  // -- analysis
  m.def("silverman_bandwidth", [](std::vector<double> v) { return analysis::silverman_bandwidth(v); });
  m.def(
      "kde_overlap",
      [](std::vector<double> upper, std::vector<double> lower) {
        auto r = analysis::kde_overlap(upper, lower);
        py::dict d;
        d["overlap"] = r.overlap;
        d["bandwidth_upper"] = r.grid.bandwidth_upper;
        d["bandwidth_lower"] = r.grid.bandwidth_lower;
        d["x"] = r.grid.x;
        d["f_upper"] = r.grid.upper;
        d["f_lower"] = r.grid.lower;
        return d;
      },
      py::arg("upper"), py::arg("lower"));
  m.def("alignment", [](std::vector<std::pair<std::vector<double>, std::vector<double>>> p) {
    return analysis::alignment(p);
  });
  m.def("uniformity", [](std::vector<std::vector<double>> e) { return analysis::uniformity(e); });
  m.def(
      "ngram_jaccard",
      [](std::vector<std::string> a, std::vector<std::string> b, std::size_t n) {
        return analysis::ngram_jaccard(a, b, n).similarity;
      },
      py::arg("corpus_a"), py::arg("corpus_b"), py::arg("n"));
}
