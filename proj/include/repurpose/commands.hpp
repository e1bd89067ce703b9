#ifndef REPURPOSE_COMMANDS_HPP
#define REPURPOSE_COMMANDS_HPP

// Subcommand bodies for the `repurpose` tool. Each takes a fully resolved
// options struct, writes its artifacts, and logs the resolved options to
// `log` so a run can be reproduced.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "repurpose/corpus.hpp"
#include "repurpose/error.hpp"
#include "repurpose/evalbench.hpp"
#include "repurpose/factor.hpp"
#include "repurpose/noir.hpp"
#include "repurpose/simkit.hpp"
#include "repurpose/synthetic.hpp"
#include "repurpose/tsv.hpp"

namespace repurpose::cli {

namespace fs = std::filesystem;

inline constexpr const char* kDataDirEnv = "REPURPOSE_DATA_DIR";

/// Flag value, else $REPURPOSE_DATA_DIR, else the working directory.
inline std::string resolve_data_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
    return ".";
}

inline Corpus load_data_dir(const std::string& dir) {
    const fs::path d(dir);
    return load_corpus((d / "compounds.tsv").string(), (d / "labels.tsv").string(), (d / "activities.tsv").string());
}

class ConfigLog {
  public:
    ConfigLog(std::ostream& out, std::string command) : out_(out), command_(std::move(command)) {}

    template <typename T>
    ConfigLog& operator()(const std::string& key, const T& value) {
        out_ << "[" << command_ << "] " << key << " = " << value << '\n';
        return *this;
    }

  private:
    std::ostream& out_;
    std::string command_;
};

inline std::string join(const std::vector<std::string>& items, char sep = ',') {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += sep;
        out += s;
    }
    return out;
}

// ingest

struct IngestOptions {
    std::string data_dir;
    std::string output;  // optional summary TSV
};

inline void write_corpus_summary(std::ostream& out, const Corpus& corpus) {
    tsv::write_row(out, "key", "value");
    tsv::write_row(out, "compounds", corpus.n_compounds());
    tsv::write_row(out, "targets", corpus.n_targets());
    tsv::write_row(out, "activities", corpus.activities().size());
    tsv::write_row(out, "label_rows", corpus.raw_label_rows());
    for (const auto& source : corpus.source_names()) {
        const auto& table = corpus.labels(source);
        std::size_t assignments = 0;
        for (LabelIndex l = 0; l < table.n_labels(); ++l) assignments += table.corpus_count(l);
        tsv::write_row(out, "labels:" + source, table.n_labels());
        tsv::write_row(out, "assignments:" + source, assignments);
    }
}

inline int run_ingest(const IngestOptions& opt, std::ostream& stdout_, std::ostream& log) {
    const auto dir = resolve_data_dir(opt.data_dir);
    ConfigLog(log, "ingest")("data_dir", dir)("output", opt.output.empty() ? "-" : opt.output);
    const auto corpus = load_data_dir(dir);
    write_corpus_summary(stdout_, corpus);
    if (!opt.output.empty()) {
        auto out = tsv::open_output(opt.output);
        write_corpus_summary(out, corpus);
    }
    return 0;
}

// generate-synthetic

struct GenerateOptions {
    std::string output_dir;
    synthetic::SyntheticSpec spec;
    std::uint64_t seed = 0;
};

inline int run_generate(const GenerateOptions& opt, std::ostream& log) {
    if (opt.output_dir.empty()) throw ConfigError("generate-synthetic: --output-dir is required");
    const auto& s = opt.spec;
    ConfigLog(log, "generate-synthetic")("output_dir", opt.output_dir)("compounds", s.n_compounds)(
        "targets", s.n_targets)("clusters", s.n_clusters)("labels_per_compound", s.labels_per_compound)(
        "label_pool", s.label_pool_size)("core_labels", s.core_labels)("targets_per_cluster", s.targets_per_cluster)(
        "affinity", s.affinity)("label_noise", s.label_noise)("activity_noise", s.activity_noise)(
        "sources", join(s.sources))("seed", opt.seed);
    synthetic::write_synthetic(synthetic::generate_synthetic(s, opt.seed), opt.output_dir);
    return 0;
}

// noir

struct NoirOptions {
    std::string data_dir;
    std::string output_dir = ".";
    std::string target;
    std::vector<std::string> sources{sources::kClassyFire, sources::kOntoChem};
    std::string activity_type = activity::kEC50;
    double threshold_nM = 30.0;
    std::size_t noise_cap = 200'000;
    std::size_t min_count = 2;
    std::size_t set_size = 20;
    std::size_t top = 100;
    /// Hand-edited reference sets; each replaces the computed set of its source.
    std::vector<std::string> reference_files;
};

inline int run_noir(const NoirOptions& opt, std::ostream& log) {
    const auto dir = resolve_data_dir(opt.data_dir);
    if (opt.target.empty()) throw ConfigError("noir: --target is required");
    if (opt.sources.empty()) throw ConfigError("noir: at least one source is required");
    if (opt.top == 0) throw ConfigError("noir: --top must be at least 1");
    ConfigLog(log, "noir")("data_dir", dir)("output_dir", opt.output_dir)("target", opt.target)(
        "sources", join(opt.sources))("activity_type", opt.activity_type)("threshold_nM", opt.threshold_nM)(
        "noise_cap", opt.noise_cap)("min_count", opt.min_count)("set_size", opt.set_size)("top", opt.top)(
        "reference_files", join(opt.reference_files));

    std::map<std::string, noir::ReferenceLabelSet> imported;
    for (const auto& path : opt.reference_files) {
        auto ref = noir::read_reference_set(path);
        if (ref.config.source.empty()) throw ConfigError("noir: reference file has no rows: " + path);
        imported[ref.config.source] = std::move(ref);
    }

    const auto corpus = load_data_dir(dir);
    fs::create_directories(opt.output_dir);
    std::vector<noir::RetrievalResult> results;
    for (const auto& source : opt.sources) {
        noir::ReferenceSetConfig cfg;
        cfg.target = opt.target;
        cfg.source = source;
        cfg.activity_type = opt.activity_type;
        cfg.activity_threshold_nM = opt.threshold_nM;
        cfg.noise_cap = opt.noise_cap;
        cfg.min_relevant_count = opt.min_count;
        cfg.set_size = opt.set_size;
        auto ref = noir::build_reference_set(corpus, cfg);
        if (const auto it = imported.find(source); it != imported.end()) {
            ref.labels = it->second.labels;
            ref.empty_warning = ref.labels.empty();
        }
        if (ref.empty_warning) log << "warning: no reference labels for source " << source << '\n';
        log << "[noir] " << source << ": " << ref.relevant.size() << " relevant compounds, " << ref.candidate_count
            << " candidate labels\n";
        {
            auto out = tsv::open_output((fs::path(opt.output_dir) / ("reference_" + source + ".tsv")).string());
            noir::write_reference_set(out, ref);
        }
        results.push_back(noir::retrieve(corpus, ref, ref.relevant, opt.top));
        auto out = tsv::open_output((fs::path(opt.output_dir) / ("retrieval_" + source + ".tsv")).string());
        noir::write_retrieval(out, results.back());
    }
    if (results.size() < 2) {
        log << "warning: single source, no consensus written\n";
        return 0;
    }
    const auto common = noir::consensus(std::span<const noir::RetrievalResult>(results));
    auto out = tsv::open_output((fs::path(opt.output_dir) / "consensus.tsv").string());
    tsv::write_row(out, "compound_id");
    for (const auto& c : common) tsv::write_row(out, c);
    log << "[noir] consensus: " << common.size() << " compounds\n";
    return 0;
}

// train / evaluate / recommend

struct FactorOptions {
    std::string data_dir;
    factor::TrainConfig train;
    std::vector<std::string> activity_types{activity::kIC50};
    double sim_threshold = 0.0;
};

/// "none" or "jaccard:<SOURCE>"; returns the source, empty for none.
inline std::string parse_similarity(const std::string& spec) {
    if (spec == "none") return {};
    const std::string prefix = "jaccard:";
    if (spec.rfind(prefix, 0) == 0 && spec.size() > prefix.size()) return spec.substr(prefix.size());
    throw ConfigError("unknown similarity '" + spec + "' (expected none or jaccard:<SOURCE>)");
}

inline void log_factor_options(ConfigLog& cl, const std::string& dir, const FactorOptions& o) {
    cl("data_dir", dir)("rank", o.train.rank)("lambda", o.train.lambda)("max_iters", o.train.max_iters)(
        "tol", o.train.rel_tol)("epsilon", o.train.epsilon)("seed", o.train.seed)(
        "activity_types", join(o.activity_types))("sim_threshold", o.sim_threshold);
}

struct TrainOptions {
    FactorOptions factor;
    std::string similarity = "none";
    std::string model_out = "model.tsv";
};

inline int run_train(const TrainOptions& opt, std::ostream& log) {
    const auto dir = resolve_data_dir(opt.factor.data_dir);
    opt.factor.train.validate();
    const auto source = parse_similarity(opt.similarity);
    ConfigLog cl(log, "train");
    log_factor_options(cl, dir, opt.factor);
    cl("similarity", opt.similarity)("model_out", opt.model_out);

    const auto corpus = load_data_dir(dir);
    const auto X = factor::build_interaction_matrix(corpus, opt.factor.activity_types);
    log << "[train] matrix " << X.rows() << " x " << X.cols() << ", " << X.nnz() << " stored entries\n";
    factor::FactorModel model;
    if (source.empty()) {
        model = factor::train_nmf(X, opt.factor.train);
    } else {
        const auto S = simkit::build_similarity_matrix(corpus, source, X.compounds, opt.factor.sim_threshold);
        model = factor::train_csnmf(X, S, opt.factor.train, opt.similarity);
    }
    log << "[train] " << model.iterations() << " iterations, final objective "
        << tsv::format_double(model.objective_trace.back()) << (model.converged ? " (converged)" : "") << '\n';
    auto out = tsv::open_output(opt.model_out);
    factor::save_model(out, model);
    return 0;
}

struct EvaluateOptions {
    FactorOptions factor;
    std::vector<std::string> similarities{"none"};
    std::string output_dir = ".";
    eval::CvConfig cv;
};

inline std::string column_name(const std::string& similarity) {
    const auto source = parse_similarity(similarity);
    return source.empty() ? "NMF" : "CS-NMF (" + source + ")";
}

inline std::string file_slug(const std::string& similarity) {
    const auto source = parse_similarity(similarity);
    return source.empty() ? "nmf" : "csnmf_" + source;
}

inline std::vector<eval::EvalReport> evaluate(const Corpus& corpus, const EvaluateOptions& opt) {
    const auto X = factor::build_interaction_matrix(corpus, opt.factor.activity_types);
    std::vector<eval::EvalReport> reports;
    for (const auto& sim : opt.similarities) {
        const auto source = parse_similarity(sim);
        if (source.empty()) {
            reports.push_back(eval::cross_validate(X, nullptr, opt.factor.train, opt.cv, column_name(sim)));
        } else {
            const auto S = simkit::build_similarity_matrix(corpus, source, X.compounds, opt.factor.sim_threshold);
            reports.push_back(eval::cross_validate(X, &S, opt.factor.train, opt.cv, column_name(sim)));
        }
    }
    return reports;
}

inline int run_evaluate(const EvaluateOptions& opt, std::ostream& stdout_, std::ostream& log) {
    const auto dir = resolve_data_dir(opt.factor.data_dir);
    opt.factor.train.validate();
    opt.cv.recall.validate();
    if (opt.similarities.empty()) throw ConfigError("evaluate: no model columns requested");
    for (const auto& s : opt.similarities) parse_similarity(s);
    std::vector<std::string> ks;
    for (const auto k : opt.cv.recall.k_list) ks.push_back(std::to_string(k));
    ConfigLog cl(log, "evaluate");
    log_factor_options(cl, dir, opt.factor);
    cl("similarities", join(opt.similarities))("folds", opt.cv.n_folds)("cv_seed", opt.cv.seed)("k", join(ks))(
        "sample_size", opt.cv.recall.sample_size)("min_train_targets", opt.cv.recall.min_train_targets)(
        "min_test_targets", opt.cv.recall.min_test_targets)(
        "exclude_training_targets", opt.cv.recall.exclude_training_targets)("curve_max_k", opt.cv.curve_max_k)(
        "output_dir", opt.output_dir);

    const auto corpus = load_data_dir(dir);
    const auto reports = evaluate(corpus, opt);
    fs::create_directories(opt.output_dir);
    {
        auto out = tsv::open_output((fs::path(opt.output_dir) / "report.tsv").string());
        eval::write_report_tsv(out, reports);
    }
    {
        auto out = tsv::open_output((fs::path(opt.output_dir) / "report.txt").string());
        eval::write_report_table(out, reports);
    }
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (reports[i].curve.empty()) continue;
        auto out = tsv::open_output(
            (fs::path(opt.output_dir) / ("rank_recall_" + file_slug(opt.similarities[i]) + ".tsv")).string());
        eval::write_curve(out, reports[i].curve);
    }
    eval::write_report_table(stdout_, reports);
    return 0;
}

struct RecommendOptions {
    std::string data_dir;
    std::string model_path = "model.tsv";
    std::vector<std::string> compounds;
    std::size_t k = 30;
    bool include_known = false;
    std::vector<std::string> activity_types{activity::kIC50};
    std::string output;  // empty: stdout only
};

inline void write_recommendations(std::ostream& out, const Corpus& corpus, const factor::FactorModel& model,
                                  const RecommendOptions& opt) {
    std::map<std::string, std::size_t> row_of, col_of;
    for (std::size_t i = 0; i < model.compounds.size(); ++i) row_of.emplace(model.compounds[i], i);
    for (std::size_t j = 0; j < model.targets.size(); ++j) col_of.emplace(model.targets[j], j);
    tsv::write_row(out, "compound_id", "rank", "target_id", "score");
    for (const auto& id : opt.compounds) {
        const auto it = row_of.find(id);
        if (it == row_of.end()) throw NotFoundError("recommend: compound not in model: " + id);
        std::vector<std::size_t> known;
        if (!opt.include_known) {
            if (const auto c = corpus.find_compound(id)) {
                for (const auto& rec : corpus.activities()) {
                    if (rec.compound != *c) continue;
                    if (std::find(opt.activity_types.begin(), opt.activity_types.end(), rec.type) ==
                        opt.activity_types.end())
                        continue;
                    if (const auto col = col_of.find(corpus.target_id(rec.target)); col != col_of.end())
                        known.push_back(col->second);
                }
            }
            std::sort(known.begin(), known.end());
            known.erase(std::unique(known.begin(), known.end()), known.end());
        }
        const auto ranking = eval::rank_targets(model, it->second, known);
        for (std::size_t p = 0; p < std::min(opt.k, ranking.size()); ++p)
            tsv::write_row(out, id, p + 1, model.targets[ranking[p]],
                           tsv::format_double(factor::predict(model, it->second, ranking[p])));
    }
}

inline int run_recommend(const RecommendOptions& opt, std::ostream& stdout_, std::ostream& log) {
    const auto dir = resolve_data_dir(opt.data_dir);
    if (opt.compounds.empty()) throw ConfigError("recommend: at least one --compound is required");
    if (opt.k == 0) throw ConfigError("recommend: -k must be at least 1");
    ConfigLog(log, "recommend")("data_dir", dir)("model", opt.model_path)("compounds", join(opt.compounds))(
        "k", opt.k)("include_known", opt.include_known)("activity_types", join(opt.activity_types))(
        "output", opt.output.empty() ? "-" : opt.output);
    const auto model = factor::load_model(opt.model_path);
    const auto corpus = load_data_dir(dir);
    write_recommendations(stdout_, corpus, model, opt);
    if (!opt.output.empty()) {
        auto out = tsv::open_output(opt.output);
        write_recommendations(out, corpus, model, opt);
    }
    return 0;
}

}  // namespace repurpose::cli

#endif  // REPURPOSE_COMMANDS_HPP
