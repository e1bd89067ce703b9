// repurpose: command-line front end.
//
// Exit codes: 0 success, 1 runtime error, 2 usage or configuration error.

#include <exception>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "repurpose/commands.hpp"

namespace {

using namespace repurpose;

void add_data_dir(CLI::App* cmd, std::string& dir) {
    cmd->add_option("--data-dir", dir,
                    "Directory with compounds.tsv, labels.tsv, activities.tsv (default: $REPURPOSE_DATA_DIR or .)");
}

void add_factor_options(CLI::App* cmd, cli::FactorOptions& o) {
    add_data_dir(cmd, o.data_dir);
    cmd->add_option("--rank", o.train.rank, "Latent dimension")->capture_default_str();
    cmd->add_option("--lambda", o.train.lambda, "Similarity regularization weight")->capture_default_str();
    cmd->add_option("--max-iters", o.train.max_iters, "Maximum multiplicative-update iterations")->capture_default_str();
    cmd->add_option("--tol", o.train.rel_tol, "Stop when the relative objective decrease falls below this")
        ->capture_default_str();
    cmd->add_option("--seed", o.train.seed, "Factor initialization seed")->capture_default_str();
    cmd->add_option("--activity-types", o.activity_types, "Activity types entering the interaction matrix")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--sim-threshold", o.sim_threshold, "Keep similarities >= this value (0 keeps all)")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ontology-based drug repurposing: label retrieval and NMF / CS-NMF recommendation"};
    app.require_subcommand(1);
    app.fallthrough();
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Do not log the resolved configuration");

    cli::IngestOptions ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Load and validate a corpus, print its summary");
    add_data_dir(c_ingest, ingest.data_dir);
    c_ingest->add_option("-o,--output", ingest.output, "Also write the summary TSV here");

    cli::GenerateOptions gen;
    auto* c_gen = app.add_subcommand("generate-synthetic", "Write a planted-cluster synthetic corpus");
    c_gen->add_option("-o,--output-dir", gen.output_dir, "Output directory")->required();
    c_gen->add_option("--compounds", gen.spec.n_compounds)->capture_default_str();
    c_gen->add_option("--targets", gen.spec.n_targets)->capture_default_str();
    c_gen->add_option("--clusters", gen.spec.n_clusters)->capture_default_str();
    c_gen->add_option("--labels-per-compound", gen.spec.labels_per_compound)->capture_default_str();
    c_gen->add_option("--label-pool", gen.spec.label_pool_size, "Private labels per cluster and source")
        ->capture_default_str();
    c_gen->add_option("--core-labels", gen.spec.core_labels, "Labels shared by every cluster member")
        ->capture_default_str();
    c_gen->add_option("--targets-per-cluster", gen.spec.targets_per_cluster, "0: disjoint target blocks")
        ->capture_default_str();
    c_gen->add_option("--affinity", gen.spec.affinity, "In-cluster interaction probability")->capture_default_str();
    c_gen->add_option("--label-noise", gen.spec.label_noise)->capture_default_str();
    c_gen->add_option("--activity-noise", gen.spec.activity_noise)->capture_default_str();
    c_gen->add_option("--sources", gen.spec.sources)->delimiter(',')->capture_default_str();
    c_gen->add_option("--seed", gen.seed)->capture_default_str();

    cli::NoirOptions noir;
    auto* c_noir = app.add_subcommand("noir", "Build reference label sets for a target and retrieve compounds");
    add_data_dir(c_noir, noir.data_dir);
    c_noir->add_option("--target", noir.target, "Target id")->required();
    c_noir->add_option("-o,--output-dir", noir.output_dir)->capture_default_str();
    c_noir->add_option("--sources", noir.sources, "Label sources to query")->delimiter(',')->capture_default_str();
    c_noir->add_option("--activity-type", noir.activity_type)->capture_default_str();
    c_noir->add_option("--threshold", noir.threshold_nM, "Relevant compounds have activity strictly below this (nM)")
        ->capture_default_str();
    c_noir->add_option("--noise-cap", noir.noise_cap, "Drop labels with a larger corpus count")->capture_default_str();
    c_noir->add_option("--min-count", noir.min_count, "Minimum count among relevant compounds")
        ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()))
        ->capture_default_str();
    c_noir->add_option("--set-size", noir.set_size, "Reference labels kept per source")->capture_default_str();
    c_noir->add_option("--top", noir.top, "Compounds retrieved per source")->capture_default_str();
    c_noir->add_option("--reference", noir.reference_files, "Hand-edited reference set TSV (replaces its source)")
        ->check(CLI::ExistingFile);

    cli::TrainOptions train;
    auto* c_train = app.add_subcommand("train", "Train an NMF or CS-NMF model");
    add_factor_options(c_train, train.factor);
    c_train->add_option("--similarity", train.similarity, "none | jaccard:CF | jaccard:OC | jaccard:MORGAN")
        ->capture_default_str();
    c_train->add_option("-o,--model-out", train.model_out)->capture_default_str();

    cli::EvaluateOptions evaluate;
    bool include_train_targets = false;
    auto* c_eval = app.add_subcommand("evaluate", "Cross-validate NMF / CS-NMF: RMSE and recall at k");
    add_factor_options(c_eval, evaluate.factor);
    c_eval->add_option("--similarity", evaluate.similarities,
                       "One report column per value: none | jaccard:<SOURCE> (repeatable)")
        ->capture_default_str();
    c_eval->add_option("--folds", evaluate.cv.n_folds)->capture_default_str();
    c_eval->add_option("--cv-seed", evaluate.cv.seed, "Fold assignment and recall sampling seed")
        ->capture_default_str();
    c_eval->add_option("-k", evaluate.cv.recall.k_list, "Recall cutoffs")->delimiter(',')->capture_default_str();
    c_eval->add_option("--sample-size", evaluate.cv.recall.sample_size, "Compounds sampled per fold")
        ->capture_default_str();
    c_eval->add_option("--min-train-targets", evaluate.cv.recall.min_train_targets)->capture_default_str();
    c_eval->add_option("--min-test-targets", evaluate.cv.recall.min_test_targets)->capture_default_str();
    c_eval->add_flag("--include-train-targets", include_train_targets,
                     "Rank a compound's training targets too when computing recall");
    evaluate.cv.curve_max_k = 100;
    c_eval->add_option("--curve-max-k", evaluate.cv.curve_max_k, "Rank-recall curve length (0 disables)")
        ->capture_default_str();
    c_eval->add_option("-o,--output-dir", evaluate.output_dir)->capture_default_str();

    cli::RecommendOptions recommend;
    auto* c_rec = app.add_subcommand("recommend", "Top-k predicted targets for compounds");
    add_data_dir(c_rec, recommend.data_dir);
    c_rec->add_option("--model", recommend.model_path)->capture_default_str();
    c_rec->add_option("--compound", recommend.compounds, "Compound id (repeatable)")->required();
    c_rec->add_option("-k", recommend.k)->capture_default_str();
    c_rec->add_flag("--include-known", recommend.include_known, "Keep the compound's known targets in the ranking");
    c_rec->add_option("--activity-types", recommend.activity_types, "Activity types defining known targets")
        ->delimiter(',')
        ->capture_default_str();
    c_rec->add_option("-o,--output", recommend.output, "Also write the TSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::ostringstream sink;
    std::ostream& log = quiet ? static_cast<std::ostream&>(sink) : std::cerr;
    try {
        if (*c_ingest) return cli::run_ingest(ingest, std::cout, log);
        if (*c_gen) return cli::run_generate(gen, log);
        if (*c_noir) return cli::run_noir(noir, log);
        if (*c_train) return cli::run_train(train, log);
        if (*c_eval) {
            evaluate.cv.recall.exclude_training_targets = !include_train_targets;
            return cli::run_evaluate(evaluate, std::cout, log);
        }
        if (*c_rec) return cli::run_recommend(recommend, std::cout, log);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
