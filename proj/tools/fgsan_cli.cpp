// fgsan: command-line driver for dataset generation, training, cross-validation,
// ablation, biomarker reports, gradient checks and plot data.

#include "fgsan/checkpoint.hpp"
#include "fgsan/experiment.hpp"
#include "fgsan/synth.hpp"
#include "fgsan/train.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fgsan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// Flags shared by train, cv and ablate. Unset flags keep the value from
/// --config (or the built-in defaults).
struct ExperimentFlags {
    std::string data;
    std::string config_file;
    std::string out;
    std::optional<std::string> variant;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> folds;
    std::optional<std::size_t> repeats;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> batch_size;
    std::optional<double> learning_rate;
    std::optional<double> weight_decay;
    std::optional<double> kl_weight;
    std::optional<double> temperature;
    std::optional<double> prior;
    std::vector<Eigen::Index> hidden;
    std::size_t k = 5;

    void attach(CLI::App& cmd, bool with_variant) {
        cmd.add_option("--data", data, "Dataset file");
        cmd.add_option("--config", config_file, "Start from a saved config.json");
        cmd.add_option("--out", out, "Output directory")->required();
        if (with_variant) {
            cmd.add_option("--variant", variant, "full | no_selector | no_spatial")
                ->check(CLI::IsMember({"full", "no_selector", "no_spatial"}));
        }
        cmd.add_option("--seed", seed, "Experiment seed");
        cmd.add_option("--folds", folds, "Cross-validation folds")->check(CLI::Range(2, 1000000));
        cmd.add_option("--repeats", repeats, "Cross-validation repeats")->check(CLI::PositiveNumber);
        cmd.add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
        cmd.add_option("--batch-size", batch_size, "Minibatch size (0 = full batch)");
        cmd.add_option("--lr", learning_rate, "Adam learning rate");
        cmd.add_option("--weight-decay", weight_decay, "Decoupled weight decay");
        cmd.add_option("--kl-weight", kl_weight, "Weight of the gate KL term");
        cmd.add_option("--temperature", temperature, "Relaxed Bernoulli temperature");
        cmd.add_option("--prior", prior, "Prior gate probability");
        cmd.add_option("--hidden", hidden, "Encoder layer widths")->delimiter(',');
        cmd.add_option("--k", k, "Biomarkers to report")->check(CLI::PositiveNumber);
    }

    ExperimentConfig resolve(std::string& data_path) const {
        ExperimentConfig c;
        std::string from_config;
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) {
                throw std::runtime_error("cannot read config '" + config_file + "'");
            }
            const auto j = nlohmann::json::parse(in);
            c = experiment_config_from_json(j);
            if (j.contains("dataset")) {
                from_config = j.at("dataset").value("path", std::string{});
            }
        }
        data_path = data.empty() ? from_config : data;
        if (data_path.empty()) {
            throw CLI::RequiredError("--data");
        }
        if (variant) c.model.variant = parse_variant(*variant);
        if (seed) c.seed = *seed;
        if (folds) c.folds = *folds;
        if (repeats) c.repeats = *repeats;
        if (epochs) c.epochs = *epochs;
        if (batch_size) c.batch_size = *batch_size;
        if (learning_rate) c.learning_rate = *learning_rate;
        if (weight_decay) c.weight_decay = *weight_decay;
        if (kl_weight) c.model.kl_weight = *kl_weight;
        if (temperature) c.model.temperature = *temperature;
        if (prior) c.model.prior_prob = *prior;
        if (!hidden.empty()) c.model.hidden_widths = hidden;
        c.validate();
        return c;
    }
};

void print_table(const std::vector<std::pair<std::string, AggregateReport>>& rows) {
    std::printf("%-12s %16s %16s %16s %16s\n", "variant", "ACC", "PREC", "SEN", "SPEC");
    for (const auto& [name, a] : rows) {
        std::printf("%-12s", name.c_str());
        for (const auto* s : {&a.acc, &a.prec, &a.sen, &a.spec}) {
            std::printf(" %8.2f +- %5.2f", 100.0 * s->mean, 100.0 * s->std);
        }
        std::printf("\n");
    }
}

void print_biomarkers(const BiomarkerReport& report) {
    std::printf("%-4s %-24s %6s %10s\n", "No.", "region", "index", "z");
    for (const auto& b : report.consensus) {
        std::printf("%-4zu %-24s %6zu %10.6f\n", b.rank, b.region_name.c_str(), b.region_index, b.z_score);
    }
    if (report.recovery) {
        std::printf("recovery@%zu: %.2f\n", report.k, *report.recovery);
    }
}

int cmd_synth(const SynthConfig& config, const std::string& out) {
    config.validate();
    const auto dataset = generate(config);
    if (const auto parent = fs::path(out).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    save_dataset(dataset, out);
    std::printf("wrote %zu samples (%zu regions) to %s\n", dataset.samples.size(), dataset.regions(), out.c_str());
    return kExitOk;
}

int cmd_train(const ExperimentFlags& flags, std::size_t holdout) {
    std::string data_path;
    const auto config = flags.resolve(data_path);
    const auto dataset = load_dataset(data_path);
    if (holdout >= config.folds) {
        throw std::invalid_argument("--holdout-fold must be below --folds");
    }
    Rng fold_rng = Rng::derive(config.seed, {100, 0});
    const auto assignment = stratified_folds(dataset.labels(), config.folds, fold_rng);
    const auto prepared = prepare(dataset, config.model.graph);
    std::vector<const PreparedSample*> train_set;
    std::vector<const PreparedSample*> val_set;
    for (std::size_t i = 0; i < prepared.size(); ++i) {
        (assignment[i] == holdout ? val_set : train_set).push_back(&prepared[i]);
    }
    const std::uint64_t run_seed = Rng::derive(config.seed, {200, 0, holdout}).next_u64();
    const auto trained = train_one(config, train_set, val_set, run_seed);
    const auto metrics = evaluate(trained.params, config.model, val_set);

    const fs::path out(flags.out);
    fs::create_directories(out);
    const auto info = DatasetInfo::describe(dataset, data_path);
    std::ofstream(out / "config.json") << resolved_config(config, info).dump(2) << '\n';
    std::ofstream(out / "history.csv") << history_csv(trained.history);
    std::ofstream(out / "metrics.json") << to_json(metrics).dump(2) << '\n';
    save_checkpoint(out / "checkpoint.bin", trained.params, config.model);
    std::printf("%s\n%s\n", metrics_csv_header().c_str(), metrics_csv_row(metrics).c_str());
    return kExitOk;
}

int cmd_cv(const ExperimentFlags& flags) {
    std::string data_path;
    const auto config = flags.resolve(data_path);
    const auto dataset = load_dataset(data_path);
    const auto result = cross_validate(config, dataset);
    write_cv_results(flags.out, config, DatasetInfo::describe(dataset, data_path), result, flags.k);
    print_table({{std::string(variant_name(config.model.variant)), result.aggregate}});
    if (config.model.variant == Variant::no_selector) {
        std::printf("no_selector variant: no gates, biomarkers.json not written\n");
    }
    return kExitOk;
}

int cmd_ablate(const ExperimentFlags& flags) {
    std::string data_path;
    const auto base = flags.resolve(data_path);
    const auto dataset = load_dataset(data_path);
    const auto info = DatasetInfo::describe(dataset, data_path);
    std::vector<std::pair<Variant, AggregateReport>> rows;
    std::vector<std::pair<std::string, AggregateReport>> table;
    for (Variant v : {Variant::full, Variant::no_spatial, Variant::no_selector}) {
        auto config = base;
        config.model.variant = v;
        const auto result = cross_validate(config, dataset);
        write_cv_results(fs::path(flags.out) / std::string(variant_name(v)), config, info, result, flags.k);
        rows.emplace_back(v, result.aggregate);
        table.emplace_back(std::string(variant_name(v)), result.aggregate);
    }
    write_ablation_summary(flags.out, rows);
    print_table(table);
    return kExitOk;
}

int cmd_biomarkers(const std::string& results, const std::string& out, std::size_t k) {
    const auto report = biomarkers_from_results(results, k);
    write_biomarker_report(out.empty() ? fs::path(results) : fs::path(out), report);
    print_biomarkers(report);
    return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, bool corrupt) {
    SynthConfig sc;
    sc.n_regions = 5;
    sc.feature_dim = 4;
    sc.timesteps = 2;
    sc.samples_per_class = 2;
    sc.informative_regions = {1, 3};
    sc.community_count = 1;
    sc.within_low = 0.2;
    sc.within_high = 0.8;
    sc.seed = seed;
    const auto dataset = generate(sc);

    ModelConfig mc;
    mc.hidden_widths = {4, 4, 4};
    Rng rng = Rng::derive(seed, {7});
    auto params = init_params(mc, 4, 5, rng);
    // Move away from the zero-initialised attention, spatial and gate values.
    for (auto& group : params.registry()) {
        for (double& v : group.values) {
            v += 0.3 * rng.normal();
        }
    }
    const auto prepared = prepare(dataset, mc.graph);
    const std::vector<const PreparedSample*> batch{&prepared[0], &prepared[1], &prepared[2]};
    Vector noise(5);
    for (Eigen::Index i = 0; i < noise.size(); ++i) {
        noise[i] = rng.uniform_open();
    }

    auto grads = zeros_like(params);
    batch_loss(params, mc, batch, noise, &grads);
    if (corrupt) {
        grads.selector.gate_logits[0] += 0.5;
    }
    auto param_reg = params.registry();
    const auto grad_reg = grads.registry();
    const auto report = finite_diff_check(
        [&] { return batch_loss(params, mc, batch, noise, nullptr).total; }, param_reg, grad_reg, 1e-4);

    constexpr double kTolerance = 1e-4;
    std::printf("%-24s %14s\n", "group", "max_rel_error");
    for (const auto& g : report.groups) {
        std::printf("%-24s %14.3e%s\n", g.name.c_str(), g.max_rel_error, g.non_differentiable ? "  (kink)" : "");
    }
    const bool ok = report.max_rel_error < kTolerance;
    std::printf("max relative error %.3e: %s\n", report.max_rel_error, ok ? "PASS" : "FAIL");
    return ok ? kExitOk : kExitFailure;
}

int cmd_plot_data(const std::string& results, const std::string& out) {
    write_plot_data(results, out);
    std::printf("wrote loss_curve.csv and metric_bars.csv to %s\n", out.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph spatial attention with Bayesian region selection"};
    app.name("fgsan");
    app.require_subcommand(1);

    SynthConfig synth;
    std::string synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth_cmd->add_option("--out", synth_out, "Dataset file")->required();
    synth_cmd->add_option("--regions", synth.n_regions, "Regions per graph")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--dim", synth.feature_dim, "Feature dimension")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--timesteps", synth.timesteps, "Connectivity matrices per sample")
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--per-class", synth.samples_per_class, "Samples per class")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--informative", synth.informative_regions, "Planted region indices")->delimiter(',');
    synth_cmd->add_option("--signal", synth.signal_strength, "Class signal strength");
    synth_cmd->add_option("--communities", synth.community_count, "Connectivity communities");
    synth_cmd->add_option("--edge-noise", synth.edge_noise, "Per-timestep coherence noise");
    synth_cmd->add_option("--seed", synth.seed, "Generator seed");

    ExperimentFlags train_flags;
    std::size_t holdout = 0;
    auto* train_cmd = app.add_subcommand("train", "Train one model, holding out one stratified fold");
    train_flags.attach(*train_cmd, true);
    train_cmd->add_option("--holdout-fold", holdout, "Fold used for validation");

    ExperimentFlags cv_flags;
    auto* cv_cmd = app.add_subcommand("cv", "Repeated stratified cross-validation");
    cv_flags.attach(*cv_cmd, true);

    ExperimentFlags ablate_flags;
    auto* ablate_cmd = app.add_subcommand("ablate", "Cross-validate full, no_spatial and no_selector");
    ablate_flags.attach(*ablate_cmd, false);

    std::string bio_results;
    std::string bio_out;
    std::size_t bio_k = 5;
    auto* bio_cmd = app.add_subcommand("biomarkers", "Rank regions from trained gates");
    bio_cmd->add_option("--results", bio_results, "cv results directory")->required();
    bio_cmd->add_option("--k", bio_k, "Regions to report")->check(CLI::PositiveNumber);
    bio_cmd->add_option("--out", bio_out, "Output directory (default: the results directory)");

    std::uint64_t gc_seed = 0;
    bool gc_corrupt = false;
    auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every parameter group");
    gc_cmd->add_option("--seed", gc_seed, "Instance seed");
    gc_cmd->add_flag("--corrupt-gradient", gc_corrupt, "Perturb one analytic gradient")->group("");

    std::string plot_results;
    std::string plot_out;
    auto* plot_cmd = app.add_subcommand("plot-data", "Emit CSV series for plotting");
    plot_cmd->add_option("--results", plot_results, "cv or ablation results directory")->required();
    plot_cmd->add_option("--out", plot_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*synth_cmd) return cmd_synth(synth, synth_out);
        if (*train_cmd) return cmd_train(train_flags, holdout);
        if (*cv_cmd) return cmd_cv(cv_flags);
        if (*ablate_cmd) return cmd_ablate(ablate_flags);
        if (*bio_cmd) return cmd_biomarkers(bio_results, bio_out, bio_k);
        if (*gc_cmd) return cmd_gradcheck(gc_seed, gc_corrupt);
        if (*plot_cmd) return cmd_plot_data(plot_results, plot_out);
    } catch (const CLI::RequiredError& e) {
        std::cerr << "fgsan: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "fgsan: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
