#include "fgsan/experiment.hpp"

#include "fgsan/checkpoint.hpp"
#include "fgsan/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace fgsan {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw ResultsError("cannot write '" + path.string() + "'");
    }
    out << text;
    if (!out) {
        throw ResultsError("failed while writing '" + path.string() + "'");
    }
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ResultsError("missing '" + path.string() + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ResultsError("malformed '" + path.string() + "': " + e.what());
    }
}

fs::path fold_dir(const fs::path& dir, std::size_t index) {
    return dir / "folds" / ("fold_" + std::to_string(index));
}

// fold_{i} directories in numeric order.
std::vector<fs::path> list_fold_dirs(const fs::path& results_dir) {
    std::vector<std::pair<std::size_t, fs::path>> found;
    const auto root = results_dir / "folds";
    if (!fs::is_directory(root)) {
        return {};
    }
    for (const auto& entry : fs::directory_iterator(root)) {
        const auto name = entry.path().filename().string();
        if (!entry.is_directory() || name.rfind("fold_", 0) != 0) {
            continue;
        }
        try {
            found.emplace_back(std::stoul(name.substr(5)), entry.path());
        } catch (const std::exception&) {
            continue;
        }
    }
    std::sort(found.begin(), found.end());
    std::vector<fs::path> out;
    for (auto& f : found) {
        out.push_back(std::move(f.second));
    }
    return out;
}

nlohmann::json markers_json(const std::vector<Biomarker>& markers) { return biomarkers_to_json(markers); }

// Variant directories of an ablation run, in the order recorded by
// ablation.json when present.
std::vector<fs::path> variant_dirs(const fs::path& dir) {
    std::vector<fs::path> out;
    if (fs::exists(dir / "ablation.json")) {
        const auto summary = read_json(dir / "ablation.json");
        for (const auto& row : summary.at("variants")) {
            out.push_back(dir / row.at("variant").get<std::string>());
        }
        return out;
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "aggregate.json")) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

DatasetInfo DatasetInfo::describe(const Dataset& dataset, const std::string& path) {
    DatasetInfo info;
    info.path = path;
    info.region_names = dataset.region_names;
    if (dataset.extra.contains("planted_regions")) {
        info.planted_regions = dataset.extra.at("planted_regions").get<std::vector<std::size_t>>();
    }
    return info;
}

nlohmann::json to_json(const DatasetInfo& info) {
    nlohmann::json j = {{"path", info.path}, {"region_names", info.region_names}};
    if (!info.planted_regions.empty()) {
        j["planted_regions"] = info.planted_regions;
    }
    return j;
}

DatasetInfo dataset_info_from_json(const nlohmann::json& j) {
    DatasetInfo info;
    info.path = j.value("path", std::string{});
    info.region_names = j.value("region_names", std::vector<std::string>{});
    info.planted_regions = j.value("planted_regions", std::vector<std::size_t>{});
    return info;
}

nlohmann::json resolved_config(const ExperimentConfig& config, const DatasetInfo& info) {
    auto j = to_json(config);
    j["dataset"] = to_json(info);
    return j;
}

BiomarkerReport build_biomarker_report(const std::vector<Vector>& fold_probabilities, std::size_t k,
                                       const DatasetInfo& info) {
    if (fold_probabilities.empty()) {
        throw ResultsError("biomarkers: no trained models");
    }
    BiomarkerReport report;
    report.k = k;
    Vector mean = Vector::Zero(fold_probabilities.front().size());
    for (std::size_t i = 0; i < fold_probabilities.size(); ++i) {
        const auto& z = fold_probabilities[i];
        if (z.size() != mean.size()) {
            throw ResultsError("biomarkers: folds disagree on the region count");
        }
        report.per_fold.push_back({i, top_k_biomarkers(z, k, info.region_names)});
        mean += z;
    }
    mean /= static_cast<double>(fold_probabilities.size());
    report.consensus = top_k_biomarkers(mean, k, info.region_names);
    if (!info.planted_regions.empty()) {
        std::vector<std::size_t> found;
        for (const auto& b : report.consensus) {
            found.push_back(b.region_index);
        }
        report.recovery = recovery_score(
            found, std::set<std::size_t>(info.planted_regions.begin(), info.planted_regions.end()));
    }
    return report;
}

nlohmann::json to_json(const BiomarkerReport& report) {
    nlohmann::json per_fold = nlohmann::json::array();
    for (const auto& f : report.per_fold) {
        per_fold.push_back({{"fold", f.index}, {"biomarkers", markers_json(f.markers)}});
    }
    nlohmann::json j = {{"k", report.k}, {"consensus", markers_json(report.consensus)}, {"per_fold", per_fold}};
    if (report.recovery) {
        j["recovery_at_k"] = *report.recovery;
    }
    return j;
}

std::string history_csv(const TrainHistory& history) {
    std::ostringstream out;
    out << "epoch,train_loss,train_bce,train_kl,val_acc\n";
    for (const auto& r : history) {
        out << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.train_bce) << ',' << fmt(r.train_kl) << ','
            << fmt(r.val_acc) << '\n';
    }
    return out.str();
}

TrainHistory read_history_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ResultsError("missing '" + path.string() + "'");
    }
    std::string line;
    std::getline(in, line);
    TrainHistory history;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        EpochRecord r;
        char sep = 0;
        std::istringstream row(line);
        if (!(row >> r.epoch >> sep >> r.train_loss >> sep >> r.train_bce >> sep >> r.train_kl >> sep >>
              r.val_acc)) {
            throw ResultsError("malformed history row in '" + path.string() + "'");
        }
        history.push_back(r);
    }
    return history;
}

void write_cv_results(const fs::path& dir, const ExperimentConfig& config, const DatasetInfo& info,
                      const CrossValidationResult& result, std::size_t k) {
    fs::create_directories(dir);
    write_text(dir / "config.json", resolved_config(config, info).dump(2) + "\n");

    std::vector<Vector> probabilities;
    for (std::size_t i = 0; i < result.folds.size(); ++i) {
        const auto& fold = result.folds[i];
        const auto fdir = fold_dir(dir, i);
        fs::create_directories(fdir);
        write_text(fdir / "history.csv", history_csv(fold.history));
        auto metrics = to_json(fold.metrics);
        metrics["repeat"] = fold.repeat;
        metrics["fold"] = fold.fold;
        metrics["val_indices"] = fold.val_indices;
        write_text(fdir / "metrics.json", metrics.dump(2) + "\n");
        save_checkpoint(fdir / "checkpoint.bin", fold.params, config.model);
        probabilities.push_back(fold.params.selector.probabilities());
    }

    auto aggregate_json = to_json(result.aggregate);
    aggregate_json["variant"] = variant_name(config.model.variant);
    write_text(dir / "aggregate.json", aggregate_json.dump(2) + "\n");

    const auto stale = dir / "biomarkers.json";
    if (config.model.variant == Variant::no_selector) {
        fs::remove(stale);
        return;
    }
    const std::size_t top = std::min<std::size_t>(k, static_cast<std::size_t>(probabilities.front().size()));
    write_text(stale, to_json(build_biomarker_report(probabilities, top, info)).dump(2) + "\n");
}

AggregateReport read_aggregate(const fs::path& results_dir) {
    const auto j = read_json(results_dir / "aggregate.json");
    auto stat = [&j](const char* key) {
        return MetricStat{j.at(key).at("mean").get<double>(), j.at(key).at("std").get<double>()};
    };
    AggregateReport r;
    r.acc = stat("acc");
    r.prec = stat("prec");
    r.sen = stat("sen");
    r.spec = stat("spec");
    r.runs = j.at("runs").get<std::size_t>();
    return r;
}

BiomarkerReport biomarkers_from_results(const fs::path& results_dir, std::size_t k) {
    const auto config = read_json(results_dir / "config.json");
    const auto info = dataset_info_from_json(config.value("dataset", nlohmann::json::object()));
    const auto variant = parse_variant(config.at("model").at("variant").get<std::string>());
    if (variant == Variant::no_selector) {
        throw ResultsError("results in '" + results_dir.string() + "' come from the no_selector variant");
    }
    std::vector<Vector> probabilities;
    for (const auto& fdir : list_fold_dirs(results_dir)) {
        const auto path = fdir / "checkpoint.bin";
        if (fs::exists(path)) {
            probabilities.push_back(load_checkpoint(path).params.selector.probabilities());
        }
    }
    if (probabilities.empty()) {
        throw ResultsError("no checkpoint found under '" + results_dir.string() + "'");
    }
    return build_biomarker_report(probabilities, k, info);
}

void write_biomarker_report(const fs::path& out_dir, const BiomarkerReport& report) {
    fs::create_directories(out_dir);
    write_text(out_dir / "biomarkers.json", to_json(report).dump(2) + "\n");
    write_text(out_dir / "biomarkers.csv", biomarkers_to_csv(report.consensus));
}

void write_ablation_summary(const fs::path& dir, const std::vector<std::pair<Variant, AggregateReport>>& rows) {
    fs::create_directories(dir);
    nlohmann::json variants = nlohmann::json::array();
    std::ostringstream csv;
    csv << "variant," << metrics_csv_header() << '\n';
    for (const auto& [variant, agg] : rows) {
        auto j = to_json(agg);
        j["variant"] = variant_name(variant);
        variants.push_back(j);
        csv << variant_name(variant) << ',' << fmt(100.0 * agg.acc.mean) << ',' << fmt(100.0 * agg.prec.mean)
            << ',' << fmt(100.0 * agg.sen.mean) << ',' << fmt(100.0 * agg.spec.mean) << '\n';
    }
    write_text(dir / "ablation.json", nlohmann::json{{"variants", variants}}.dump(2) + "\n");
    write_text(dir / "ablation.csv", csv.str());
}

TrainHistory mean_history(const fs::path& results_dir) {
    const auto dirs = list_fold_dirs(results_dir);
    if (dirs.empty()) {
        throw ResultsError("no fold histories under '" + results_dir.string() + "'");
    }
    TrainHistory mean;
    for (const auto& fdir : dirs) {
        const auto h = read_history_csv(fdir / "history.csv");
        if (mean.empty()) {
            mean = TrainHistory(h.size());
        } else if (h.size() != mean.size()) {
            throw ResultsError("fold histories differ in length under '" + results_dir.string() + "'");
        }
        for (std::size_t e = 0; e < h.size(); ++e) {
            mean[e].epoch = h[e].epoch;
            mean[e].train_loss += h[e].train_loss;
            mean[e].train_bce += h[e].train_bce;
            mean[e].train_kl += h[e].train_kl;
            mean[e].val_acc += h[e].val_acc;
        }
    }
    const double n = static_cast<double>(dirs.size());
    for (auto& r : mean) {
        r.train_loss /= n;
        r.train_bce /= n;
        r.train_kl /= n;
        r.val_acc /= n;
    }
    return mean;
}

void write_plot_data(const fs::path& results_dir, const fs::path& out_dir) {
    if (!fs::is_directory(results_dir)) {
        throw ResultsError("results directory '" + results_dir.string() + "' does not exist");
    }
    std::vector<fs::path> runs;
    if (fs::exists(results_dir / "aggregate.json")) {
        runs.push_back(results_dir);
    } else {
        runs = variant_dirs(results_dir);
    }
    if (runs.empty()) {
        throw ResultsError("no results found under '" + results_dir.string() + "'");
    }
    fs::create_directories(out_dir);
    write_text(out_dir / "loss_curve.csv", history_csv(mean_history(runs.front())));

    std::ostringstream bars;
    bars << "variant,metric,mean,std\n";
    for (const auto& run : runs) {
        const auto agg = read_json(run / "aggregate.json");
        const auto variant = agg.at("variant").get<std::string>();
        for (const char* metric : {"acc", "prec", "sen", "spec"}) {
            bars << variant << ',' << metric << ',' << fmt(agg.at(metric).at("mean").get<double>()) << ','
                 << fmt(agg.at(metric).at("std").get<double>()) << '\n';
        }
    }
    write_text(out_dir / "metric_bars.csv", bars.str());
}

}  // namespace fgsan
