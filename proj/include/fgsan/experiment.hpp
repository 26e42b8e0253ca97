#ifndef FGSAN_EXPERIMENT_HPP
#define FGSAN_EXPERIMENT_HPP

#include "fgsan/train.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace fgsan {

/// Raised for missing or inconsistent results directories.
class ResultsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// What a results directory remembers about its input data.
struct DatasetInfo {
    std::string path;
    std::vector<std::string> region_names;
    /// Empty unless the dataset came from the synthetic generator.
    std::vector<std::size_t> planted_regions;

    static DatasetInfo describe(const Dataset& dataset, const std::string& path);
};

nlohmann::json to_json(const DatasetInfo& info);
DatasetInfo dataset_info_from_json(const nlohmann::json& j);

/// Content of config.json: the experiment config plus the dataset description.
nlohmann::json resolved_config(const ExperimentConfig& config, const DatasetInfo& info);

struct FoldBiomarkers {
    std::size_t index = 0;  // position in (repeat, fold) order
    std::vector<Biomarker> markers;
};

struct BiomarkerReport {
    std::size_t k = 0;
    std::vector<FoldBiomarkers> per_fold;
    /// Ranked by mean gate probability across folds.
    std::vector<Biomarker> consensus;
    /// Fraction of planted regions among the consensus top-k, when known.
    std::optional<double> recovery;
};

/// `fold_probabilities` holds one z vector per trained model.
BiomarkerReport build_biomarker_report(const std::vector<Vector>& fold_probabilities, std::size_t k,
                                       const DatasetInfo& info);
nlohmann::json to_json(const BiomarkerReport& report);

/// Writes config.json, folds/fold_{i}/{history.csv, metrics.json,
/// checkpoint.bin, checkpoint.bin.json}, aggregate.json and, unless the
/// variant is no_selector, biomarkers.json (top `k`).
void write_cv_results(const std::filesystem::path& dir, const ExperimentConfig& config, const DatasetInfo& info,
                      const CrossValidationResult& result, std::size_t k = 5);

std::string history_csv(const TrainHistory& history);
TrainHistory read_history_csv(const std::filesystem::path& path);

AggregateReport read_aggregate(const std::filesystem::path& results_dir);

/// Loads every fold checkpoint under `results_dir` and ranks regions.
/// Throws ResultsError when no checkpoint exists or the run had no selector.
BiomarkerReport biomarkers_from_results(const std::filesystem::path& results_dir, std::size_t k);

/// biomarkers.json and biomarkers.csv (consensus table) in `out_dir`.
void write_biomarker_report(const std::filesystem::path& out_dir, const BiomarkerReport& report);

/// ablation.json and ablation.csv summarizing one aggregate per variant.
void write_ablation_summary(const std::filesystem::path& dir,
                            const std::vector<std::pair<Variant, AggregateReport>>& rows);

/// Per-epoch mean of every fold history found under `results_dir`.
TrainHistory mean_history(const std::filesystem::path& results_dir);

/// loss_curve.csv from the first results directory found, metric_bars.csv
/// with one row per (variant, metric). Accepts a single cv directory or an
/// ablation directory holding one subdirectory per variant.
void write_plot_data(const std::filesystem::path& results_dir, const std::filesystem::path& out_dir);

}  // namespace fgsan

#endif  // FGSAN_EXPERIMENT_HPP
