#ifndef FGSAN_TRAIN_HPP
#define FGSAN_TRAIN_HPP

#include "fgsan/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace fgsan {

struct ExperimentConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 500;
    double weight_decay = 0.5;
    std::size_t folds = 8;
    std::size_t repeats = 10;
    /// 0 trains full-batch.
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    /// Record validation accuracy after every epoch.
    bool track_validation = true;
    ModelConfig model;

    void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

struct AdamOptions {
    double learning_rate = 1e-3;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moments per parameter group and the step counter.
struct AdamState {
    std::vector<Vector> first;
    std::vector<Vector> second;
    std::size_t step = 0;

    explicit AdamState(const ParamRegistry& layout);
};

/// One Adam update with bias correction. Decoupled weight decay
/// (p -= lr * wd * p) is applied before the Adam delta, only to groups with
/// `decay` set.
void adam_step(ParamRegistry& params, const ParamRegistry& grads, AdamState& state, const AdamOptions& options);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_bce = 0.0;
    double train_kl = 0.0;
    double val_acc = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

/// Thrown when the loss becomes non-finite.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t epoch, const std::string& what)
        : std::runtime_error(what), epoch_(epoch) {}
    std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

struct TrainResult {
    FgsanParams params;
    TrainHistory history;
};

/// Trains from scratch. Random streams (init, shuffling, selector noise) are
/// derived from `seed`.
TrainResult train_one(const ExperimentConfig& config, const std::vector<const PreparedSample*>& train_set,
                      const std::vector<const PreparedSample*>& val_set, std::uint64_t seed);

std::vector<double> predict_probabilities(const FgsanParams& params, const ModelConfig& config,
                                          const std::vector<const PreparedSample*>& samples);
MetricsReport evaluate(const FgsanParams& params, const ModelConfig& config,
                       const std::vector<const PreparedSample*>& samples);

/// Class-balanced fold ids (0..folds-1) for every sample. Throws
/// std::invalid_argument if a class has fewer samples than folds.
std::vector<std::size_t> stratified_folds(const std::vector<int>& labels, std::size_t folds, Rng& rng);

struct FoldResult {
    std::size_t repeat = 0;
    std::size_t fold = 0;
    std::vector<std::size_t> val_indices;
    MetricsReport metrics;
    TrainHistory history;
    FgsanParams params;
};

struct MetricStat {
    double mean = 0.0;
    double std = 0.0;
};

struct AggregateReport {
    MetricStat acc;
    MetricStat prec;
    MetricStat sen;
    MetricStat spec;
    std::size_t runs = 0;
};

AggregateReport aggregate(const std::vector<MetricsReport>& reports);
nlohmann::json to_json(const AggregateReport& report);

struct CrossValidationResult {
    std::vector<FoldResult> folds;  // ordered by (repeat, fold)
    AggregateReport aggregate;
};

/// Stratified k-fold CV repeated `config.repeats` times. Fold jobs run on up
/// to `threads` workers (0 reads FGSAN_THREADS, defaulting to the core count).
CrossValidationResult cross_validate(const ExperimentConfig& config, const Dataset& dataset,
                                     std::size_t threads = 0);

std::size_t worker_count_from_env();

}  // namespace fgsan

#endif  // FGSAN_TRAIN_HPP
