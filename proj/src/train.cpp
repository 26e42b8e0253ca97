#include "fgsan/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace fgsan {

void ExperimentConfig::validate() const {
    if (folds < 2) {
        throw std::invalid_argument("experiment: folds must be >= 2");
    }
    if (epochs < 1) {
        throw std::invalid_argument("experiment: epochs must be >= 1");
    }
    if (repeats < 1) {
        throw std::invalid_argument("experiment: repeats must be >= 1");
    }
    if (!(learning_rate > 0.0) || !(weight_decay >= 0.0)) {
        throw std::invalid_argument("experiment: learning_rate must be > 0 and weight_decay >= 0");
    }
    model.validate();
}

nlohmann::json to_json(const ExperimentConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"epochs", c.epochs},
            {"weight_decay", c.weight_decay},
            {"folds", c.folds},
            {"repeats", c.repeats},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_eps", c.adam_eps},
            {"track_validation", c.track_validation},
            {"model", to_json(c.model)}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.folds = j.at("folds").get<std::size_t>();
    c.repeats = j.at("repeats").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.track_validation = j.at("track_validation").get<bool>();
    c.model = model_config_from_json(j.at("model"));
    c.validate();
    return c;
}

AdamState::AdamState(const ParamRegistry& layout) {
    for (const auto& g : layout) {
        first.push_back(Vector::Zero(static_cast<Eigen::Index>(g.values.size())));
        second.push_back(Vector::Zero(static_cast<Eigen::Index>(g.values.size())));
    }
}

void adam_step(ParamRegistry& params, const ParamRegistry& grads, AdamState& state, const AdamOptions& o) {
    require_same_layout(params, grads);
    if (state.first.size() != params.size()) {
        throw ShapeError("adam_step: moment state does not match parameter layout");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(o.beta1, t);
    const double correction2 = 1.0 - std::pow(o.beta2, t);
    for (std::size_t g = 0; g < params.size(); ++g) {
        auto values = params[g].values;
        const auto grad = grads[g].values;
        auto& m = state.first[g];
        auto& v = state.second[g];
        if (static_cast<std::size_t>(m.size()) != values.size()) {
            throw ShapeError("adam_step: moment shape mismatch in '" + params[g].name + "'");
        }
        const double decay = params[g].decay ? o.learning_rate * o.weight_decay : 0.0;
        for (std::size_t k = 0; k < values.size(); ++k) {
            const auto idx = static_cast<Eigen::Index>(k);
            m[idx] = o.beta1 * m[idx] + (1.0 - o.beta1) * grad[k];
            v[idx] = o.beta2 * v[idx] + (1.0 - o.beta2) * grad[k] * grad[k];
            const double m_hat = m[idx] / correction1;
            const double v_hat = v[idx] / correction2;
            values[k] -= decay * values[k];
            values[k] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.eps);
        }
    }
}

std::vector<double> predict_probabilities(const FgsanParams& params, const ModelConfig& config,
                                          const std::vector<const PreparedSample*>& samples) {
    const Vector mask = evaluation_mask(params, config);
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto* s : samples) {
        out.push_back(forward_probability(params, config, *s->features, s->view, mask));
    }
    return out;
}

MetricsReport evaluate(const FgsanParams& params, const ModelConfig& config,
                       const std::vector<const PreparedSample*>& samples) {
    std::vector<int> truth;
    truth.reserve(samples.size());
    for (const auto* s : samples) {
        truth.push_back(s->label);
    }
    return compute_metrics(threshold_predictions(predict_probabilities(params, config, samples)), truth);
}

TrainResult train_one(const ExperimentConfig& config, const std::vector<const PreparedSample*>& train_set,
                      const std::vector<const PreparedSample*>& val_set, std::uint64_t seed) {
    config.validate();
    if (train_set.empty()) {
        throw std::invalid_argument("train_one: empty training split");
    }
    const auto& first = *train_set.front();
    Rng init_rng = Rng::derive(seed, {1});
    Rng shuffle_rng = Rng::derive(seed, {2});
    Rng noise_rng = Rng::derive(seed, {3});

    TrainResult result;
    result.params = init_params(config.model, first.features->cols(),
                                static_cast<std::size_t>(first.features->rows()), init_rng);
    FgsanParams grads = zeros_like(result.params);
    ParamRegistry param_reg = result.params.registry();
    ParamRegistry grad_reg = grads.registry();
    AdamState adam(param_reg);
    const AdamOptions options{config.learning_rate, config.weight_decay, config.beta1, config.beta2,
                              config.adam_eps};

    const std::size_t batch = config.batch_size == 0 ? train_set.size()
                                                     : std::min(config.batch_size, train_set.size());
    std::vector<const PreparedSample*> order = train_set;
    std::vector<const PreparedSample*> chunk;
    const auto regions = result.params.selector.gate_logits.size();
    Vector noise(regions);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        if (batch < order.size()) {
            // Fisher-Yates with the project generator.
            for (std::size_t i = order.size() - 1; i > 0; --i) {
                std::swap(order[i], order[shuffle_rng.below(i + 1)]);
            }
        }
        EpochRecord record;
        record.epoch = epoch;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            chunk.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(start + batch, order.size())));
            for (Eigen::Index i = 0; i < regions; ++i) {
                noise[i] = noise_rng.uniform_open();
            }
            for (auto& g : grad_reg) {
                std::fill(g.values.begin(), g.values.end(), 0.0);
            }
            const double kl_scale = static_cast<double>(chunk.size()) / static_cast<double>(order.size());
            LossBreakdown loss;
            try {
                loss = batch_loss(result.params, config.model, chunk, noise, &grads, kl_scale);
            } catch (const NumericError& e) {
                throw DivergenceError(epoch, "training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
            }
            if (!std::isfinite(loss.total)) {
                throw DivergenceError(epoch, "training diverged at epoch " + std::to_string(epoch));
            }
            record.train_bce += loss.bce;
            record.train_kl = loss.kl;
            adam_step(param_reg, grad_reg, adam, options);
        }
        record.train_loss = record.train_bce + config.model.kl_weight * record.train_kl;
        if (config.track_validation && !val_set.empty()) {
            record.val_acc = evaluate(result.params, config.model, val_set).acc;
        }
        result.history.push_back(record);
    }
    return result;
}

std::vector<std::size_t> stratified_folds(const std::vector<int>& labels, std::size_t folds, Rng& rng) {
    if (folds < 2) {
        throw std::invalid_argument("stratified_folds: folds must be >= 2");
    }
    std::vector<std::size_t> assignment(labels.size(), 0);
    // The second class continues the round-robin where the first stopped,
    // which keeps fold sizes within one of each other.
    std::size_t offset = 0;
    for (int cls : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) {
                members.push_back(i);
            }
        }
        if (members.size() < folds) {
            throw std::invalid_argument("stratified_folds: class " + std::to_string(cls) + " has " +
                                        std::to_string(members.size()) + " samples for " +
                                        std::to_string(folds) + " folds; a fold would miss it");
        }
        for (std::size_t i = members.size() - 1; i > 0; --i) {
            std::swap(members[i], members[rng.below(i + 1)]);
        }
        for (std::size_t k = 0; k < members.size(); ++k) {
            assignment[members[k]] = (offset + k) % folds;
        }
        offset += members.size();
    }
    return assignment;
}

AggregateReport aggregate(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) {
        throw std::invalid_argument("aggregate: no reports");
    }
    auto stat = [&reports](double MetricsReport::*field) {
        const double n = static_cast<double>(reports.size());
        double sum = 0.0;
        for (const auto& r : reports) {
            sum += r.*field;
        }
        MetricStat s;
        s.mean = sum / n;
        if (reports.size() > 1) {
            double sq = 0.0;
            for (const auto& r : reports) {
                sq += (r.*field - s.mean) * (r.*field - s.mean);
            }
            s.std = std::sqrt(sq / (n - 1.0));
        }
        return s;
    };
    AggregateReport out;
    out.acc = stat(&MetricsReport::acc);
    out.prec = stat(&MetricsReport::prec);
    out.sen = stat(&MetricsReport::sen);
    out.spec = stat(&MetricsReport::spec);
    out.runs = reports.size();
    return out;
}

nlohmann::json to_json(const AggregateReport& r) {
    auto stat = [](const MetricStat& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}}; };
    return {{"acc", stat(r.acc)}, {"prec", stat(r.prec)}, {"sen", stat(r.sen)}, {"spec", stat(r.spec)},
            {"runs", r.runs}};
}

std::size_t worker_count_from_env() {
    if (const char* env = std::getenv("FGSAN_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) {
            return static_cast<std::size_t>(v);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

CrossValidationResult cross_validate(const ExperimentConfig& config, const Dataset& dataset, std::size_t threads) {
    config.validate();
    if (dataset.samples.size() < config.folds) {
        throw std::invalid_argument("cross_validate: fewer samples than folds");
    }
    const auto prepared = prepare(dataset, config.model.graph);
    const auto labels = dataset.labels();

    struct Job {
        std::size_t repeat;
        std::size_t fold;
        std::vector<std::size_t> train_idx;
        std::vector<std::size_t> val_idx;
    };
    std::vector<Job> jobs;
    for (std::size_t rep = 0; rep < config.repeats; ++rep) {
        Rng fold_rng = Rng::derive(config.seed, {100, rep});
        const auto assignment = stratified_folds(labels, config.folds, fold_rng);
        for (std::size_t f = 0; f < config.folds; ++f) {
            Job job{rep, f, {}, {}};
            for (std::size_t i = 0; i < assignment.size(); ++i) {
                (assignment[i] == f ? job.val_idx : job.train_idx).push_back(i);
            }
            jobs.push_back(std::move(job));
        }
    }

    CrossValidationResult result;
    result.folds.resize(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            try {
                const auto& job = jobs[j];
                std::vector<const PreparedSample*> train_set;
                std::vector<const PreparedSample*> val_set;
                for (auto i : job.train_idx) train_set.push_back(&prepared[i]);
                for (auto i : job.val_idx) val_set.push_back(&prepared[i]);
                const std::uint64_t run_seed = Rng::derive(config.seed, {200, job.repeat, job.fold}).next_u64();
                auto trained = train_one(config, train_set, val_set, run_seed);
                auto& out = result.folds[j];
                out.repeat = job.repeat;
                out.fold = job.fold;
                out.val_indices = job.val_idx;
                out.metrics = evaluate(trained.params, config.model, val_set);
                out.history = std::move(trained.history);
                out.params = std::move(trained.params);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = jobs.size();
            }
        }
    };
    const std::size_t workers = std::min(threads == 0 ? worker_count_from_env() : threads, jobs.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    std::vector<MetricsReport> reports;
    for (const auto& f : result.folds) {
        reports.push_back(f.metrics);
    }
    result.aggregate = aggregate(reports);
    return result;
}

}  // namespace fgsan
