#include "fgsan/synth.hpp"

#include "fgsan/rng.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace fgsan {

void SynthConfig::validate() const {
    if (n_regions == 0 || feature_dim == 0 || timesteps == 0) {
        throw std::invalid_argument("synth: n_regions, feature_dim and timesteps must be positive");
    }
    if (samples_per_class < 1) {
        throw std::invalid_argument("synth: samples_per_class must be >= 1");
    }
    std::set<std::size_t> seen;
    for (auto r : informative_regions) {
        if (r >= n_regions) {
            throw std::invalid_argument("synth: informative region " + std::to_string(r) +
                                        " out of range");
        }
        if (!seen.insert(r).second) {
            throw std::invalid_argument("synth: duplicate informative region " + std::to_string(r));
        }
    }
    if (!(signal_strength >= 0.0)) {
        throw std::invalid_argument("synth: signal_strength must be >= 0");
    }
    if (community_count < 1 || community_count > n_regions) {
        throw std::invalid_argument("synth: community_count must lie in [1, n_regions]");
    }
    if (!(edge_noise >= 0.0 && edge_noise < 1.0)) {
        throw std::invalid_argument("synth: edge_noise must lie in [0, 1)");
    }
    auto check_range = [](double lo, double hi, const char* what) {
        if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi)) {
            throw std::invalid_argument(std::string("synth: invalid ") + what + " coherence range");
        }
    };
    check_range(within_low, within_high, "within-community");
    check_range(cross_low, cross_high, "cross-community");
}

nlohmann::json to_json(const SynthConfig& c) {
    return {{"n_regions", c.n_regions},
            {"feature_dim", c.feature_dim},
            {"timesteps", c.timesteps},
            {"samples_per_class", c.samples_per_class},
            {"informative_regions", c.informative_regions},
            {"signal_strength", c.signal_strength},
            {"community_count", c.community_count},
            {"edge_noise", c.edge_noise},
            {"within_coherence", {c.within_low, c.within_high}},
            {"cross_coherence", {c.cross_low, c.cross_high}},
            {"seed", c.seed}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
    SynthConfig c;
    c.n_regions = j.at("n_regions").get<std::size_t>();
    c.feature_dim = j.at("feature_dim").get<std::size_t>();
    c.timesteps = j.at("timesteps").get<std::size_t>();
    c.samples_per_class = j.at("samples_per_class").get<std::size_t>();
    c.informative_regions = j.at("informative_regions").get<std::vector<std::size_t>>();
    c.signal_strength = j.at("signal_strength").get<double>();
    c.community_count = j.at("community_count").get<std::size_t>();
    c.edge_noise = j.at("edge_noise").get<double>();
    c.within_low = j.at("within_coherence").at(0).get<double>();
    c.within_high = j.at("within_coherence").at(1).get<double>();
    c.cross_low = j.at("cross_coherence").at(0).get<double>();
    c.cross_high = j.at("cross_coherence").at(1).get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

Dataset generate(const SynthConfig& config) {
    config.validate();
    const auto n = static_cast<Eigen::Index>(config.n_regions);
    const auto d = static_cast<Eigen::Index>(config.feature_dim);

    // Shared structure: community base coherence and the class direction.
    Rng structure = Rng::derive(config.seed, {0});
    auto community = [&](Eigen::Index r) {
        return static_cast<std::size_t>(r) * config.community_count / config.n_regions;
    };
    Tensor2 base = Tensor2::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const bool same = community(i) == community(j);
            const double v = same ? structure.uniform(config.within_low, config.within_high)
                                  : structure.uniform(config.cross_low, config.cross_high);
            base(i, j) = v;
            base(j, i) = v;
        }
    }
    Vector direction(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        direction[k] = structure.normal();
    }
    direction /= direction.norm();

    Dataset dataset;
    const std::size_t total = 2 * config.samples_per_class;
    dataset.samples.reserve(total);
    for (std::size_t s = 0; s < total; ++s) {
        Rng rng = Rng::derive(config.seed, {1, s});
        DynamicBrainGraph g;
        g.label = static_cast<int>(s % 2);
        g.node_features.resize(n, d);
        for (Eigen::Index k = 0; k < g.node_features.size(); ++k) {
            g.node_features.data()[k] = rng.normal();
        }
        if (g.label == 1) {
            for (auto r : config.informative_regions) {
                g.node_features.row(static_cast<Eigen::Index>(r)) +=
                    config.signal_strength * direction.transpose();
            }
        }
        g.connectivity.reserve(config.timesteps);
        for (std::size_t t = 0; t < config.timesteps; ++t) {
            Tensor2 m = Tensor2::Identity(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = i + 1; j < n; ++j) {
                    const double v = std::clamp(base(i, j) + config.edge_noise * rng.normal(), 0.0, 1.0);
                    m(i, j) = v;
                    m(j, i) = v;
                }
            }
            g.connectivity.push_back(std::move(m));
        }
        dataset.samples.push_back(std::move(g));
    }

    dataset.region_names.reserve(config.n_regions);
    for (std::size_t r = 0; r < config.n_regions; ++r) {
        char name[32];
        std::snprintf(name, sizeof(name), "region_%02zu", r);
        dataset.region_names.emplace_back(name);
    }
    dataset.extra["planted_regions"] = config.informative_regions;
    dataset.extra["signal_strength"] = config.signal_strength;
    dataset.extra["synth_config"] = to_json(config);
    return dataset;
}

std::set<std::size_t> planted_truth(const SynthConfig& config) {
    return {config.informative_regions.begin(), config.informative_regions.end()};
}

double recovery_score(const std::vector<std::size_t>& found, const std::set<std::size_t>& truth) {
    if (truth.empty()) {
        return 1.0;
    }
    std::size_t hits = 0;
    for (auto r : found) {
        hits += truth.count(r);
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::vector<double> region_mean_difference(const Dataset& dataset) {
    const auto n = static_cast<Eigen::Index>(dataset.regions());
    const auto d = static_cast<Eigen::Index>(dataset.feature_dim());
    Tensor2 sum[2] = {Tensor2::Zero(n, d), Tensor2::Zero(n, d)};
    double count[2] = {0.0, 0.0};
    for (const auto& g : dataset.samples) {
        sum[g.label] += g.node_features;
        count[g.label] += 1.0;
    }
    if (count[0] == 0.0 || count[1] == 0.0) {
        throw std::invalid_argument("region_mean_difference: both classes must be present");
    }
    const Tensor2 diff = sum[1] / count[1] - sum[0] / count[0];
    std::vector<double> out(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        out[static_cast<std::size_t>(r)] = diff.row(r).norm();
    }
    return out;
}

}  // namespace fgsan
