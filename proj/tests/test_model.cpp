#include "fgsan/model.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace fgsan;
using namespace fgsan::testing;

namespace {

ModelConfig small_model(Variant variant = Variant::full) {
    ModelConfig c;
    c.hidden_widths = {4, 4};
    c.variant = variant;
    return c;
}

// Random nonzero parameters so no group sits at a symmetric point.
void perturb(FgsanParams& params, Rng& rng, double scale = 0.3) {
    for (auto& group : params.registry()) {
        for (double& v : group.values) {
            v += scale * rng.normal();
        }
    }
}

std::vector<const PreparedSample*> pointers(const std::vector<PreparedSample>& samples, std::size_t count) {
    std::vector<const PreparedSample*> out;
    for (std::size_t i = 0; i < count && i < samples.size(); ++i) {
        out.push_back(&samples[i]);
    }
    return out;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("variant names round trip") {
    for (auto v : {Variant::full, Variant::no_selector, Variant::no_spatial}) {
        CHECK(parse_variant(variant_name(v)) == v);
    }
    CHECK_THROWS_AS(parse_variant("gat"), std::invalid_argument);
}

TEST_CASE("config defaults and JSON round trip") {
    ModelConfig c;
    CHECK(c.graph.tau == 0.4);
    CHECK(c.graph.max_bucket == 5);
    CHECK(c.temperature == 0.5);
    CHECK(c.prior_prob == 0.1);
    CHECK(c.mlp_hidden_dim() == c.embedding_dim() / 2);
    c.variant = Variant::no_spatial;
    c.kl_weight = 0.25;
    CHECK(to_json(model_config_from_json(to_json(c))) == to_json(c));
}

TEST_CASE("registry has a fixed group order") {
    Rng rng(51);
    auto params = init_params(small_model(), 3, 6, rng);
    const auto reg = params.registry();
    std::vector<std::string> names;
    for (const auto& g : reg) {
        names.push_back(g.name);
    }
    CHECK(names.front() == "encoder.layer0.weight");
    CHECK(std::find(names.begin(), names.end(), "encoder.spatial") != names.end());
    CHECK(std::find(names.begin(), names.end(), "selector.gate_logits") != names.end());
    CHECK(params.selector.gate_logits.size() == 6);
    CHECK(params.selector.gate_logits.isZero(0.0));
    CHECK(params.mlp.hidden_weight.cols() == 2);
}

TEST_CASE("end-to-end gradient matches finite differences for every variant") {
    const Dataset ds = generate(tiny_config(3));
    const ModelConfig base = small_model();
    const auto prepared = prepare(ds, base.graph);
    const auto batch = pointers(prepared, 4);
    for (auto variant : {Variant::full, Variant::no_selector, Variant::no_spatial}) {
        CAPTURE(variant_name(variant));
        ModelConfig config = small_model(variant);
        Rng rng(52);
        FgsanParams params = init_params(config, 3, 6, rng);
        perturb(params, rng);
        Vector noise(6);
        for (Eigen::Index i = 0; i < 6; ++i) {
            noise[i] = rng.uniform_open();
        }
        if (variant == Variant::no_spatial) {
            params.encoder.spatial.bias.setZero();
        }
        // The spatial table is frozen under no_spatial, so it is not checked.
        auto trainable = [variant](ParamRegistry reg) {
            if (variant == Variant::no_spatial) {
                std::erase_if(reg, [](const ParamGroup& g) { return g.name == "encoder.spatial"; });
            }
            return reg;
        };
        for (double kl_scale : {1.0, 0.25}) {
            FgsanParams grads = zeros_like(params);
            batch_loss(params, config, batch, noise, &grads, kl_scale);
            auto reg = trainable(params.registry());
            const auto analytic = trainable(grads.registry());
            const auto report = finite_diff_check(
                [&] { return batch_loss(params, config, batch, noise, nullptr, kl_scale).total; }, reg, analytic);
            CHECK(report.passed(1e-4));
            CHECK(report.max_rel_error < 1e-6);
            CHECK(report.groups.size() == reg.size());
        }
    }
}

TEST_CASE("no_selector has exactly zero KL and ignores the gates") {
    const Dataset ds = generate(tiny_config(4));
    const ModelConfig config = small_model(Variant::no_selector);
    const auto prepared = prepare(ds, config.graph);
    const auto batch = pointers(prepared, 8);
    Rng rng(53);
    FgsanParams params = init_params(config, 3, 6, rng);
    perturb(params, rng);
    FgsanParams grads = zeros_like(params);
    const auto loss = batch_loss(params, config, batch, Vector::Constant(6, 0.3), &grads);
    CHECK(loss.kl == 0.0);
    CHECK(loss.total == loss.bce);
    CHECK(grads.selector.gate_logits.isZero(0.0));
    CHECK(evaluation_mask(params, config).isOnes(0.0));
}

TEST_CASE("no_spatial produces a zero spatial gradient") {
    const Dataset ds = generate(tiny_config(5));
    const ModelConfig config = small_model(Variant::no_spatial);
    const auto prepared = prepare(ds, config.graph);
    Rng rng(54);
    FgsanParams params = init_params(config, 3, 6, rng);
    perturb(params, rng);
    params.encoder.spatial.bias.setZero();
    FgsanParams grads = zeros_like(params);
    batch_loss(params, config, pointers(prepared, 8), Vector::Constant(6, 0.7), &grads);
    CHECK(grads.encoder.spatial.bias.isZero(0.0));
    CHECK_FALSE(grads.encoder.layers[0].weight.isZero(0.0));
}

TEST_CASE("batch loss decomposes into per-sample BCE and scaled KL") {
    const Dataset ds = generate(tiny_config(6));
    const ModelConfig config = small_model();
    const auto prepared = prepare(ds, config.graph);
    Rng rng(55);
    FgsanParams params = init_params(config, 3, 6, rng);
    perturb(params, rng);
    const Vector noise = Vector::Constant(6, 0.4);
    const Vector mask = mask_from_noise(params.selector, noise);
    double bce = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        const double p = forward_probability(params, config, *prepared[i].features, prepared[i].view, mask);
        bce -= prepared[i].label == 1 ? std::log(p) : std::log(1.0 - p);
    }
    const auto loss = batch_loss(params, config, pointers(prepared, 5), noise, nullptr, 0.5);
    CHECK(std::abs(loss.bce - bce) < 1e-10);
    const double kl = bernoulli_kl(params.selector.probabilities(), config.prior_prob);
    CHECK(std::abs(loss.kl - kl) < 1e-12);
    CHECK(std::abs(loss.total - (bce + 0.5 * config.kl_weight * kl)) < 1e-10);
}

TEST_CASE("prediction is invariant to region relabeling") {
    Rng rng(56);
    const Dataset ds = generate(tiny_config(7));
    const ModelConfig config = small_model();
    const auto prepared = prepare(ds, config.graph);
    FgsanParams params = init_params(config, 3, 6, rng);
    perturb(params, rng);
    for (int trial = 0; trial < 100; ++trial) {
        const auto& sample = prepared[static_cast<std::size_t>(trial) % prepared.size()];
        const auto perm = random_permutation(rng, 6);
        const Vector mask = deterministic_mask(params.selector);
        Vector permuted_mask(6);
        for (std::size_t i = 0; i < 6; ++i) {
            permuted_mask[static_cast<Eigen::Index>(i)] = mask[static_cast<Eigen::Index>(perm[i])];
        }
        const double a = forward_probability(params, config, *sample.features, sample.view, mask);
        const double b = forward_probability(params, config, permute_rows(*sample.features, perm),
                                             permute_view(sample.view, perm), permuted_mask);
        CHECK(std::abs(a - b) < 1e-14);
    }
}

TEST_CASE("prepare builds one view per sample") {
    const Dataset ds = generate(tiny_config(8));
    const auto prepared = prepare(ds, GraphViewOptions{});
    REQUIRE(prepared.size() == ds.samples.size());
    for (std::size_t i = 0; i < prepared.size(); ++i) {
        CHECK(prepared[i].features == &ds.samples[i].node_features);
        CHECK(prepared[i].label == ds.samples[i].label);
        CHECK(prepared[i].view.size() == 6);
    }
}

}  // TEST_SUITE
