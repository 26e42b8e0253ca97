#include "fgsan/numcore.hpp"
#include "fgsan/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace fgsan;

TEST_SUITE("numcore") {

TEST_CASE("sigmoid closed forms") {
    CHECK(sigmoid(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(std::abs(sigmoid(std::log(3.0)) - 0.75) < 1e-15);
    CHECK(std::abs(sigmoid(-std::log(3.0)) - 0.25) < 1e-15);
    CHECK(sigmoid(800.0) == 1.0);
    CHECK(sigmoid(-800.0) >= 0.0);
}

TEST_CASE("sigmoid symmetry and monotonicity on random inputs") {
    Rng rng(11);
    double prev_x = -50.0;
    double prev_s = sigmoid(prev_x);
    for (int k = 0; k < 1000; ++k) {
        const double x = 20.0 * rng.normal();
        CHECK(std::abs(sigmoid(x) + sigmoid(-x) - 1.0) < 1e-12);
    }
    for (double x = -49.5; x < 50.0; x += 0.5) {
        const double s = sigmoid(x);
        CHECK(s >= prev_s);
        prev_x = x;
        prev_s = s;
    }
}

TEST_CASE("logit and softplus") {
    CHECK(std::abs(logit(0.75) - std::log(3.0)) < 1e-14);
    CHECK_THROWS_AS(logit(0.0), std::domain_error);
    CHECK_THROWS_AS(logit(1.0), std::domain_error);
    CHECK(std::abs(softplus(0.0) - std::log(2.0)) < 1e-15);
    CHECK(softplus(1000.0) == doctest::Approx(1000.0));
    CHECK(std::isfinite(softplus(-1000.0)));
}

TEST_CASE("activations round-trip through their names") {
    for (auto act : {Activation::tanh, Activation::relu, Activation::identity, Activation::sigmoid}) {
        CHECK(parse_activation(activation_name(act)) == act);
    }
    CHECK_THROWS_AS(parse_activation("elu"), std::invalid_argument);
}

TEST_CASE("activation derivatives agree with finite differences and with the output form") {
    for (auto act : {Activation::tanh, Activation::identity, Activation::sigmoid}) {
        for (double x : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
            const double h = 1e-6;
            const double numeric = (activate(act, x + h) - activate(act, x - h)) / (2 * h);
            CHECK(std::abs(activate_grad(act, x) - numeric) < 1e-8);
            CHECK(std::abs(activate_grad_from_output(act, activate(act, x)) - activate_grad(act, x)) < 1e-14);
        }
    }
    CHECK(activate_grad(Activation::relu, 1.0) == 1.0);
    CHECK(activate_grad(Activation::relu, -1.0) == 0.0);
}

TEST_CASE("masked_softmax examples") {
    Vector a = masked_softmax(Vector::Zero(2), {true, true});
    CHECK(a[0] == doctest::Approx(0.5));
    CHECK(a[1] == doctest::Approx(0.5));

    Vector one(1);
    one << 5.0;
    CHECK(masked_softmax(one, {true})[0] == doctest::Approx(1.0).epsilon(1e-15));

    Vector l(2);
    l << std::log(2.0), 0.0;
    const Vector b = masked_softmax(l, {true, true});
    CHECK(std::abs(b[0] - 2.0 / 3.0) < 1e-15);
    CHECK(std::abs(b[1] - 1.0 / 3.0) < 1e-15);
}

TEST_CASE("masked_softmax zeroes masked entries and rejects bad input") {
    Vector l(3);
    l << 1.0, 100.0, -2.0;
    const Vector p = masked_softmax(l, {true, false, true});
    CHECK(p[1] == 0.0);
    CHECK(p[0] + p[2] == doctest::Approx(1.0));

    try {
        masked_softmax(l, {false, false, false});
        FAIL("expected an error");
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()) == "empty neighborhood");
    }
    CHECK_THROWS_AS(masked_softmax(l, {true, true}), ShapeError);
}

TEST_CASE("masked_softmax normalization, shift invariance and overflow safety") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(12));
        Vector logits(n);
        std::vector<bool> mask(n);
        bool any = false;
        for (int i = 0; i < n; ++i) {
            logits[i] = 30.0 * rng.normal();
            mask[i] = rng.uniform() < 0.6;
            any = any || mask[i];
        }
        if (!any) {
            mask[0] = true;
        }
        const Vector p = masked_softmax(logits, mask);
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            if (mask[i]) {
                CHECK(p[i] >= 0.0);
                sum += p[i];
            } else {
                CHECK(p[i] == 0.0);
            }
        }
        CHECK(std::abs(sum - 1.0) < 1e-6);

        const double shift = 50.0 * rng.normal();
        const Vector q = masked_softmax((logits.array() + shift).matrix(), mask);
        CHECK((p - q).cwiseAbs().maxCoeff() < 1e-12);
    }
    Vector big(2);
    big << 1000.0, 999.0;
    const Vector p = masked_softmax(big, {true, true});
    CHECK(std::isfinite(p[0]));
    CHECK(std::abs(p[0] - sigmoid(1.0)) < 1e-12);
}

TEST_CASE("finite_diff_check on a quadratic is exact") {
    double w = 3.0;
    double g = 6.0;
    ParamRegistry params{{"w", {&w, 1}, true}};
    ParamRegistry grads{{"w", {&g, 1}, true}};
    const auto report = finite_diff_check([&] { return w * w; }, params, grads, 1e-4);
    CHECK(report.max_rel_error < 1e-8);
    CHECK(report.passed(1e-8));
    CHECK(w == 3.0);
    REQUIRE(report.groups.size() == 1);
    CHECK(report.groups[0].name == "w");
}

TEST_CASE("finite_diff_check flags the kink of |w| at zero") {
    double w = 0.0;
    double g = 0.0;
    ParamRegistry params{{"w", {&w, 1}, true}};
    ParamRegistry grads{{"w", {&g, 1}, true}};
    const auto report = finite_diff_check([&] { return std::abs(w); }, params, grads, 1e-4);
    CHECK(report.non_differentiable);
    CHECK(report.groups[0].non_differentiable);
    CHECK_FALSE(report.passed(1.0));
}

TEST_CASE("finite_diff_check detects a wrong gradient and validates its arguments") {
    double w = 2.0;
    double g = 1.0;
    ParamRegistry params{{"w", {&w, 1}, true}};
    ParamRegistry grads{{"w", {&g, 1}, true}};
    CHECK(finite_diff_check([&] { return w * w; }, params, grads).max_rel_error > 0.5);
    CHECK_THROWS_AS(finite_diff_check([&] { return w; }, params, grads, 1e-2), std::invalid_argument);
    CHECK_THROWS_AS(finite_diff_check([&] { return w; }, params, grads, 1e-8), std::invalid_argument);
    CHECK_THROWS_AS(finite_diff_check([&] { return std::log(w - 2.0); }, params, grads), NumericError);

    double other = 0.0;
    ParamRegistry mismatched{{"v", {&other, 1}, true}};
    CHECK_THROWS_AS(finite_diff_check([&] { return w; }, params, mismatched), ShapeError);
}

}  // TEST_SUITE
