#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "neurodenoise/datasynth.hpp"
#include "neurodenoise/trainer.hpp"

using namespace neurodenoise;

namespace {

ModelConfig tiny_config(const std::string& kind = "gsn") {
    ModelConfig cfg;
    cfg.fullband_widths = {6};
    cfg.subband_widths = {4, 4, 4};
    cfg.groupings = {32, 48, 64};
    cfg.filter_orders = {2, 1, 0};
    cfg.neuron_kind = kind;
    return cfg;
}

TrainItem make_item(double seconds, uint64_t seed) {
    AudioBuffer clean = toy_speech(seconds, seed);
    AudioBuffer noise = toy_noise(seconds, seed + 1000);
    auto [noisy, scaled] = mix_at_snr(clean, noise, 5.0);
    return TrainItem{noisy, clean};
}

}  // namespace

TEST_CASE("training config validation") {
    TrainingConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainingConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainingConfig{};
    cfg.grad_clip_norm = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("clip_grad_norm rescales an exact norm-100 gradient to 10") {
    // two parameter vectors whose gradients have global L2 norm 100
    std::vector<double> v1(3, 0.0), g1{60.0, 0.0, 0.0};
    std::vector<double> v2(2, 0.0), g2{80.0, 0.0};
    std::vector<ParamRef> params{
        {"a", v1.data(), g1.data(), 3},
        {"b", v2.data(), g2.data(), 2},
    };
    double pre = clip_grad_norm(params, 10.0);
    CHECK(pre == doctest::Approx(100.0).epsilon(1e-12));
    double post = std::sqrt(g1[0] * g1[0] + g2[0] * g2[0]);
    CHECK(post == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(g1[0] == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(g2[0] == doctest::Approx(8.0).epsilon(1e-12));

    // below the cap nothing changes
    pre = clip_grad_norm(params, 10.0);
    CHECK(pre == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(g1[0] == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("AdamW single-parameter hand step") {
    double value = 1.0;
    double grad = 0.5;
    std::vector<ParamRef> params{{"w", &value, &grad, 1}};
    TrainingConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.01;
    AdamW opt(params, cfg);
    opt.step();

    // t = 1: m_hat = grad, v_hat = grad^2  ->  update = grad / (|grad| + eps)
    double m_hat = grad;
    double v_hat = grad * grad;
    double expected = 1.0 - 0.1 * (m_hat / (std::sqrt(v_hat) + cfg.adam_eps) + 0.01 * 1.0);
    CHECK(value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("bptt_step produces finite losses and updates weights") {
    Model model;
    model.init(tiny_config(), 5);
    TrainingConfig cfg;
    cfg.batch_size = 2;
    std::vector<TrainItem> batch{make_item(0.2, 1), make_item(0.2, 2)};
    AdamW opt(model.params(), cfg);

    std::vector<double> before;
    for (auto& p : model.params())
        for (Eigen::Index i = 0; i < p.size; ++i) before.push_back(p.value[i]);

    LossBreakdown loss = bptt_step(model, batch, opt, cfg);
    CHECK(std::isfinite(loss.total));
    CHECK(loss.tf >= 0.0);
    CHECK(loss.si_sdr_db >= -60.0);
    CHECK(loss.si_sdr_db <= 60.0);

    bool changed = false;
    std::size_t idx = 0;
    for (auto& p : model.params())
        for (Eigen::Index i = 0; i < p.size; ++i, ++idx)
            if (p.value[i] != before[idx]) changed = true;
    CHECK(changed);
}

TEST_CASE("batch loss is the mean of per-item losses") {
    Model model;
    model.init(tiny_config(), 5);
    std::vector<TrainItem> batch{make_item(0.2, 3), make_item(0.2, 4)};
    LossBreakdown a = compute_loss(model, batch[0], false);
    LossBreakdown b = compute_loss(model, batch[1], false);

    TrainingConfig cfg;
    AdamW opt(model.params(), cfg);
    LossBreakdown mean = bptt_step(model, batch, opt, cfg);
    CHECK(mean.total == doctest::Approx(0.5 * (a.total + b.total)).epsilon(1e-9));
    CHECK(mean.tf == doctest::Approx(0.5 * (a.tf + b.tf)).epsilon(1e-9));
}

TEST_CASE("fixed seeds make training deterministic across runs") {
    auto run = [] {
        Model model;
        model.init(tiny_config(), 11);
        TrainingConfig cfg;
        std::vector<TrainItem> batch{make_item(0.2, 7), make_item(0.2, 8)};
        AdamW opt(model.params(), cfg);
        std::vector<double> losses;
        for (int s = 0; s < 3; ++s) losses.push_back(bptt_step(model, batch, opt, cfg).total);
        return losses;
    };
    auto a = run();
    auto b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("loss decreases on a tiny toy task") {
    Model model;
    model.init(tiny_config(), 13);
    TrainingConfig cfg;
    cfg.learning_rate = 2e-3;
    std::vector<TrainItem> batch{make_item(0.25, 21), make_item(0.25, 22)};
    AdamW opt(model.params(), cfg);

    double first = 0.0, last = 0.0;
    const int steps = 60;
    std::vector<double> history;
    for (int s = 0; s < steps; ++s) history.push_back(bptt_step(model, batch, opt, cfg).total);
    // compare averages of the first and last quarters for robustness
    int q = steps / 4;
    for (int s = 0; s < q; ++s) first += history[static_cast<std::size_t>(s)];
    for (int s = steps - q; s < steps; ++s) last += history[static_cast<std::size_t>(s)];
    CHECK(last / q < first / q);
}

TEST_CASE("gradient check on a tiny relaxed model stays below 1e-4") {
    Model model;
    ModelConfig cfg = tiny_config();
    // finite differences of the magnitude term are ill-conditioned at
    // near-zero bins; check the smooth part of the objective here (the
    // magnitude gradient is FD-verified directly in the loss tests)
    cfg.loss.alpha = 0.0;
    model.init(cfg, 17);
    TrainItem item = make_item(0.12, 31);
    GradCheckResult res = grad_check(model, item, 1e-4, 60, 3);
    CHECK(res.checked >= 40);
    CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("a corrupted analytic gradient is caught by finite differences") {
    // negative control: verify the checker can actually fail by comparing a
    // deliberately wrong analytic value against its finite difference
    Model model;
    model.init(tiny_config(), 19);
    TrainItem item = make_item(0.12, 33);

    model.zero_grads();
    LossBreakdown base = compute_loss_and_grads(model, item, /*relaxed=*/true);
    auto params = model.params();
    REQUIRE(!params.empty());

    // pick the parameter with the largest gradient and corrupt it
    double* value = nullptr;
    double analytic = 0.0;
    for (auto& p : params)
        for (Eigen::Index i = 0; i < p.size; ++i)
            if (std::abs(p.grad[i]) > std::abs(analytic)) {
                analytic = p.grad[i];
                value = &p.value[i];
            }
    REQUIRE(value != nullptr);
    double corrupted = analytic * 2.0 + 1.0;

    double eps = 1e-4;
    double saved = *value;
    *value = saved + eps;
    double up = compute_loss(model, item, true).total;
    *value = saved - eps;
    double down = compute_loss(model, item, true).total;
    *value = saved;
    double numeric = (up - down) / (2.0 * eps);
    double rel = std::abs(corrupted - numeric) /
                 std::max({std::abs(corrupted), std::abs(numeric), 1e-6});
    CHECK(rel > 1e-2);
    (void)base;
}

TEST_CASE("non-finite gradients raise a diagnostic error") {
    Model model;
    model.init(tiny_config(), 23);
    // blow up a weight so the forward pass overflows
    auto params = model.params();
    params[0].value[0] = std::numeric_limits<double>::infinity();
    TrainingConfig cfg;
    std::vector<TrainItem> batch{make_item(0.2, 41)};
    AdamW opt(model.params(), cfg);
    CHECK_THROWS_AS(bptt_step(model, batch, opt, cfg), std::runtime_error);
}

TEST_CASE("evaluate_si_snr_i is zero for the identity model") {
    Model model;
    ModelConfig cfg = tiny_config();
    model.make_identity(cfg);
    std::vector<TrainItem> items{make_item(0.2, 51)};
    // identity output == noisy input (up to STFT round trip), so improvement ~ 0
    double imp = evaluate_si_snr_i(model, items);
    CHECK(std::abs(imp) < 1e-6);
}

TEST_CASE("max_threads respects the environment cap") {
    CHECK(max_threads() >= 1);
}
