#include "doctest.h"
#include "maxdrop/train.hpp"

#include <cmath>
#include <sstream>

using namespace maxdrop;

TEST_CASE("lr schedule reproduces the reference values") {
    TrainConfig cfg;
    cfg.decay_epochs = {60, 120, 160};
    CHECK(lr_at(cfg, 0) == doctest::Approx(0.1f));
    CHECK(lr_at(cfg, 59) == doctest::Approx(0.1f));
    CHECK(lr_at(cfg, 60) == doctest::Approx(0.02f));
    CHECK(lr_at(cfg, 120) == doctest::Approx(0.004f));
    CHECK(lr_at(cfg, 160) == doctest::Approx(0.0008f));
    CHECK(lr_at(cfg, 199) == doctest::Approx(0.0008f));
}

TEST_CASE("nesterov step hand examples") {
    // w=1, g=1, v=0, lr=0.1, mu=0.9 -> v'=1, w' = 1 - 0.1*1.9 = 0.81
    float w = 1.0f, g = 1.0f, v = 0.0f;
    sgd_nesterov_step({&w, 1}, {&g, 1}, {&v, 1}, 0.1f, 0.9f, 0.0f);
    CHECK(v == doctest::Approx(1.0f));
    CHECK(w == doctest::Approx(0.81f));

    // mu = 0, wd = 0 reduces to plain SGD
    w = 2.0f;
    g = 0.5f;
    v = 0.0f;
    sgd_nesterov_step({&w, 1}, {&g, 1}, {&v, 1}, 0.1f, 0.0f, 0.0f);
    CHECK(w == doctest::Approx(2.0f - 0.1f * 0.5f));

    // decay-only step
    w = 1.0f;
    g = 0.0f;
    v = 0.0f;
    sgd_nesterov_step({&w, 1}, {&g, 1}, {&v, 1}, 0.1f, 0.0f, 5e-4f);
    CHECK(w == doctest::Approx(0.99995f));
}

TEST_CASE("toy net shape chain") {
    DropConfig drop{DropVariant::MaxDropoutV2, 0.3f, Mode::Train, NormScope::PerSample, 0};
    for (int b : {1, 4, 32}) {
        ToyNet net(drop, 1);
        Rng rng(50 + b);
        const Tensor logits = net.forward(Tensor::uniform(Shape{b, 3, 28, 28}, rng),
                                          Mode::Infer);
        CHECK(logits.shape == Shape{b, 2, 1, 1});
    }
}

TEST_CASE("whole-net gradient check at initialization") {
    DropConfig drop{DropVariant::MaxDropout, 0.3f, Mode::Train, NormScope::PerSample, 9};
    ToyNet net(drop, 3, 12, 12);  // small spatial dims keep FD affordable
    Rng rng(51);
    const Tensor x = Tensor::uniform(Shape{4, 3, 12, 12}, rng);
    const std::vector<int> labels{0, 1, 0, 1};

    Tensor logits = net.forward(x, Mode::Train, 0);
    Tensor dlogits;
    nn::softmax_xent(logits, labels, &dlogits);
    net.backward(dlogits, Mode::Train);
    net.freeze_masks = true;  // FD probes reuse the same masks

    auto loss_now = [&] {
        const Tensor l = net.forward(x, Mode::Train, 0);
        return nn::softmax_xent(l, labels, nullptr);
    };
    auto params = net.param_views();
    auto grads = net.grad_views();
    auto fd_at = [&](std::size_t layer, std::size_t idx, float eps) {
        const float saved = params[layer][idx];
        params[layer][idx] = saved + eps;
        const double lp = loss_now();
        params[layer][idx] = saved - eps;
        const double lm = loss_now();
        params[layer][idx] = saved;
        return (lp - lm) / (2.0 * static_cast<double>(eps));
    };
    Rng pick(52);
    int checked = 0;
    // Central differences in f32 are unreliable when a relu kink or pool
    // argmax flip falls inside the probe interval, or when the step is so
    // small that the loss delta drowns in rounding. Estimating at two step
    // sizes and requiring agreement weeds those probes out without looking
    // at the analytic value.
    for (int attempt = 0; attempt < 200 && checked < 10; ++attempt) {
        const std::size_t layer = pick.next_u64() % params.size();
        const std::size_t idx = pick.next_u64() % params[layer].size();
        const double fd_small = fd_at(layer, idx, 1e-3f);
        const double fd_large = fd_at(layer, idx, 5e-3f);
        const double a = grads[layer][idx];
        if (std::abs(fd_small) < 1e-4 && std::abs(a) < 1e-4) continue;
        if (std::abs(fd_small - fd_large) >
            5e-3 * std::max(std::abs(fd_small), std::abs(fd_large)))
            continue;
        CHECK(std::abs(fd_small - a) /
                  std::max({std::abs(fd_small), std::abs(a)}) <
              1e-2);
        ++checked;
    }
    CHECK(checked == 10);
}

TEST_CASE("synthetic dataset is deterministic and balanced") {
    const auto a = SyntheticDataset::make(100, 7);
    const auto b = SyntheticDataset::make(100, 7);
    int ones = 0;
    for (int i = 0; i < 100; ++i) {
        CHECK(a.images[i].same_bits(b.images[i]));
        CHECK(a.labels[i] == b.labels[i]);
        ones += a.labels[i];
    }
    CHECK(ones == 50);
    for (float v : a.images[0].data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("evaluate is deterministic and applies no train-mode masks") {
    DropConfig drop{DropVariant::MaxDropoutV2, 0.3f, Mode::Train, NormScope::PerSample, 0};
    ToyNet net(drop, 4);
    const auto data = SyntheticDataset::make(64, 8);
    const std::uint64_t before = net.train_mask_applications;
    const auto [loss1, acc1] = evaluate(net, data);
    const auto [loss2, acc2] = evaluate(net, data);
    CHECK(net.train_mask_applications == before);
    CHECK(loss1 == loss2);
    CHECK(acc1 == acc2);
}

TEST_CASE("short training run learns and logs deterministically") {
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 16;
    cfg.decay_epochs = {3};
    cfg.drop = DropConfig{DropVariant::MaxDropoutV2, 0.2f, Mode::Train,
                          NormScope::PerSample, 0};
    cfg.seed = 12;
    const auto train_set = SyntheticDataset::make(200, 1);
    const auto val_set = SyntheticDataset::make(60, 2);

    const MetricsLog log = train(cfg, train_set, val_set);
    REQUIRE(log.rows.size() == 4);
    CHECK(log.rows.back().train_loss < log.rows.front().train_loss);
    CHECK(log.rows[3].lr == doctest::Approx(0.02f));
    for (const auto& r : log.rows) {
        CHECK(std::isfinite(r.train_loss));
        CHECK(std::isfinite(r.val_loss));
    }

    const MetricsLog replay = train(cfg, train_set, val_set);
    for (std::size_t i = 0; i < log.rows.size(); ++i) {
        CHECK(log.rows[i].train_loss == replay.rows[i].train_loss);
        CHECK(log.rows[i].val_acc == replay.rows[i].val_acc);
    }

    std::ostringstream csv;
    log.write_csv(csv);
    CHECK(csv.str().rfind("epoch,lr,train_loss,train_acc,val_loss,val_acc\n", 0) == 0);
}

TEST_CASE("training with augmentation pipeline stays finite") {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 16;
    cfg.drop = DropConfig{DropVariant::MaxDropout, 0.3f, Mode::Train,
                          NormScope::PerSample, 0};
    cfg.augment.steps = {AugmentStep::crop(28, 28), AugmentStep::hflip(0.5f),
                         AugmentStep::cutout(6)};
    const auto train_set = SyntheticDataset::make(128, 3);
    const auto val_set = SyntheticDataset::make(32, 4);
    const MetricsLog log = train(cfg, train_set, val_set);
    CHECK(log.rows.size() == 2);
}
