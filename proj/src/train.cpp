#include "maxdrop/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace maxdrop {

float lr_at(const TrainConfig& cfg, int epoch) {
    int decays = 0;
    for (int d : cfg.decay_epochs)
        if (d <= epoch) ++decays;
    float lr = cfg.lr0;
    for (int i = 0; i < decays; ++i) lr *= cfg.lr_decay_factor;
    return lr;
}

void sgd_nesterov_step(std::span<float> param, std::span<const float> grad,
                       std::span<float> velocity, float lr, float momentum,
                       float weight_decay) {
    if (param.size() != grad.size() || param.size() != velocity.size())
        throw std::invalid_argument("sgd_nesterov_step: size mismatch");
    for (std::size_t i = 0; i < param.size(); ++i) {
        const float g = grad[i] + weight_decay * param[i];
        const float v = momentum * velocity[i] + g;
        velocity[i] = v;
        param[i] -= lr * (g + momentum * v);
    }
}

SyntheticDataset SyntheticDataset::make(int count, std::uint64_t seed) {
    SyntheticDataset ds;
    ds.images.reserve(count);
    ds.labels.reserve(count);
    const float centers[4][2] = {{4.5f, 4.5f}, {4.5f, 22.5f}, {22.5f, 4.5f}, {22.5f, 22.5f}};
    const float ch_weight[3] = {1.0f, 0.85f, 0.7f};
    for (int i = 0; i < count; ++i) {
        const int label = i % 2;
        Rng rng(Rng::hash(seed, static_cast<std::uint64_t>(i)));
        float cy = 13.5f, cx = 13.5f;
        if (label == 1) {
            const int corner = static_cast<int>(rng.next_u64() % 4);
            cy = centers[corner][0];
            cx = centers[corner][1];
        }
        Tensor img(Shape{1, 3, 28, 28});
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 28; ++k)
                for (int l = 0; l < 28; ++l) {
                    const float dy = static_cast<float>(k) - cy;
                    const float dx = static_cast<float>(l) - cx;
                    const float blob = std::exp(-(dy * dy + dx * dx) / (2.0f * 4.5f * 4.5f));
                    const float v = 0.8f * ch_weight[j] * blob + 0.2f * rng.next_float();
                    img.at(0, j, k, l) = std::clamp(v, 0.0f, 1.0f);
                }
        ds.images.push_back(std::move(img));
        ds.labels.push_back(label);
    }
    return ds;
}

ToyNet::ToyNet(DropConfig drop_cfg, std::uint64_t seed, int in_h, int in_w, int classes)
    : ToyNet(drop_cfg, Rng(seed), in_h, in_w, classes) {}

ToyNet::ToyNet(DropConfig drop_cfg, Rng&& rng, int in_h, int in_w, int classes)
    : conv1(3, 8, rng),
      conv2(8, 16, rng),
      fc(16 * (in_h / 4) * (in_w / 4), classes, rng),
      drop(drop_cfg) {}

std::vector<std::span<float>> ToyNet::param_views() {
    return {conv1.w, conv1.b, conv2.w, conv2.b, fc.w, fc.b};
}

std::vector<std::span<float>> ToyNet::grad_views() {
    return {conv1.gw, conv1.gb, conv2.gw, conv2.gb, fc.gw, fc.gb};
}

Tensor ToyNet::forward(const Tensor& x, Mode mode, std::uint64_t step) {
    Tensor a = relu1.forward(conv1.forward(x));
    DropConfig c1 = drop;
    c1.mode = mode;
    c1.seed = Rng::hash(drop.seed, 2 * step);
    if (mode == Mode::Train) ++train_mask_applications;
    if (freeze_masks) {
        a = drop_backward(a, mask1, c1);
    } else {
        DropResult r = drop_forward(a, c1);
        a = std::move(r.output);
        mask1 = std::move(r.mask);
    }
    a = pool1.forward(a);
    a = relu2.forward(conv2.forward(a));
    DropConfig c2 = drop;
    c2.mode = mode;
    c2.seed = Rng::hash(drop.seed, 2 * step + 1);
    if (mode == Mode::Train) ++train_mask_applications;
    if (freeze_masks) {
        a = drop_backward(a, mask2, c2);
    } else {
        DropResult r = drop_forward(a, c2);
        a = std::move(r.output);
        mask2 = std::move(r.mask);
    }
    a = pool2.forward(a);
    return fc.forward(a);
}

Tensor ToyNet::backward(const Tensor& dlogits, Mode mode) {
    DropConfig c = drop;
    c.mode = mode;
    Tensor g = fc.backward(dlogits);
    g = pool2.backward(g);
    g = drop_backward(g, mask2, c);
    g = relu2.backward(g);
    g = conv2.backward(g);
    g = pool1.backward(g);
    g = drop_backward(g, mask1, c);
    g = relu1.backward(g);
    return conv1.backward(g);
}

void MetricsLog::write_csv(std::ostream& out) const {
    out << "epoch,lr,train_loss,train_acc,val_loss,val_acc\n";
    for (const auto& r : rows)
        out << r.epoch << ',' << r.lr << ',' << r.train_loss << ',' << r.train_acc
            << ',' << r.val_loss << ',' << r.val_acc << '\n';
}

namespace {

Tensor make_batch(const SyntheticDataset& data, const std::vector<int>& idx,
                  int begin, int end, const AugmentPlan* plan, Rng* aug_rng,
                  std::vector<int>& labels_out) {
    const int b = end - begin;
    const Shape s0 = data.images[idx[begin]].shape;
    Tensor batch(Shape{b, s0.c, s0.h, s0.w});
    labels_out.resize(b);
    for (int i = 0; i < b; ++i) {
        Tensor img = data.images[idx[begin + i]];
        if (plan) img = plan->apply(img, *aug_rng);
        std::copy(img.data.begin(), img.data.end(),
                  batch.data.begin() + static_cast<std::size_t>(i) * img.size());
        labels_out[i] = data.labels[idx[begin + i]];
    }
    return batch;
}

}  // namespace

std::pair<float, float> evaluate(ToyNet& net, const SyntheticDataset& data,
                                 int batch_size) {
    std::vector<int> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    double loss_sum = 0.0;
    int correct = 0;
    std::vector<int> labels;
    for (int begin = 0; begin < data.size(); begin += batch_size) {
        const int end = std::min(data.size(), begin + batch_size);
        Tensor batch = make_batch(data, idx, begin, end, nullptr, nullptr, labels);
        Tensor logits = net.forward(batch, Mode::Infer);
        loss_sum += static_cast<double>(nn::softmax_xent(logits, labels, nullptr)) *
                    (end - begin);
        const auto pred = nn::predict(logits);
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (pred[i] == labels[i]) ++correct;
    }
    return {static_cast<float>(loss_sum / data.size()),
            static_cast<float>(correct) / static_cast<float>(data.size())};
}

MetricsLog train(const TrainConfig& cfg, const SyntheticDataset& train_set,
                 const SyntheticDataset& val_set, ToyNet* net_out) {
    ToyNet net(cfg.drop, cfg.seed);
    auto params = net.param_views();
    auto grads = net.grad_views();
    std::vector<std::vector<float>> velocity;
    for (const auto& p : params) velocity.emplace_back(p.size(), 0.0f);

    std::vector<int> idx(train_set.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng shuffle_rng(Rng::hash(cfg.seed, 0x5A17ULL));

    MetricsLog log;
    std::uint64_t step = 0;
    std::vector<int> labels;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const float lr = lr_at(cfg, epoch);
        // Fisher-Yates with the deterministic rng
        for (int i = train_set.size() - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.next_u64() %
                                           static_cast<std::uint64_t>(i + 1));
            std::swap(idx[i], idx[j]);
        }
        Rng aug_rng(Rng::hash(cfg.seed ^ 0xA06ULL, static_cast<std::uint64_t>(epoch)));
        double loss_sum = 0.0;
        int correct = 0;
        for (int begin = 0; begin < train_set.size(); begin += cfg.batch_size) {
            const int end = std::min(train_set.size(), begin + cfg.batch_size);
            Tensor batch = make_batch(train_set, idx, begin, end,
                                      cfg.augment.steps.empty() ? nullptr : &cfg.augment,
                                      &aug_rng, labels);
            Tensor logits = net.forward(batch, Mode::Train, step);
            Tensor dlogits;
            const float loss = nn::softmax_xent(logits, labels, &dlogits);
            if (!std::isfinite(loss))
                throw std::runtime_error("train: loss became non-finite at epoch " +
                                         std::to_string(epoch) + ", step " +
                                         std::to_string(step));
            loss_sum += static_cast<double>(loss) * (end - begin);
            const auto pred = nn::predict(logits);
            for (std::size_t i = 0; i < pred.size(); ++i)
                if (pred[i] == labels[i]) ++correct;
            net.backward(dlogits, Mode::Train);
            for (std::size_t p = 0; p < params.size(); ++p)
                sgd_nesterov_step(params[p], grads[p], velocity[p], lr, cfg.momentum,
                                  cfg.weight_decay);
            ++step;
        }
        const auto [val_loss, val_acc] = evaluate(net, val_set);
        log.rows.push_back(EpochMetrics{
            epoch, lr, static_cast<float>(loss_sum / train_set.size()),
            static_cast<float>(correct) / static_cast<float>(train_set.size()),
            val_loss, val_acc});
    }
    if (net_out) *net_out = std::move(net);
    return log;
}

}  // namespace maxdrop
