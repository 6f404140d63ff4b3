#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "maxdrop/augment.hpp"
#include "maxdrop/nn.hpp"
#include "maxdrop/regularizers.hpp"

namespace maxdrop {

struct TrainConfig {
    float lr0 = 0.1f;
    float momentum = 0.9f;  // Nesterov
    float weight_decay = 5e-4f;
    float lr_decay_factor = 0.2f;
    std::vector<int> decay_epochs = {6, 12, 16};
    int epochs = 20;
    int batch_size = 32;
    DropConfig drop;  // rate 0 disables dropping (baseline)
    AugmentPlan augment;
    std::uint64_t seed = 0;
};

/// lr0 * decay_factor^(number of decay epochs <= epoch)
float lr_at(const TrainConfig& cfg, int epoch);

/// g' = grad + wd*param; v' = mu*v + g'; param' = param - lr*(g' + mu*v')
void sgd_nesterov_step(std::span<float> param, std::span<const float> grad,
                       std::span<float> velocity, float lr, float momentum,
                       float weight_decay);

/// Two separable classes of noisy 3x28x28 images: a bright center blob vs a
/// bright corner blob. Deterministic given seed, classes balanced.
struct SyntheticDataset {
    std::vector<Tensor> images;  // each (1,3,28,28), values in [0,1]
    std::vector<int> labels;

    static SyntheticDataset make(int count, std::uint64_t seed);
    int size() const { return static_cast<int>(images.size()); }
};

/// conv(3->8) -> relu -> drop -> pool -> conv(8->16) -> relu -> drop ->
/// pool -> dense -> logits(2)
struct ToyNet {
    nn::Conv2d conv1;
    nn::ReluLayer relu1;
    nn::MaxPool2 pool1;
    nn::Conv2d conv2;
    nn::ReluLayer relu2;
    nn::MaxPool2 pool2;
    nn::Dense fc;
    DropConfig drop;
    DropMask mask1, mask2;
    // when set, forward reuses mask1/mask2 instead of recomputing them
    // (finite-difference checks hold the mask constant)
    bool freeze_masks = false;
    std::uint64_t train_mask_applications = 0;

    ToyNet(DropConfig drop_cfg, std::uint64_t seed, int in_h = 28, int in_w = 28,
           int classes = 2);

  private:
    ToyNet(DropConfig drop_cfg, Rng&& rng, int in_h, int in_w, int classes);

  public:

    Tensor forward(const Tensor& x, Mode mode, std::uint64_t step = 0);
    Tensor backward(const Tensor& dlogits, Mode mode);

    std::vector<std::span<float>> param_views();
    std::vector<std::span<float>> grad_views();
};

struct EpochMetrics {
    int epoch;
    float lr;
    float train_loss, train_acc;
    float val_loss, val_acc;
};

struct MetricsLog {
    std::vector<EpochMetrics> rows;
    void write_csv(std::ostream& out) const;
};

/// Mean loss and accuracy with all regularizers in Infer mode.
std::pair<float, float> evaluate(ToyNet& net, const SyntheticDataset& data,
                                 int batch_size = 64);

/// Full training loop. Throws std::runtime_error if the loss goes
/// non-finite.
MetricsLog train(const TrainConfig& cfg, const SyntheticDataset& train_set,
                 const SyntheticDataset& val_set, ToyNet* net_out = nullptr);

}  // namespace maxdrop
