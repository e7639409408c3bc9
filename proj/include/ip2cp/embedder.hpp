#pragma once

// Siamese patch embedder: a stack of convolution layers (each followed by a
// rectifier and optional 2x2 max-pool) and one fully-connected layer, trained
// with the squared-distance contrastive loss and hand-derived gradients.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ip2cp/patches.hpp"
#include "ip2cp/raster.hpp"
#include "ip2cp/rng.hpp"

namespace ip2cp {

// Channel-major C x H x W tensor.
template <class T>
struct Tensor {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(std::size_t c, std::size_t h, std::size_t w, T fill = T(0))
        : channels(c), height(h), width(w), data(c * h * w, fill) {}

    T& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
    T at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }
    T* row(std::size_t c, std::size_t y) { return data.data() + (c * height + y) * width; }
    const T* row(std::size_t c, std::size_t y) const { return data.data() + (c * height + y) * width; }
};

// HWC image -> CHW tensor.
template <class T>
Tensor<T> to_tensor(const RasterImage& img);

struct ConvSpec {
    std::size_t in_channels = 3;
    std::size_t out_channels = 8;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t padding = 1;
    bool pool = true;  // 2x2 max-pool, stride 2, after the rectifier

    bool operator==(const ConvSpec&) const = default;
};

struct Architecture {
    std::size_t input_height = 64;
    std::size_t input_width = 64;
    std::vector<ConvSpec> convs;
    std::size_t embed_dim = 2;

    bool operator==(const Architecture&) const = default;
};

// 3x3 kernels, stride 1, padding 1, channels 3 -> 8 -> 16 -> 32, pooling after
// every convolution, then a dense layer to embed_dim.
Architecture default_architecture(std::size_t patch_size = 64, std::size_t embed_dim = 2);

// Spatial bookkeeping for one convolution layer.
struct ConvGeometry {
    std::size_t in_h = 0, in_w = 0;
    std::size_t conv_h = 0, conv_w = 0;  // convolution output
    std::size_t out_h = 0, out_w = 0;    // after optional pooling
};

// Throws ShapeError if the layers do not compose.
std::vector<ConvGeometry> layer_geometry(const Architecture& arch);
std::size_t flat_dim(const Architecture& arch);

template <class T>
struct ConvLayer {
    ConvSpec spec;
    ConvGeometry geom;
    std::vector<T> weights;  // out x in x k x k
    std::vector<T> biases;   // out
};

template <class T>
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<T> weights;  // out x in
    std::vector<T> biases;   // out
};

template <class T>
class BasicEmbedderNet {
public:
    BasicEmbedderNet() = default;
    // Zero-initialised parameters for the given architecture.
    explicit BasicEmbedderNet(const Architecture& arch);

    const Architecture& architecture() const { return arch_; }
    std::size_t embed_dim() const { return arch_.embed_dim; }
    std::size_t parameter_count() const;

    std::vector<ConvLayer<T>>& convs() { return convs_; }
    const std::vector<ConvLayer<T>>& convs() const { return convs_; }
    DenseLayer<T>& dense() { return dense_; }
    const DenseLayer<T>& dense() const { return dense_; }

    // Parameter blocks in a fixed order: conv0 weights, conv0 biases, ..., dense weights, dense biases.
    std::vector<std::span<T>> parameter_blocks();
    std::vector<std::span<const T>> parameter_blocks() const;

    void set_zero();
    bool all_finite() const;

    template <class U>
    BasicEmbedderNet<U> cast() const;

    bool operator==(const BasicEmbedderNet&) const;

private:
    Architecture arch_;
    std::vector<ConvLayer<T>> convs_;
    DenseLayer<T> dense_;
};

using EmbedderNet = BasicEmbedderNet<float>;

struct TrainConfig {
    double margin = 2.0;
    std::size_t epochs = 50;
    std::size_t batch_pairs = 64;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    std::size_t embed_dim = 2;
    // Random quarter turn and flip of every pair member, drawn per pair.
    bool augment = true;

    void validate() const;
};

struct EpochStats {
    double mean_loss = 0.0;
    std::size_t pos_pairs = 0;
    std::size_t neg_pairs = 0;
};

struct TrainStats {
    std::vector<EpochStats> epochs;
    double final_loss = 0.0;
};

struct Embedding {
    std::vector<float> coords;

    std::size_t dim() const { return coords.size(); }
    bool operator==(const Embedding&) const = default;
};

// Uniform weights in +-sqrt(6 / fan_in), zero biases.
template <class T>
BasicEmbedderNet<T> init_net(const Architecture& arch, Rng& rng);
EmbedderNet init_net(const TrainConfig& cfg, std::size_t patch_size, Rng& rng);

template <class T>
std::vector<T> forward(const BasicEmbedderNet<T>& net, const Tensor<T>& input);
Embedding forward(const EmbedderNet& net, const RasterImage& patch);

// d2 if same, max(0, margin - d2) otherwise, d2 = squared Euclidean distance.
template <class T>
T contrastive_loss(std::span<const T> a, std::span<const T> b, bool same, T margin);
double contrastive_loss(const Embedding& a, const Embedding& b, bool same, double margin);

template <class T>
struct LossAndGrad {
    T loss;
    BasicEmbedderNet<T> grad;
};

// Loss of one pair through both weight-shared branches and its exact gradient.
template <class T>
LossAndGrad<T> loss_and_grad(const BasicEmbedderNet<T>& net, const Tensor<T>& a, const Tensor<T>& b, bool same,
                             T margin);

struct PairIndex {
    std::size_t first;
    std::size_t second;
    bool same;

    bool operator==(const PairIndex&) const = default;
};

// Alternating positive/negative pairs (positive first). Each pair's first
// member is uniform over all patches; the partner is uniform over the same
// (positive) or the other (negative) class. Throws DataError if a class is empty.
std::vector<PairIndex> sample_pairs(std::span<const BinaryLabel> labels, std::size_t batch_pairs, Rng& rng);

struct TrainResult {
    EmbedderNet net;
    TrainStats stats;
};

// Optional per-epoch callback (epoch index, stats) for progress logging.
using EpochCallback = std::function<void(std::size_t, const EpochStats&)>;

TrainResult train(const std::vector<LabeledPatch>& patches, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

std::vector<Embedding> embed_all(const EmbedderNet& net, const std::vector<LabeledPatch>& patches);

std::string train_stats_csv(const TrainStats& stats);

// Binary model file: "IP2CPNET", u32 version, u32 embed_dim, u32 layer count,
// then per layer a u32 shape block followed by little-endian float32 parameters.
void save_net(const EmbedderNet& net, const std::filesystem::path& path);
EmbedderNet load_net(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_net(const EmbedderNet& net);
EmbedderNet deserialize_net(std::span<const std::uint8_t> bytes);

inline constexpr std::uint32_t kNetFormatVersion = 1;

}  // namespace ip2cp
