#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ip2cp/embedder.hpp"
#include "ip2cp/raster.hpp"

namespace ip2cp {

// Linear decision rule w.x + b over embeddings.
struct SvmModel {
    std::vector<double> weights;
    double bias = 0.0;
    bool trained = false;

    std::size_t dim() const { return weights.size(); }
    double decision(std::span<const float> x) const;
    bool operator==(const SvmModel&) const = default;
};

struct SvmConfig {
    double lambda = 1e-3;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SvmFitReport {
    std::vector<double> objective;  // regularised hinge objective after each epoch
    std::size_t training_errors = 0;
};

// Minimises lambda/2 |w|^2 + mean(max(0, 1 - y (w.x + b))) with y = -1 for
// NoDamage and +1 for WithDamage, by full-batch subgradient steps of size
// 1 / (lambda t). Throws DataError for single-class or non-finite input.
SvmModel fit_svm(std::span<const Embedding> points, std::span<const BinaryLabel> labels, const SvmConfig& cfg,
                 SvmFitReport* report = nullptr);

double svm_objective(const SvmModel& model, std::span<const Embedding> points, std::span<const BinaryLabel> labels,
                     double lambda);

// w.x + b >= 0 -> WithDamage. Throws DataError if untrained, ShapeError on dimension mismatch.
BinaryLabel svm_predict(const SvmModel& model, const Embedding& point);

// svm_predict(model, forward(net, patch)).
BinaryLabel predict_patch(const EmbedderNet& net, const SvmModel& model, const RasterImage& patch);

// "IP2CPSVM", u32 version, u32 dim, then dim weights and the bias as float32 LE.
inline constexpr std::uint32_t kSvmFormatVersion = 1;
std::vector<std::uint8_t> serialize_svm(const SvmModel& model);
SvmModel deserialize_svm(std::span<const std::uint8_t> bytes);
void save_svm(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_svm(const std::filesystem::path& path);

}  // namespace ip2cp
