#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ip2cp/raster.hpp"

namespace ip2cp {

// k x k counts, rows = ground truth, columns = prediction.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t k = 2) : k_(k), counts_(k * k, 0) {}

    std::size_t classes() const { return k_; }
    std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts_[truth * k_ + pred]; }
    std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * k_ + pred]; }
    std::uint64_t total() const;

    ConfusionMatrix transposed() const;
    // Elementwise sum; shards of one evaluation merge this way.
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t k_;
    std::vector<std::uint64_t> counts_;
};

// Throws ShapeError on length mismatch and DataError on a label outside 0..k-1.
ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths, std::size_t k);
ConfusionMatrix confusion(std::span<const BinaryLabel> preds, std::span<const BinaryLabel> truths);

// Rows divided by their sums; all-zero rows stay zero.
std::vector<std::vector<double>> row_normalize(const ConfusionMatrix& cm);

// One-vs-rest F1 = 2TP / (2TP + FP + FN) for class `cls` of any k x k matrix; 0 when the denominator is 0.
double f1_for_class(const ConfusionMatrix& cm, std::size_t cls);
// Binary F1; throws DataError unless k == 2.
double f1_binary(const ConfusionMatrix& cm, std::size_t positive);

inline constexpr std::array<DamageLabel, 4> kDamageClasses = {DamageLabel::NoDamage, DamageLabel::Minor,
                                                              DamageLabel::Major, DamageLabel::Destroyed};

struct PixelwiseF1 {
    ConfusionMatrix confusion{kDamageLabelCount};  // 5x5 over non-Background truth pixels
    std::array<double, 4> per_class{};             // NoDamage, Minor, Major, Destroyed
    std::array<bool, 4> present{};                 // class occurs in truth or prediction
    double macro = 0.0;                            // mean over present classes
};

// Only pixels whose truth is non-Background are evaluated; a Background
// prediction there counts against the true class.
PixelwiseF1 f1_pixelwise(const LabelMask& pred_map, const LabelMask& truth_map);

// Report JSON documents (see README for the layout).
std::string patch_report_json(const ConfusionMatrix& cm);
std::string pixel_report_json(const PixelwiseF1& result);

}  // namespace ip2cp
