#include "ip2cp/metrics.hpp"

#include "json.hpp"

#include "ip2cp/error.hpp"

namespace ip2cp {

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
}

ConfusionMatrix ConfusionMatrix::transposed() const {
    ConfusionMatrix out(k_);
    for (std::size_t i = 0; i < k_; ++i)
        for (std::size_t j = 0; j < k_; ++j) out.at(j, i) = at(i, j);
    return out;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (other.k_ != k_) throw ShapeError("cannot merge confusion matrices of different size");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
}

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truths, std::size_t k) {
    if (preds.size() != truths.size())
        throw ShapeError("confusion: " + std::to_string(preds.size()) + " predictions but " +
                         std::to_string(truths.size()) + " truths");
    ConfusionMatrix cm(k);
    const int kk = static_cast<int>(k);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] < 0 || preds[i] >= kk || truths[i] < 0 || truths[i] >= kk)
            throw DataError("confusion: label out of range 0.." + std::to_string(k - 1) + " at item " +
                            std::to_string(i));
        ++cm.at(static_cast<std::size_t>(truths[i]), static_cast<std::size_t>(preds[i]));
    }
    return cm;
}

ConfusionMatrix confusion(std::span<const BinaryLabel> preds, std::span<const BinaryLabel> truths) {
    std::vector<int> p(preds.size()), t(truths.size());
    for (std::size_t i = 0; i < preds.size(); ++i) p[i] = static_cast<int>(preds[i]);
    for (std::size_t i = 0; i < truths.size(); ++i) t[i] = static_cast<int>(truths[i]);
    return confusion(p, t, 2);
}

std::vector<std::vector<double>> row_normalize(const ConfusionMatrix& cm) {
    const std::size_t k = cm.classes();
    std::vector<std::vector<double>> out(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        std::uint64_t row = 0;
        for (std::size_t j = 0; j < k; ++j) row += cm.at(i, j);
        if (row == 0) continue;
        for (std::size_t j = 0; j < k; ++j)
            out[i][j] = static_cast<double>(cm.at(i, j)) / static_cast<double>(row);
    }
    return out;
}

double f1_for_class(const ConfusionMatrix& cm, std::size_t cls) {
    const std::size_t k = cm.classes();
    const std::uint64_t tp = cm.at(cls, cls);
    std::uint64_t fp = 0, fn = 0;
    for (std::size_t j = 0; j < k; ++j) {
        if (j == cls) continue;
        fp += cm.at(j, cls);
        fn += cm.at(cls, j);
    }
    const std::uint64_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

double f1_binary(const ConfusionMatrix& cm, std::size_t positive) {
    if (cm.classes() != 2) throw DataError("f1_binary needs a 2x2 confusion matrix, got " +
                                           std::to_string(cm.classes()) + "x" + std::to_string(cm.classes()));
    if (positive > 1) throw DataError("f1_binary: positive class must be 0 or 1");
    return f1_for_class(cm, positive);
}

PixelwiseF1 f1_pixelwise(const LabelMask& pred_map, const LabelMask& truth_map) {
    if (pred_map.height() != truth_map.height() || pred_map.width() != truth_map.width())
        throw ShapeError("f1_pixelwise: prediction " + std::to_string(pred_map.height()) + "x" +
                         std::to_string(pred_map.width()) + " vs truth " + std::to_string(truth_map.height()) + "x" +
                         std::to_string(truth_map.width()));
    PixelwiseF1 out;
    const auto p = pred_map.labels();
    const auto t = truth_map.labels();
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] == DamageLabel::Background) continue;
        ++out.confusion.at(static_cast<std::size_t>(t[i]), static_cast<std::size_t>(p[i]));
    }
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < kDamageClasses.size(); ++c) {
        const std::size_t cls = static_cast<std::size_t>(kDamageClasses[c]);
        std::uint64_t touched = 0;
        for (std::size_t j = 0; j < kDamageLabelCount; ++j) touched += out.confusion.at(cls, j) + out.confusion.at(j, cls);
        out.present[c] = touched > 0;
        out.per_class[c] = f1_for_class(out.confusion, cls);
        if (out.present[c]) {
            sum += out.per_class[c];
            ++present;
        }
    }
    out.macro = present == 0 ? 0.0 : sum / static_cast<double>(present);
    return out;
}

namespace {

nlohmann::json counts_json(const ConfusionMatrix& cm) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < cm.classes(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < cm.classes(); ++j) row.push_back(cm.at(i, j));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

std::string patch_report_json(const ConfusionMatrix& cm) {
    nlohmann::ordered_json j;
    j["confusion"] = counts_json(cm);
    j["confusion_row_norm"] = row_normalize(cm);
    j["f1"] = f1_binary(cm, static_cast<std::size_t>(BinaryLabel::WithDamage));
    const double nd = f1_binary(cm, 0), wd = f1_binary(cm, 1);
    j["per_class_f1"] = {{"no_damage", nd}, {"with_damage", wd}};
    j["macro_f1"] = (nd + wd) / 2.0;
    return j.dump(2) + "\n";
}

std::string pixel_report_json(const PixelwiseF1& result) {
    nlohmann::ordered_json j;
    j["confusion"] = counts_json(result.confusion);
    j["confusion_row_norm"] = row_normalize(result.confusion);
    j["f1"] = result.macro;
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < kDamageClasses.size(); ++c) {
        const auto name = std::string(to_string(kDamageClasses[c]));
        if (result.present[c]) {
            per[name] = result.per_class[c];
        } else {
            per[name] = nullptr;
        }
    }
    j["per_class_f1"] = per;
    j["macro_f1"] = result.macro;
    return j.dump(2) + "\n";
}

}  // namespace ip2cp
