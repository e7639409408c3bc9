#include "ip2cp/classifier.hpp"

#include <cmath>
#include <cstring>

#include "binary_io.hpp"
#include "ip2cp/error.hpp"

namespace ip2cp {
namespace {

constexpr char kMagic[8] = {'I', 'P', '2', 'C', 'P', 'S', 'V', 'M'};

double sign_of(BinaryLabel l) { return l == BinaryLabel::WithDamage ? 1.0 : -1.0; }

}  // namespace

double SvmModel::decision(std::span<const float> x) const {
    double s = bias;
    for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * static_cast<double>(x[i]);
    return s;
}

void SvmConfig::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("SVM lambda must be > 0");
    if (epochs == 0) throw ConfigError("SVM epochs must be >= 1");
}

double svm_objective(const SvmModel& model, std::span<const Embedding> points, std::span<const BinaryLabel> labels,
                     double lambda) {
    double reg = 0.0;
    for (double w : model.weights) reg += w * w;
    double hinge = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        hinge += std::max(0.0, 1.0 - sign_of(labels[i]) * model.decision(points[i].coords));
    return 0.5 * lambda * reg + hinge / static_cast<double>(points.size());
}

SvmModel fit_svm(std::span<const Embedding> points, std::span<const BinaryLabel> labels, const SvmConfig& cfg,
                 SvmFitReport* report) {
    cfg.validate();
    if (points.size() != labels.size())
        throw ShapeError("fit_svm: " + std::to_string(points.size()) + " points but " +
                         std::to_string(labels.size()) + " labels");
    if (points.empty()) throw DataError("fit_svm: no training points");
    const std::size_t dim = points[0].dim();
    bool has[2] = {false, false};
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].dim() != dim) throw ShapeError("fit_svm: points have inconsistent dimensions");
        for (float v : points[i].coords)
            if (!std::isfinite(v)) throw DataError("fit_svm: non-finite coordinate in point " + std::to_string(i));
        has[static_cast<int>(labels[i])] = true;
    }
    if (!has[0] || !has[1])
        throw DataError(std::string("fit_svm: training set has no ") + (has[0] ? "with_damage" : "no_damage") +
                        " points");

    SvmModel model;
    model.weights.assign(dim, 0.0);
    model.trained = true;
    const double n = static_cast<double>(points.size());
    std::vector<double> gw(dim);
    for (std::size_t t = 1; t <= cfg.epochs; ++t) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double y = sign_of(labels[i]);
            if (y * model.decision(points[i].coords) < 1.0) {
                for (std::size_t k = 0; k < dim; ++k) gw[k] -= y * points[i].coords[k];
                gb -= y;
            }
        }
        const double eta = 1.0 / (cfg.lambda * static_cast<double>(t));
        for (std::size_t k = 0; k < dim; ++k)
            model.weights[k] -= eta * (cfg.lambda * model.weights[k] + gw[k] / n);
        model.bias -= eta * gb / n;
        if (report) report->objective.push_back(svm_objective(model, points, labels, cfg.lambda));
    }
    // Stored parameters are float32; keep the in-memory model identical to its file form.
    for (auto& w : model.weights) w = static_cast<float>(w);
    model.bias = static_cast<float>(model.bias);
    if (report) {
        report->training_errors = 0;
        for (std::size_t i = 0; i < points.size(); ++i)
            if (svm_predict(model, points[i]) != labels[i]) ++report->training_errors;
    }
    return model;
}

BinaryLabel svm_predict(const SvmModel& model, const Embedding& point) {
    if (!model.trained) throw DataError("svm_predict: model is not trained");
    if (point.dim() != model.dim())
        throw ShapeError("svm_predict: embedding dimension " + std::to_string(point.dim()) +
                         " does not match SVM dimension " + std::to_string(model.dim()));
    return model.decision(point.coords) >= 0.0 ? BinaryLabel::WithDamage : BinaryLabel::NoDamage;
}

BinaryLabel predict_patch(const EmbedderNet& net, const SvmModel& model, const RasterImage& patch) {
    return svm_predict(model, forward(net, patch));
}

std::vector<std::uint8_t> serialize_svm(const SvmModel& model) {
    if (!model.trained) throw DataError("save_svm: model is not trained");
    detail::ByteWriter w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kSvmFormatVersion);
    w.u32(static_cast<std::uint32_t>(model.dim()));
    for (double v : model.weights) w.f32(static_cast<float>(v));
    w.f32(static_cast<float>(model.bias));
    return std::move(w).take();
}

SvmModel deserialize_svm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw NotAModelFileError("not an SVM file (missing IP2CPSVM magic)");
    detail::ByteReader r(bytes, "SVM file");
    r.skip(sizeof kMagic);
    const std::uint32_t version = r.u32();
    if (version != kSvmFormatVersion)
        throw FormatError("SVM file version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kSvmFormatVersion) + ")");
    const std::uint32_t dim = r.u32();
    const auto values = r.floats(static_cast<std::size_t>(dim) + 1);
    r.expect_end();
    SvmModel model;
    model.weights.assign(values.begin(), values.end() - 1);
    model.bias = values.back();
    model.trained = true;
    for (float v : values)
        if (!std::isfinite(v)) throw FormatError("SVM file contains non-finite parameters");
    return model;
}

void save_svm(const SvmModel& model, const std::filesystem::path& path) {
    detail::write_file(path, serialize_svm(model));
}

SvmModel load_svm(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    try {
        return deserialize_svm(bytes);
    } catch (const TruncatedFileError& e) {
        throw TruncatedFileError(path.string() + ": " + e.what(), e.expected_bytes, e.actual_bytes);
    } catch (const NotAModelFileError& e) {
        throw NotAModelFileError(path.string() + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace ip2cp
