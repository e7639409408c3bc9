#include "ip2cp/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <type_traits>

#include "ip2cp/error.hpp"
#include "ip2cp/kernels.hpp"

namespace ip2cp {
namespace {

// Float work goes through the dispatched SIMD table; double (the gradient
// verification path) uses plain loops with the same operation order.
template <class T>
void axpy(std::size_t n, T a, const T* x, T* y) {
    if constexpr (std::is_same_v<T, float>) {
        simd::kernels().axpy(n, a, x, y);
    } else {
        for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
    }
}

template <class T>
T dot(std::size_t n, const T* x, const T* y) {
    if constexpr (std::is_same_v<T, float>) {
        return simd::kernels().dot(n, x, y);
    } else {
        T acc = 0;
        for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
        return acc;
    }
}

template <class T>
T sum(std::size_t n, const T* x) {
    if constexpr (std::is_same_v<T, float>) {
        return simd::kernels().sum(n, x);
    } else {
        T acc = 0;
        for (std::size_t i = 0; i < n; ++i) acc += x[i];
        return acc;
    }
}

template <class T>
void relu(std::size_t n, T* x) {
    if constexpr (std::is_same_v<T, float>) {
        simd::kernels().relu(n, x);
    } else {
        for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0 ? x[i] : T(0);
    }
}

template <class T>
void relu_backward(std::size_t n, const T* act, T* g) {
    if constexpr (std::is_same_v<T, float>) {
        simd::kernels().relu_backward(n, act, g);
    } else {
        for (std::size_t i = 0; i < n; ++i) g[i] = act[i] > 0 ? g[i] : T(0);
    }
}

template <class T>
void reshape(Tensor<T>& t, std::size_t c, std::size_t h, std::size_t w) {
    t.channels = c;
    t.height = h;
    t.width = w;
    t.data.assign(c * h * w, T(0));
}

template <class T>
struct BranchCache {
    std::vector<Tensor<T>> padded;  // zero-padded layer inputs
    std::vector<Tensor<T>> act;     // rectified convolution outputs
    std::vector<std::vector<std::uint32_t>> argmax;
    std::vector<Tensor<T>> out;     // layer outputs (pooled when enabled)
    std::vector<T> embedding;
};

template <class T>
void pad_input(const Tensor<T>& in, std::size_t p, Tensor<T>& padded) {
    reshape(padded, in.channels, in.height + 2 * p, in.width + 2 * p);
    for (std::size_t c = 0; c < in.channels; ++c)
        for (std::size_t y = 0; y < in.height; ++y)
            std::copy(in.row(c, y), in.row(c, y) + in.width, padded.row(c, y + p) + p);
}

template <class T>
void conv_forward(const ConvLayer<T>& layer, const Tensor<T>& pad, Tensor<T>& act) {
    const auto& s = layer.spec;
    const auto& g = layer.geom;
    const std::size_t k = s.kernel;
    reshape(act, s.out_channels, g.conv_h, g.conv_w);
    for (std::size_t oc = 0; oc < s.out_channels; ++oc) {
        std::fill(act.row(oc, 0), act.row(oc, 0) + g.conv_h * g.conv_w, layer.biases[oc]);
        for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
            const T* w = layer.weights.data() + (oc * s.in_channels + ic) * k * k;
            for (std::size_t ky = 0; ky < k; ++ky) {
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const T wv = w[ky * k + kx];
                    if (s.stride == 1) {
                        for (std::size_t y = 0; y < g.conv_h; ++y)
                            axpy(g.conv_w, wv, pad.row(ic, y + ky) + kx, act.row(oc, y));
                    } else {
                        for (std::size_t y = 0; y < g.conv_h; ++y) {
                            const T* src = pad.row(ic, y * s.stride + ky) + kx;
                            T* dst = act.row(oc, y);
                            for (std::size_t x = 0; x < g.conv_w; ++x) dst[x] += wv * src[x * s.stride];
                        }
                    }
                }
            }
        }
    }
}

template <class T>
void conv_backward(const ConvLayer<T>& layer, const Tensor<T>& pad, const Tensor<T>& g_act, ConvLayer<T>& grad,
                   Tensor<T>* g_pad) {
    const auto& s = layer.spec;
    const auto& g = layer.geom;
    const std::size_t k = s.kernel;
    if (g_pad) reshape(*g_pad, pad.channels, pad.height, pad.width);
    for (std::size_t oc = 0; oc < s.out_channels; ++oc) {
        grad.biases[oc] += sum(g.conv_h * g.conv_w, g_act.row(oc, 0));
        for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
            const std::size_t base = (oc * s.in_channels + ic) * k * k;
            for (std::size_t ky = 0; ky < k; ++ky) {
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const T wv = layer.weights[base + ky * k + kx];
                    T acc = 0;
                    if (s.stride == 1) {
                        for (std::size_t y = 0; y < g.conv_h; ++y) {
                            acc += dot(g.conv_w, g_act.row(oc, y), pad.row(ic, y + ky) + kx);
                            if (g_pad) axpy(g.conv_w, wv, g_act.row(oc, y), g_pad->row(ic, y + ky) + kx);
                        }
                    } else {
                        for (std::size_t y = 0; y < g.conv_h; ++y) {
                            const T* src = pad.row(ic, y * s.stride + ky) + kx;
                            const T* go = g_act.row(oc, y);
                            T* gp = g_pad ? g_pad->row(ic, y * s.stride + ky) + kx : nullptr;
                            for (std::size_t x = 0; x < g.conv_w; ++x) {
                                acc += go[x] * src[x * s.stride];
                                if (gp) gp[x * s.stride] += wv * go[x];
                            }
                        }
                    }
                    grad.weights[base + ky * k + kx] += acc;
                }
            }
        }
    }
}

template <class T>
void pool_forward(const Tensor<T>& act, Tensor<T>& out, std::vector<std::uint32_t>& argmax) {
    const std::size_t oh = act.height / 2, ow = act.width / 2;
    reshape(out, act.channels, oh, ow);
    argmax.assign(act.channels * oh * ow, 0);
    for (std::size_t c = 0; c < act.channels; ++c) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                std::size_t best = (c * act.height + 2 * y) * act.width + 2 * x;
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = (c * act.height + 2 * y + dy) * act.width + 2 * x + dx;
                        if (act.data[idx] > act.data[best]) best = idx;
                    }
                }
                const std::size_t o = (c * oh + y) * ow + x;
                out.data[o] = act.data[best];
                argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
}

template <class T>
void forward_cached(const BasicEmbedderNet<T>& net, const Tensor<T>& input, BranchCache<T>& cache) {
    const auto& convs = net.convs();
    const auto& arch = net.architecture();
    if (convs.empty()) throw ShapeError("network has no convolution layers");
    if (input.channels != convs[0].spec.in_channels || input.height != arch.input_height ||
        input.width != arch.input_width)
        throw ShapeError("input " + std::to_string(input.channels) + "x" + std::to_string(input.height) + "x" +
                         std::to_string(input.width) + " does not match network input " +
                         std::to_string(convs[0].spec.in_channels) + "x" + std::to_string(arch.input_height) +
                         "x" + std::to_string(arch.input_width));
    const std::size_t L = convs.size();
    cache.padded.resize(L);
    cache.act.resize(L);
    cache.argmax.resize(L);
    cache.out.resize(L);
    const Tensor<T>* x = &input;
    for (std::size_t l = 0; l < L; ++l) {
        const auto& layer = convs[l];
        pad_input(*x, layer.spec.padding, cache.padded[l]);
        conv_forward(layer, cache.padded[l], cache.act[l]);
        relu(cache.act[l].data.size(), cache.act[l].data.data());
        if (layer.spec.pool) {
            pool_forward(cache.act[l], cache.out[l], cache.argmax[l]);
        } else {
            cache.out[l] = cache.act[l];
        }
        x = &cache.out[l];
    }
    const auto& d = net.dense();
    cache.embedding.assign(d.out, T(0));
    for (std::size_t e = 0; e < d.out; ++e)
        cache.embedding[e] = d.biases[e] + dot(d.in, d.weights.data() + e * d.in, x->data.data());
}

template <class T>
void backward(const BasicEmbedderNet<T>& net, const BranchCache<T>& cache, std::span<const T> g_embed,
              BasicEmbedderNet<T>& grad) {
    const auto& d = net.dense();
    auto& gd = grad.dense();
    const Tensor<T>& flat = cache.out.back();
    Tensor<T> g_out(flat.channels, flat.height, flat.width);
    for (std::size_t e = 0; e < d.out; ++e) {
        const T ge = g_embed[e];
        if (ge == T(0)) continue;
        gd.biases[e] += ge;
        axpy(d.in, ge, flat.data.data(), gd.weights.data() + e * d.in);
        axpy(d.in, ge, d.weights.data() + e * d.in, g_out.data.data());
    }
    Tensor<T> g_act, g_pad;
    for (std::size_t l = net.convs().size(); l-- > 0;) {
        const auto& layer = net.convs()[l];
        const auto& act = cache.act[l];
        if (layer.spec.pool) {
            reshape(g_act, act.channels, act.height, act.width);
            const auto& am = cache.argmax[l];
            for (std::size_t i = 0; i < am.size(); ++i) g_act.data[am[i]] += g_out.data[i];
        } else {
            g_act = g_out;
        }
        relu_backward(act.data.size(), act.data.data(), g_act.data.data());
        conv_backward(layer, cache.padded[l], g_act, grad.convs()[l], l > 0 ? &g_pad : nullptr);
        if (l > 0) {
            const std::size_t p = layer.spec.padding;
            reshape(g_out, layer.spec.in_channels, layer.geom.in_h, layer.geom.in_w);
            for (std::size_t c = 0; c < g_out.channels; ++c)
                for (std::size_t y = 0; y < g_out.height; ++y)
                    std::copy(g_pad.row(c, y + p) + p, g_pad.row(c, y + p) + p + g_out.width, g_out.row(c, y));
        }
    }
}

// Loss of a pair and dL/d(embedding) for both branches, scaled by `scale`.
template <class T>
T pair_loss_grad(std::span<const T> ea, std::span<const T> eb, bool same, T margin, T scale, std::vector<T>& ga,
                 std::vector<T>& gb) {
    const std::size_t n = ea.size();
    ga.assign(n, T(0));
    gb.assign(n, T(0));
    T d2 = 0;
    for (std::size_t i = 0; i < n; ++i) d2 += (ea[i] - eb[i]) * (ea[i] - eb[i]);
    T coeff;
    T loss;
    if (same) {
        loss = d2;
        coeff = T(2);
    } else if (margin - d2 > T(0)) {
        loss = margin - d2;
        coeff = T(-2);
    } else {
        return T(0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        ga[i] = scale * coeff * (ea[i] - eb[i]);
        gb[i] = -ga[i];
    }
    return loss;
}

template <class T>
void fill_uniform(std::vector<T>& v, double bound, Rng& rng) {
    for (auto& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace

// --- architecture -----------------------------------------------------------

Architecture default_architecture(std::size_t patch_size, std::size_t embed_dim) {
    Architecture a;
    a.input_height = patch_size;
    a.input_width = patch_size;
    a.embed_dim = embed_dim;
    a.convs = {ConvSpec{3, 8, 3, 1, 1, true}, ConvSpec{8, 16, 3, 1, 1, true}, ConvSpec{16, 32, 3, 1, 1, true}};
    return a;
}

std::vector<ConvGeometry> layer_geometry(const Architecture& arch) {
    if (arch.convs.empty()) throw ShapeError("architecture needs at least one convolution layer");
    if (arch.embed_dim == 0) throw ShapeError("embedding dimension must be >= 1");
    std::vector<ConvGeometry> out;
    std::size_t h = arch.input_height, w = arch.input_width, c = arch.convs[0].in_channels;
    for (std::size_t l = 0; l < arch.convs.size(); ++l) {
        const auto& s = arch.convs[l];
        const std::string where = "conv layer " + std::to_string(l);
        if (s.in_channels != c)
            throw ShapeError(where + ": expects " + std::to_string(s.in_channels) + " input channels, previous layer gives " +
                             std::to_string(c));
        if (s.out_channels == 0 || s.kernel == 0 || s.stride == 0) throw ShapeError(where + ": zero-sized layer");
        if (h + 2 * s.padding < s.kernel || w + 2 * s.padding < s.kernel)
            throw ShapeError(where + ": kernel larger than padded input");
        ConvGeometry g;
        g.in_h = h;
        g.in_w = w;
        g.conv_h = (h + 2 * s.padding - s.kernel) / s.stride + 1;
        g.conv_w = (w + 2 * s.padding - s.kernel) / s.stride + 1;
        g.out_h = s.pool ? g.conv_h / 2 : g.conv_h;
        g.out_w = s.pool ? g.conv_w / 2 : g.conv_w;
        if (g.out_h == 0 || g.out_w == 0) throw ShapeError(where + ": spatial size collapses to zero");
        out.push_back(g);
        h = g.out_h;
        w = g.out_w;
        c = s.out_channels;
    }
    return out;
}

std::size_t flat_dim(const Architecture& arch) {
    const auto geom = layer_geometry(arch);
    return arch.convs.back().out_channels * geom.back().out_h * geom.back().out_w;
}

// --- net --------------------------------------------------------------------

template <class T>
BasicEmbedderNet<T>::BasicEmbedderNet(const Architecture& arch) : arch_(arch) {
    const auto geom = layer_geometry(arch);
    for (std::size_t l = 0; l < arch.convs.size(); ++l) {
        const auto& s = arch.convs[l];
        ConvLayer<T> layer;
        layer.spec = s;
        layer.geom = geom[l];
        layer.weights.assign(s.out_channels * s.in_channels * s.kernel * s.kernel, T(0));
        layer.biases.assign(s.out_channels, T(0));
        convs_.push_back(std::move(layer));
    }
    dense_.in = flat_dim(arch);
    dense_.out = arch.embed_dim;
    dense_.weights.assign(dense_.in * dense_.out, T(0));
    dense_.biases.assign(dense_.out, T(0));
}

template <class T>
std::size_t BasicEmbedderNet<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& b : parameter_blocks()) n += b.size();
    return n;
}

template <class T>
std::vector<std::span<T>> BasicEmbedderNet<T>::parameter_blocks() {
    std::vector<std::span<T>> out;
    for (auto& l : convs_) {
        out.emplace_back(l.weights);
        out.emplace_back(l.biases);
    }
    out.emplace_back(dense_.weights);
    out.emplace_back(dense_.biases);
    return out;
}

template <class T>
std::vector<std::span<const T>> BasicEmbedderNet<T>::parameter_blocks() const {
    std::vector<std::span<const T>> out;
    for (const auto& l : convs_) {
        out.emplace_back(l.weights);
        out.emplace_back(l.biases);
    }
    out.emplace_back(dense_.weights);
    out.emplace_back(dense_.biases);
    return out;
}

template <class T>
void BasicEmbedderNet<T>::set_zero() {
    for (auto b : parameter_blocks()) std::fill(b.begin(), b.end(), T(0));
}

template <class T>
bool BasicEmbedderNet<T>::all_finite() const {
    for (auto b : parameter_blocks())
        for (T v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

template <class T>
template <class U>
BasicEmbedderNet<U> BasicEmbedderNet<T>::cast() const {
    BasicEmbedderNet<U> out(arch_);
    auto dst = out.parameter_blocks();
    auto src = parameter_blocks();
    for (std::size_t i = 0; i < src.size(); ++i)
        std::transform(src[i].begin(), src[i].end(), dst[i].begin(), [](T v) { return static_cast<U>(v); });
    return out;
}

template <class T>
bool BasicEmbedderNet<T>::operator==(const BasicEmbedderNet& other) const {
    if (!(arch_ == other.arch_)) return false;
    auto a = parameter_blocks();
    auto b = other.parameter_blocks();
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!std::equal(a[i].begin(), a[i].end(), b[i].begin(), b[i].end())) return false;
    return true;
}

template class BasicEmbedderNet<float>;
template class BasicEmbedderNet<double>;
template BasicEmbedderNet<double> BasicEmbedderNet<float>::cast<double>() const;
template BasicEmbedderNet<float> BasicEmbedderNet<double>::cast<float>() const;
template BasicEmbedderNet<float> BasicEmbedderNet<float>::cast<float>() const;
template BasicEmbedderNet<double> BasicEmbedderNet<double>::cast<double>() const;

template <class T>
Tensor<T> to_tensor(const RasterImage& img) {
    Tensor<T> t(RasterImage::kChannels, img.height(), img.width());
    for (std::size_t y = 0; y < img.height(); ++y)
        for (std::size_t x = 0; x < img.width(); ++x)
            for (std::size_t c = 0; c < RasterImage::kChannels; ++c) t.at(c, y, x) = static_cast<T>(img.at(y, x, c));
    return t;
}
template Tensor<float> to_tensor<float>(const RasterImage&);
template Tensor<double> to_tensor<double>(const RasterImage&);

// --- operations -------------------------------------------------------------

void TrainConfig::validate() const {
    if (!(margin > 0.0) || !std::isfinite(margin)) throw ConfigError("margin must be > 0");
    if (batch_pairs == 0) throw ConfigError("batch_pairs must be >= 1");
    if (embed_dim == 0) throw ConfigError("embed_dim must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
}

template <class T>
BasicEmbedderNet<T> init_net(const Architecture& arch, Rng& rng) {
    BasicEmbedderNet<T> net(arch);
    for (auto& l : net.convs())
        fill_uniform(l.weights, std::sqrt(6.0 / static_cast<double>(l.spec.in_channels * l.spec.kernel * l.spec.kernel)),
                     rng);
    fill_uniform(net.dense().weights, std::sqrt(6.0 / static_cast<double>(net.dense().in)), rng);
    return net;
}
template BasicEmbedderNet<float> init_net<float>(const Architecture&, Rng&);
template BasicEmbedderNet<double> init_net<double>(const Architecture&, Rng&);

EmbedderNet init_net(const TrainConfig& cfg, std::size_t patch_size, Rng& rng) {
    cfg.validate();
    return init_net<float>(default_architecture(patch_size, cfg.embed_dim), rng);
}

template <class T>
std::vector<T> forward(const BasicEmbedderNet<T>& net, const Tensor<T>& input) {
    BranchCache<T> cache;
    forward_cached(net, input, cache);
    return cache.embedding;
}
template std::vector<float> forward<float>(const BasicEmbedderNet<float>&, const Tensor<float>&);
template std::vector<double> forward<double>(const BasicEmbedderNet<double>&, const Tensor<double>&);

Embedding forward(const EmbedderNet& net, const RasterImage& patch) {
    return Embedding{forward(net, to_tensor<float>(patch))};
}

template <class T>
T contrastive_loss(std::span<const T> a, std::span<const T> b, bool same, T margin) {
    if (a.size() != b.size())
        throw ShapeError("contrastive_loss: embeddings of dimension " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
    if (!(margin > T(0))) throw ConfigError("contrastive_loss: margin must be > 0");
    T d2 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
    if (same) return d2;
    return std::max(T(0), margin - d2);
}
template float contrastive_loss<float>(std::span<const float>, std::span<const float>, bool, float);
template double contrastive_loss<double>(std::span<const double>, std::span<const double>, bool, double);

double contrastive_loss(const Embedding& a, const Embedding& b, bool same, double margin) {
    std::vector<double> da(a.coords.begin(), a.coords.end()), db(b.coords.begin(), b.coords.end());
    return contrastive_loss<double>(da, db, same, margin);
}

template <class T>
LossAndGrad<T> loss_and_grad(const BasicEmbedderNet<T>& net, const Tensor<T>& a, const Tensor<T>& b, bool same,
                             T margin) {
    if (!(margin > T(0))) throw ConfigError("loss_and_grad: margin must be > 0");
    BranchCache<T> ca, cb;
    forward_cached(net, a, ca);
    forward_cached(net, b, cb);
    LossAndGrad<T> out{T(0), BasicEmbedderNet<T>(net.architecture())};
    std::vector<T> ga, gb;
    out.loss = pair_loss_grad<T>(ca.embedding, cb.embedding, same, margin, T(1), ga, gb);
    if (out.loss != T(0) || same) {
        backward<T>(net, ca, ga, out.grad);
        backward<T>(net, cb, gb, out.grad);
    }
    return out;
}
template LossAndGrad<float> loss_and_grad<float>(const BasicEmbedderNet<float>&, const Tensor<float>&,
                                                 const Tensor<float>&, bool, float);
template LossAndGrad<double> loss_and_grad<double>(const BasicEmbedderNet<double>&, const Tensor<double>&,
                                                   const Tensor<double>&, bool, double);

std::vector<PairIndex> sample_pairs(std::span<const BinaryLabel> labels, std::size_t batch_pairs, Rng& rng) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<int>(labels[i])].push_back(i);
    if (by_class[0].empty() || by_class[1].empty())
        throw DataError(std::string("sample_pairs: no patches labelled ") +
                        (by_class[0].empty() ? "no_damage" : "with_damage"));
    std::vector<PairIndex> out;
    out.reserve(batch_pairs);
    for (std::size_t k = 0; k < batch_pairs; ++k) {
        const bool same = k % 2 == 0;
        const std::size_t first = static_cast<std::size_t>(rng.below(labels.size()));
        const int cls = static_cast<int>(labels[first]);
        const auto& pool = by_class[same ? cls : 1 - cls];
        const std::size_t second = pool[rng.below(pool.size())];
        out.push_back({first, second, same});
    }
    return out;
}

TrainResult train(const std::vector<LabeledPatch>& patches, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    if (patches.empty()) throw DataError("train: empty patch set");
    const std::size_t ps = patches[0].pixels.height();
    std::vector<BinaryLabel> labels;
    for (const auto& p : patches) {
        if (p.pixels.height() != ps || p.pixels.width() != ps)
            throw ShapeError("train: patch " + p.id + " is not " + std::to_string(ps) + "x" + std::to_string(ps));
        labels.push_back(p.label);
    }
    // Fails early with the empty class named.
    {
        Rng probe(0);
        sample_pairs(labels, 1, probe);
    }

    Rng rng(cfg.seed);
    TrainResult result{init_net(cfg, ps, rng), {}};
    EmbedderNet& net = result.net;
    EmbedderNet grad(net.architecture());
    EmbedderNet velocity(net.architecture());

    std::vector<Tensor<float>> plain;
    if (!cfg.augment) {
        plain.reserve(patches.size());
        for (const auto& p : patches) plain.push_back(to_tensor<float>(p.pixels));
    }
    auto member = [&](std::size_t idx, Tensor<float>& scratch) -> const Tensor<float>& {
        if (!cfg.augment) return plain[idx];
        RasterImage img = augment_pixels(patches[idx].pixels, Rotate90{static_cast<int>(rng.below(4))}, rng);
        if (rng.below(2) == 1) img = augment_pixels(img, Flip{Flip::Axis::Horizontal}, rng);
        scratch = to_tensor<float>(img);
        return scratch;
    };

    const std::size_t batches = (patches.size() + cfg.batch_pairs - 1) / cfg.batch_pairs;
    const float margin = static_cast<float>(cfg.margin);
    const float lr = static_cast<float>(cfg.learning_rate);
    const float mu = static_cast<float>(cfg.momentum);
    BranchCache<float> ca, cb;
    Tensor<float> sa, sb;
    std::vector<float> ga, gb;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        EpochStats es;
        double epoch_loss = 0.0;
        for (std::size_t batch = 0; batch < batches; ++batch) {
            const auto pairs = sample_pairs(labels, cfg.batch_pairs, rng);
            const float scale = 1.0f / static_cast<float>(pairs.size());
            grad.set_zero();
            double batch_loss = 0.0;
            for (const auto& pr : pairs) {
                ++(pr.same ? es.pos_pairs : es.neg_pairs);
                forward_cached(net, member(pr.first, sa), ca);
                forward_cached(net, member(pr.second, sb), cb);
                const float loss = pair_loss_grad<float>(ca.embedding, cb.embedding, pr.same, margin, scale, ga, gb);
                batch_loss += loss;
                if (loss != 0.0f || pr.same) {
                    backward<float>(net, ca, ga, grad);
                    backward<float>(net, cb, gb, grad);
                }
            }
            batch_loss /= static_cast<double>(pairs.size());
            if (!std::isfinite(batch_loss))
                throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                     std::to_string(batch + 1));
            epoch_loss += batch_loss;
            auto params = net.parameter_blocks();
            auto grads = grad.parameter_blocks();
            auto vel = velocity.parameter_blocks();
            for (std::size_t b = 0; b < params.size(); ++b) {
                for (std::size_t i = 0; i < params[b].size(); ++i) {
                    vel[b][i] = mu * vel[b][i] + grads[b][i];
                    params[b][i] -= lr * vel[b][i];
                }
            }
        }
        es.mean_loss = epoch_loss / static_cast<double>(batches);
        if (!net.all_finite())
            throw NumericalError("non-finite parameters after epoch " + std::to_string(epoch + 1));
        result.stats.epochs.push_back(es);
        if (on_epoch) on_epoch(epoch, es);
    }
    result.stats.final_loss = result.stats.epochs.empty() ? 0.0 : result.stats.epochs.back().mean_loss;
    return result;
}

std::vector<Embedding> embed_all(const EmbedderNet& net, const std::vector<LabeledPatch>& patches) {
    std::vector<Embedding> out;
    out.reserve(patches.size());
    BranchCache<float> cache;
    for (const auto& p : patches) {
        forward_cached(net, to_tensor<float>(p.pixels), cache);
        out.push_back(Embedding{cache.embedding});
    }
    return out;
}

std::string train_stats_csv(const TrainStats& stats) {
    std::ostringstream os;
    os.precision(9);
    os << "epoch,mean_loss,pos_pairs,neg_pairs\n";
    for (std::size_t e = 0; e < stats.epochs.size(); ++e)
        os << (e + 1) << ',' << stats.epochs[e].mean_loss << ',' << stats.epochs[e].pos_pairs << ','
           << stats.epochs[e].neg_pairs << '\n';
    return os.str();
}

}  // namespace ip2cp
