#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "binary_io.hpp"
#include "ip2cp/embedder.hpp"
#include "ip2cp/error.hpp"

namespace ip2cp {
namespace {

constexpr char kMagic[8] = {'I', 'P', '2', 'C', 'P', 'N', 'E', 'T'};
constexpr std::uint32_t kConvTag = 1;
constexpr std::uint32_t kDenseTag = 2;

}  // namespace

std::vector<std::uint8_t> serialize_net(const EmbedderNet& net) {
    detail::ByteWriter w;
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kNetFormatVersion);
    w.u32(static_cast<std::uint32_t>(net.embed_dim()));
    w.u32(static_cast<std::uint32_t>(net.convs().size() + 1));
    for (const auto& l : net.convs()) {
        for (std::size_t v : {std::size_t{kConvTag}, l.spec.out_channels, l.spec.in_channels, l.spec.kernel,
                              l.spec.stride, l.spec.padding, std::size_t{l.spec.pool}, l.geom.in_h, l.geom.in_w})
            w.u32(static_cast<std::uint32_t>(v));
        w.floats(l.weights);
        w.floats(l.biases);
    }
    const auto& d = net.dense();
    w.u32(kDenseTag);
    w.u32(static_cast<std::uint32_t>(d.out));
    w.u32(static_cast<std::uint32_t>(d.in));
    w.floats(d.weights);
    w.floats(d.biases);
    return std::move(w).take();
}

EmbedderNet deserialize_net(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes, "model file");
    if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw NotAModelFileError("not a model file (missing IP2CPNET magic)");
    r.skip(sizeof kMagic);
    const std::uint32_t version = r.u32();
    if (version != kNetFormatVersion)
        throw FormatError("model file version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kNetFormatVersion) + ")");
    const std::uint32_t embed_dim = r.u32();
    const std::uint32_t layer_count = r.u32();
    if (layer_count < 2) throw FormatError("model file declares " + std::to_string(layer_count) + " layers, need >= 2");

    Architecture arch;
    arch.embed_dim = embed_dim;
    struct Blob {
        std::vector<float> w, b;
    };
    std::vector<Blob> blobs;
    for (std::uint32_t l = 0; l + 1 < layer_count; ++l) {
        const std::string where = "model file layer " + std::to_string(l);
        if (r.u32() != kConvTag) throw FormatError(where + ": expected a convolution layer");
        ConvSpec s;
        s.out_channels = r.u32();
        s.in_channels = r.u32();
        s.kernel = r.u32();
        s.stride = r.u32();
        s.padding = r.u32();
        const std::uint32_t pool = r.u32();
        if (pool > 1) throw FormatError(where + ": pool flag must be 0 or 1");
        s.pool = pool == 1;
        const std::uint32_t in_h = r.u32(), in_w = r.u32();
        if (l == 0) {
            arch.input_height = in_h;
            arch.input_width = in_w;
        }
        arch.convs.push_back(s);
        std::vector<ConvGeometry> geom;
        try {
            geom = layer_geometry(arch);
        } catch (const ShapeError& e) {
            throw FormatError(where + ": shape inconsistency: " + e.what());
        }
        if (geom.back().in_h != in_h || geom.back().in_w != in_w)
            throw FormatError(where + ": shape inconsistency: declared input " + std::to_string(in_h) + "x" +
                              std::to_string(in_w) + ", previous layer gives " + std::to_string(geom.back().in_h) +
                              "x" + std::to_string(geom.back().in_w));
        Blob blob;
        blob.w = r.floats(detail::checked_mul({s.out_channels, s.in_channels, s.kernel, s.kernel}));
        blob.b = r.floats(s.out_channels);
        blobs.push_back(std::move(blob));
    }
    if (r.u32() != kDenseTag) throw FormatError("model file: last layer must be fully connected");
    const std::uint32_t out = r.u32(), in = r.u32();
    if (out != embed_dim)
        throw FormatError("model file: shape inconsistency: dense output " + std::to_string(out) +
                          " != embed_dim " + std::to_string(embed_dim));
    std::size_t flat = 0;
    try {
        flat = flat_dim(arch);
    } catch (const ShapeError& e) {
        throw FormatError(std::string("model file: shape inconsistency: ") + e.what());
    }
    if (in != flat)
        throw FormatError("model file: shape inconsistency: dense input " + std::to_string(in) +
                          " != flattened convolution output " + std::to_string(flat));
    auto dense_w = r.floats(detail::checked_mul({out, in}));
    auto dense_b = r.floats(out);
    r.expect_end();
    EmbedderNet net(arch);
    net.dense().weights = std::move(dense_w);
    net.dense().biases = std::move(dense_b);
    for (std::size_t l = 0; l < blobs.size(); ++l) {
        net.convs()[l].weights = std::move(blobs[l].w);
        net.convs()[l].biases = std::move(blobs[l].b);
    }
    if (!net.all_finite()) throw FormatError("model file contains non-finite parameters");
    return net;
}

void save_net(const EmbedderNet& net, const std::filesystem::path& path) {
    detail::write_file(path, serialize_net(net));
}

EmbedderNet load_net(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    try {
        return deserialize_net(bytes);
    } catch (const TruncatedFileError& e) {
        throw TruncatedFileError(path.string() + ": " + e.what(), e.expected_bytes, e.actual_bytes);
    } catch (const NotAModelFileError& e) {
        throw NotAModelFileError(path.string() + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace ip2cp
