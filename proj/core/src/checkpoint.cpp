#include "fedswarm/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fedswarm/error.hpp"

namespace fedswarm::nn {

namespace {

constexpr std::array<char, 4> kMagic{'F', 'S', 'W', 'N'};

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
}

void put_f32(std::vector<std::byte>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
public:
    explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        if (pos_ + 4 > bytes_.size()) throw ShapeError("checkpoint truncated at byte " + std::to_string(pos_));
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::byte> to_bytes(const NetworkWeights& weights) {
    std::vector<std::byte> out;
    out.reserve(16 + 12 * weights.layers.size() + serialized_size(weights));
    for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(weights.layers.size()));
    put_u32(out, static_cast<std::uint32_t>(weights.concat_dim));
    for (const auto& l : weights.layers) {
        put_u32(out, static_cast<std::uint32_t>(l.weight.cols()));
        put_u32(out, static_cast<std::uint32_t>(l.weight.rows()));
        put_u32(out, static_cast<std::uint32_t>(l.activation));
    }
    for (float v : weights.flatten()) put_f32(out, v);
    return out;
}

NetworkWeights from_bytes(std::span<const std::byte> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic.data(), 4) != 0) {
        throw ShapeError("not a weight checkpoint (bad magic)");
    }
    Reader in(bytes.subspan(4));
    const std::uint32_t version = in.u32();
    if (version != kCheckpointVersion) {
        throw ShapeError("unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint32_t layer_count = in.u32();
    const std::uint32_t concat_dim = in.u32();
    std::vector<LayerSpec> specs;
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        LayerSpec s;
        s.input_dim = in.u32();
        s.output_dim = in.u32();
        const std::uint32_t tag = in.u32();
        if (tag > static_cast<std::uint32_t>(Activation::Linear)) {
            throw ShapeError("unknown activation tag " + std::to_string(tag));
        }
        s.activation = static_cast<Activation>(tag);
        specs.push_back(s);
    }
    NetworkWeights w = NetworkWeights::zeros(specs, concat_dim);
    std::vector<float> flat(w.parameter_count());
    for (float& v : flat) v = in.f32();
    if (!in.done()) throw ShapeError("trailing bytes after checkpoint payload");
    w.assign_flat(flat);
    return w;
}

void save_checkpoint(const std::filesystem::path& path, const NetworkWeights& weights) {
    const auto bytes = to_bytes(weights);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing " + path.string());
}

NetworkWeights load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_bytes(std::as_bytes(std::span<const char>(raw)));
}

}  // namespace fedswarm::nn
