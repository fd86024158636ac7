#include "bip/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "bip/errors.hpp"

namespace bip {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff), static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw config_error("checkpoint: truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(os, v);
}

float get_f32(std::istream& is) {
    const std::uint32_t v = get_u32(is);
    float f;
    std::memcpy(&f, &v, 4);
    return f;
}

constexpr char kMagic[8] = {'B', 'I', 'P', 'C', 'K', 'P', 'T', '1'};

}  // namespace

void write_checkpoint(std::ostream& os, const Layout& layout, const ParamVector& params,
                      const std::vector<std::uint8_t>* mask_bits) {
    if (static_cast<std::int64_t>(params.size()) != layout.total) {
        throw usage_error("write_checkpoint: parameter length does not match layout");
    }
    os.write(kMagic, 8);
    put_u32(os, static_cast<std::uint32_t>(layout.entries.size()));
    for (const LayoutEntry& e : layout.entries) {
        put_u32(os, static_cast<std::uint32_t>(e.shape.size()));
        for (int d : e.shape) put_u32(os, static_cast<std::uint32_t>(d));
    }
    for (double v : params) put_f32(os, static_cast<float>(v));
    if (mask_bits) {
        if (static_cast<std::int64_t>(mask_bits->size()) != layout.total) {
            throw usage_error("write_checkpoint: mask length does not match layout");
        }
        os.write("MASK", 4);
        os.write(reinterpret_cast<const char*>(mask_bits->data()), static_cast<std::streamsize>(mask_bits->size()));
    }
    if (!os) throw numeric_error("write_checkpoint: stream write failed");
}

void write_checkpoint_file(const std::string& path, const Layout& layout, const ParamVector& params,
                           const std::vector<std::uint8_t>* mask_bits) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot open " + path + " for writing");
    write_checkpoint(f, layout, params, mask_bits);
}

CheckpointData read_checkpoint(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) throw config_error("checkpoint: bad magic (want BIPCKPT1)");
    const std::uint32_t layers = get_u32(is);
    CheckpointData out;
    std::int64_t total = 0;
    for (std::uint32_t i = 0; i < layers; ++i) {
        const std::uint32_t rank = get_u32(is);
        if (rank == 0 || rank > 8) throw config_error("checkpoint: implausible rank " + std::to_string(rank));
        std::vector<int> shape(rank);
        std::int64_t sz = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            shape[r] = static_cast<int>(get_u32(is));
            sz *= shape[r];
        }
        total += sz;
        out.shapes.push_back(std::move(shape));
    }
    out.params.resize(static_cast<std::size_t>(total));
    for (std::int64_t i = 0; i < total; ++i) out.params[static_cast<std::size_t>(i)] = get_f32(is);

    char tag[4];
    is.read(tag, 4);
    if (is && std::memcmp(tag, "MASK", 4) == 0) {
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(total));
        is.read(reinterpret_cast<char*>(mask.data()), total);
        if (!is) throw config_error("checkpoint: truncated mask section");
        for (std::uint8_t b : mask) {
            if (b > 1) throw config_error("checkpoint: mask byte out of {0,1}");
        }
        out.mask = std::move(mask);
    }
    return out;
}

CheckpointData read_checkpoint_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot open " + path);
    return read_checkpoint(f);
}

}  // namespace bip
