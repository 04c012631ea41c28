#include "flowprop/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "flowprop/errors.hpp"

namespace flowprop {

namespace {

constexpr char kMagic[8] = {'F', 'P', 'T', 'E', 'N', 'S', 'R', '1'};
constexpr std::size_t kHeaderBytes = 8 + 3 * 4;

void put_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path.string() + "'", 0);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

} // namespace

void write_feature_map(const FeatureMap& map, const std::filesystem::path& path) {
    std::vector<unsigned char> out;
    out.reserve(kHeaderBytes + map.data.size() * 4);
    out.insert(out.end(), kMagic, kMagic + 8);
    put_u32le(out, static_cast<std::uint32_t>(map.height));
    put_u32le(out, static_cast<std::uint32_t>(map.width));
    put_u32le(out, static_cast<std::uint32_t>(map.channels));
    for (float v : map.data) put_u32le(out, std::bit_cast<std::uint32_t>(v));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open '" + path.string() + "' for writing", 0);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw FormatError("short write to '" + path.string() + "'", out.size());
}

FeatureMap read_feature_map(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = read_all(path);
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw FormatError("bad magic, expected FPTENSR1", 0);
    if (bytes.size() < kHeaderBytes)
        throw FormatError("truncated header", bytes.size());

    const std::uint32_t h = get_u32le(bytes.data() + 8);
    const std::uint32_t w = get_u32le(bytes.data() + 12);
    const std::uint32_t c = get_u32le(bytes.data() + 16);
    if (h == 0 || w == 0 || c == 0) throw FormatError("zero dimension in header", 8);

    const std::size_t count = static_cast<std::size_t>(h) * w * c;
    const std::size_t expected = kHeaderBytes + count * 4;
    if (bytes.size() < expected) throw FormatError("truncated payload", bytes.size());
    if (bytes.size() > expected) throw FormatError("trailing bytes after payload", expected);

    FeatureMap map(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t off = kHeaderBytes + i * 4;
        const float v = std::bit_cast<float>(get_u32le(bytes.data() + off));
        if (!std::isfinite(v)) throw FormatError("non-finite value", off);
        map.data[i] = v;
    }
    return map;
}

void write_ppm(const Image& image, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot open '" + path.string() + "' for writing", 0);
    f << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(image.width) * 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const float v = std::clamp(image.at(y, x, c), 0.0f, 1.0f);
                row[static_cast<std::size_t>(x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0f));
            }
        }
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw FormatError("short write to '" + path.string() + "'", 0);
}

Image read_ppm(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = read_all(path);
    std::size_t pos = 0;
    const auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (std::isspace(bytes[pos])) {
                ++pos;
            } else if (bytes[pos] == '#') { // comment to end of line
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    };
    const auto read_int = [&]() -> int {
        skip_space();
        const std::size_t start = pos;
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            ++pos;
        }
        if (pos == start) throw FormatError("expected integer in pixmap header", start);
        return static_cast<int>(v);
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw FormatError("not a binary P6 pixmap", 0);
    pos = 2;
    const int w = read_int();
    const int h = read_int();
    const int maxval = read_int();
    if (w <= 0 || h <= 0) throw FormatError("bad pixmap dimensions", 2);
    if (maxval != 255) throw FormatError("only maxval 255 supported", pos);
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw FormatError("missing whitespace after maxval", pos);
    ++pos; // single whitespace byte, then raster

    const std::size_t count = static_cast<std::size_t>(w) * h * 3;
    if (bytes.size() - pos < count) throw FormatError("truncated pixel data", bytes.size());

    Image image(h, w);
    for (std::size_t i = 0; i < count; ++i)
        image.data[i] = static_cast<float>(bytes[pos + i]) / 255.0f;
    return image;
}

} // namespace flowprop
