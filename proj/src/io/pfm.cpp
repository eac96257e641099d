// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/io/binary.hpp>
#include <voxsplat/io/pfm.hpp>

#include <bit>
#include <cctype>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace voxsplat::io {
namespace {

std::string next_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) {
        ++pos;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) {
        ++pos;
    }
    if (start == pos) {
        throw ParseError("truncated PFM header", pos);
    }
    return {reinterpret_cast<const char*>(bytes.data() + start), pos - start};
}

}  // namespace

std::vector<std::uint8_t> encode_pfm(const Image& image) {
    if (image.channels() != 1 && image.channels() != 3) {
        throw std::invalid_argument("PFM supports 1 or 3 channels");
    }
    std::ostringstream header;
    header << (image.channels() == 3 ? "PF" : "Pf") << '\n'
           << image.width() << ' ' << image.height() << '\n'
           << "-1.0\n";
    const std::string h = header.str();
    std::vector<std::uint8_t> out(h.begin(), h.end());
    out.reserve(out.size() + image.data().size() * sizeof(float));
    for (int y = image.height() - 1; y >= 0; --y) {
        for (int x = 0; x < image.width(); ++x) {
            for (int c = 0; c < image.channels(); ++c) {
                append_le(out, static_cast<float>(image.at(x, y, c)));
            }
        }
    }
    return out;
}

Image decode_pfm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    const std::string magic = next_token(bytes, pos);
    int channels = 0;
    if (magic == "PF") {
        channels = 3;
    } else if (magic == "Pf") {
        channels = 1;
    } else {
        throw ParseError("not a PFM file", 0);
    }
    int width = 0;
    int height = 0;
    double scale = 0.0;
    try {
        width = std::stoi(next_token(bytes, pos));
        height = std::stoi(next_token(bytes, pos));
        scale = std::stod(next_token(bytes, pos));
    } catch (const std::logic_error&) {
        throw ParseError("invalid PFM header", pos);
    }
    if (width <= 0 || height <= 0 || scale == 0.0) {
        throw ParseError("invalid PFM dimensions or scale", pos);
    }
    ++pos;  // single whitespace after the scale
    const bool little = scale < 0.0;
    const std::size_t need = static_cast<std::size_t>(width) * height * channels * sizeof(float);
    if (pos > bytes.size() || bytes.size() - pos < need) {
        throw ParseError("truncated PFM payload", std::min(pos, bytes.size()));
    }
    if (bytes.size() - pos != need) {
        throw ParseError("trailing bytes after PFM payload", pos + need);
    }
    Image image(width, height, channels);
    const std::uint8_t* p = bytes.data() + pos;
    for (int y = height - 1; y >= 0; --y) {
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < channels; ++c) {
                std::uint8_t raw[4];
                std::memcpy(raw, p, 4);
                if (little != (std::endian::native == std::endian::little)) {
                    std::swap(raw[0], raw[3]);
                    std::swap(raw[1], raw[2]);
                }
                float v;
                std::memcpy(&v, raw, 4);
                image.at(x, y, c) = v;
                p += 4;
            }
        }
    }
    return image;
}

void write_pfm(const std::string& path, const Image& image) { write_file_bytes(path, encode_pfm(image)); }

Image read_pfm(const std::string& path) { return decode_pfm(read_file_bytes(path)); }

}  // namespace voxsplat::io
