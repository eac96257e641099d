// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/common.hpp>
#include <voxsplat/io/png.hpp>

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace voxsplat::io {

Image read_png(const std::string& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        throw IoError("cannot read PNG '" + path + "': " + img.message);
    }
    const bool gray = (img.format & PNG_FORMAT_FLAG_COLOR) == 0;
    img.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    const int channels = gray ? 1 : 3;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw IoError("cannot decode PNG '" + path + "': " + msg);
    }
    Image out(static_cast<int>(img.width), static_cast<int>(img.height), channels);
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        out.data()[i] = buffer[i] / 255.0;
    }
    return out;
}

void write_png(const std::string& path, const Image& image) {
    if (image.channels() != 1 && image.channels() != 3) {
        throw std::invalid_argument("PNG output supports 1 or 3 channels");
    }
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width());
    img.height = static_cast<png_uint_32>(image.height());
    img.format = image.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    std::vector<png_byte> buffer(image.data().size());
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        buffer[i] = static_cast<png_byte>(std::lround(std::clamp(image.data()[i], 0.0, 1.0) * 255.0));
    }
    if (!png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr)) {
        throw IoError("cannot write PNG '" + path + "': " + img.message);
    }
}

}  // namespace voxsplat::io
