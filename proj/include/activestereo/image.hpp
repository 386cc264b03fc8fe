#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace activestereo {

/// Row-major grayscale image with 8- or 16-bit samples.
struct GrayImage {
    int width = 0;
    int height = 0;
    int maxval = 255;
    std::vector<std::uint16_t> samples;

    GrayImage() = default;
    GrayImage(int w, int h, int max = 255)
        : width(w), height(h), maxval(max), samples(static_cast<std::size_t>(w) * h, 0) {}

    std::uint16_t& at(int row, int column) {
        return samples[static_cast<std::size_t>(row) * width + column];
    }
    std::uint16_t at(int row, int column) const {
        return samples[static_cast<std::size_t>(row) * width + column];
    }
    std::span<const std::uint16_t> row(int r) const {
        return {samples.data() + static_cast<std::size_t>(r) * width,
                static_cast<std::size_t>(width)};
    }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

}  // namespace activestereo
