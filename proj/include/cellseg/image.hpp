#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cellseg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument or shape mismatch detected before any work is done.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// File or stream could not be read, decoded, encoded or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Collects non-fatal diagnostics (e.g. CLAHE falling back to global equalization).
using Warnings = std::vector<std::string>;

/// Single-channel intensity raster, values normalized to [0,1], row-major.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, double fill = 0.0);
    GrayImage(int width, int height, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double operator()(int x, int y) const { return data_[index(x, y)]; }
    double& operator()(int x, int y) { return data_[index(x, y)]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    /// Edge-clamped access; coordinates outside the raster read the nearest border pixel.
    double clamped(int x, int y) const;

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    bool operator==(const GrayImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

enum class Channel { Red = 0, Green = 1, Blue = 2 };

/// Three-channel (R, G, B) raster, interleaved, values normalized to [0,1].
/// Grayscale sources are stored with all three channels equal.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, int source_bit_depth = 8);
    RgbImage(int width, int height, std::vector<double> interleaved, int source_bit_depth = 8);

    static RgbImage from_gray(const GrayImage& gray, int source_bit_depth = 8);

    int width() const { return width_; }
    int height() const { return height_; }
    int source_bit_depth() const { return bit_depth_; }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    double at(int x, int y, Channel c) const {
        return data_[pixel_index(x, y) * 3 + static_cast<std::size_t>(c)];
    }
    double& at(int x, int y, Channel c) {
        return data_[pixel_index(x, y) * 3 + static_cast<std::size_t>(c)];
    }
    double at(std::size_t pixel, Channel c) const {
        return data_[pixel * 3 + static_cast<std::size_t>(c)];
    }
    void set(int x, int y, double r, double g, double b);

    std::size_t pixel_index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    std::span<const double> data() const { return data_; }

    /// Extracts one channel as a GrayImage.
    GrayImage channel(Channel c) const;

    bool operator==(const RgbImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int bit_depth_ = 8;
    std::vector<double> data_;
};

using Label = std::uint32_t;

/// Per-pixel object identity: 0 is background, 1..n_objects are objects.
class LabelMatrix {
public:
    LabelMatrix() = default;
    LabelMatrix(int width, int height);
    /// Takes ownership of raw labels; n_objects is recomputed as the maximum label.
    LabelMatrix(int width, int height, std::vector<Label> labels);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return labels_.size(); }
    Label n_objects() const { return n_objects_; }

    Label operator()(int x, int y) const { return labels_[index(x, y)]; }
    Label operator[](std::size_t i) const { return labels_[i]; }

    std::span<const Label> labels() const { return labels_; }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    /// Relabels positive labels to 1..n in raster order of first occurrence.
    /// Labels mapped to 0 by `keep` are dropped first.
    template <typename Keep>
    LabelMatrix filtered(Keep keep) const;

    /// Same as filtered() with every label kept.
    LabelMatrix renumbered() const;

    bool operator==(const LabelMatrix&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    Label n_objects_ = 0;
    std::vector<Label> labels_;
};

template <typename Keep>
LabelMatrix LabelMatrix::filtered(Keep keep) const {
    std::vector<Label> remap(static_cast<std::size_t>(n_objects_) + 1, 0);
    std::vector<bool> seen(static_cast<std::size_t>(n_objects_) + 1, false);
    Label next = 0;
    std::vector<Label> out(labels_.size(), 0);
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const Label l = labels_[i];
        if (l == 0) continue;
        if (!seen[l]) {
            seen[l] = true;
            remap[l] = keep(l) ? ++next : 0;
        }
        out[i] = remap[l];
    }
    return LabelMatrix(width_, height_, std::move(out));
}

/// Throws InvalidArgument unless both rasters share dimensions.
template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw InvalidArgument(std::string(what) + ": dimension mismatch (" +
                              std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                              " vs " + std::to_string(b.width()) + "x" +
                              std::to_string(b.height()) + ")");
    }
}

}  // namespace cellseg
