#include "cellseg/image.hpp"

#include <algorithm>

namespace cellseg {

namespace {

void check_dims(int width, int height) {
    if (width < 0 || height < 0) {
        throw InvalidArgument("image dimensions must be non-negative");
    }
}

void check_unit_interval(std::span<const double> data) {
    for (double v : data) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw InvalidArgument("intensity outside [0,1]: " + std::to_string(v));
        }
    }
}

}  // namespace

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height) {
    check_dims(width, height);
    if (!(fill >= 0.0 && fill <= 1.0)) throw InvalidArgument("fill value outside [0,1]");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw InvalidArgument("gray data length does not match width*height");
    }
    check_unit_interval(data_);
}

double GrayImage::clamped(int x, int y) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return data_[index(x, y)];
}

RgbImage::RgbImage(int width, int height, int source_bit_depth)
    : width_(width), height_(height), bit_depth_(source_bit_depth) {
    check_dims(width, height);
    data_.assign(pixel_count() * 3, 0.0);
}

RgbImage::RgbImage(int width, int height, std::vector<double> interleaved, int source_bit_depth)
    : width_(width), height_(height), bit_depth_(source_bit_depth), data_(std::move(interleaved)) {
    check_dims(width, height);
    if (data_.size() != pixel_count() * 3) {
        throw InvalidArgument("rgb data length does not match width*height*3");
    }
    check_unit_interval(data_);
}

RgbImage RgbImage::from_gray(const GrayImage& gray, int source_bit_depth) {
    std::vector<double> data(gray.size() * 3);
    for (std::size_t i = 0; i < gray.size(); ++i) {
        data[3 * i] = data[3 * i + 1] = data[3 * i + 2] = gray[i];
    }
    return RgbImage(gray.width(), gray.height(), std::move(data), source_bit_depth);
}

void RgbImage::set(int x, int y, double r, double g, double b) {
    for (double v : {r, g, b}) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("intensity outside [0,1]");
    }
    const std::size_t p = pixel_index(x, y) * 3;
    data_[p] = r;
    data_[p + 1] = g;
    data_[p + 2] = b;
}

GrayImage RgbImage::channel(Channel c) const {
    std::vector<double> out(pixel_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i, c);
    return GrayImage(width_, height_, std::move(out));
}

LabelMatrix::LabelMatrix(int width, int height)
    : width_(width), height_(height) {
    check_dims(width, height);
    labels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

LabelMatrix::LabelMatrix(int width, int height, std::vector<Label> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
    check_dims(width, height);
    if (labels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw InvalidArgument("label data length does not match width*height");
    }
    n_objects_ = labels_.empty() ? 0 : *std::max_element(labels_.begin(), labels_.end());
}

LabelMatrix LabelMatrix::renumbered() const {
    return filtered([](Label) { return true; });
}

}  // namespace cellseg
