#include "cellseg/filters.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>

namespace cellseg {

namespace {

int intensity_bin(double v) {
    return std::min(kClaheBins - 1, static_cast<int>(v * kClaheBins));
}

using Mapping = std::array<double, kClaheBins>;

// Clipped, redistributed cumulative histogram of `n` samples, normalized to [0,1].
Mapping tile_mapping(std::array<double, kClaheBins> hist, double n, double clip_limit) {
    const double min_clip = std::ceil(n / kClaheBins);
    const double clip = min_clip + std::round(clip_limit * (n - min_clip));
    double excess = 0.0;
    for (double& h : hist) {
        if (h > clip) {
            excess += h - clip;
            h = clip;
        }
    }
    const double spread = excess / kClaheBins;
    Mapping map{};
    double cum = 0.0;
    for (int b = 0; b < kClaheBins; ++b) {
        cum += hist[static_cast<std::size_t>(b)] + spread;
        map[static_cast<std::size_t>(b)] = std::clamp(cum / n, 0.0, 1.0);
    }
    return map;
}

GrayImage equalize_global(const GrayImage& img, double clip_limit) {
    std::array<double, kClaheBins> hist{};
    for (double v : img.data()) hist[static_cast<std::size_t>(intensity_bin(v))] += 1.0;
    const Mapping map = tile_mapping(hist, static_cast<double>(img.size()), clip_limit);
    GrayImage out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) {
        out[i] = map[static_cast<std::size_t>(intensity_bin(img[i]))];
    }
    return out;
}

// Clamped source coordinate for offsets around each output coordinate.
std::vector<int> clamped_indices(int length, int radius) {
    std::vector<int> idx(static_cast<std::size_t>(length + 2 * radius));
    for (int i = 0; i < length + 2 * radius; ++i) {
        idx[static_cast<std::size_t>(i)] = std::clamp(i - radius, 0, length - 1);
    }
    return idx;
}

// Window median by nth_element over the gathered window; cheap for small windows.
std::vector<double> median_direct(const GrayImage& img, int size) {
    const int r = size / 2;
    const int w = img.width();
    const int h = img.height();
    const auto cols = clamped_indices(w, r);
    const auto rows = clamped_indices(h, r);
    const auto src = img.data();
    const std::size_t wsize = static_cast<std::size_t>(size) * static_cast<std::size_t>(size);
    const std::size_t mid = wsize / 2;
    std::vector<double> window(wsize);
    std::vector<double> out(img.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::size_t k = 0;
            for (int dy = 0; dy < size; ++dy) {
                const std::size_t row = static_cast<std::size_t>(rows[static_cast<std::size_t>(y + dy)]) *
                                        static_cast<std::size_t>(w);
                for (int dx = 0; dx < size; ++dx) {
                    window[k++] = src[row + static_cast<std::size_t>(cols[static_cast<std::size_t>(x + dx)])];
                }
            }
            std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(mid), window.end());
            out[img.index(x, y)] = window[mid];
        }
    }
    return out;
}

// Sliding-window median over pixel ranks. Every pixel gets a unique rank (value, then
// index), the window is a multiset of ranks counted at three granularities, and the
// median is located by descending the counts. Exact: returns the same k-th value as
// median_direct.
class RankWindow {
public:
    explicit RankWindow(std::size_t n)
        : fine_(n, 0), block_((n >> kBlockShift) + 1, 0), super_((n >> kSuperShift) + 1, 0) {}

    void add(std::uint32_t r) {
        ++fine_[r];
        ++block_[r >> kBlockShift];
        ++super_[r >> kSuperShift];
    }
    void remove(std::uint32_t r) {
        --fine_[r];
        --block_[r >> kBlockShift];
        --super_[r >> kSuperShift];
    }
    void clear() {
        std::fill(fine_.begin(), fine_.end(), 0);
        std::fill(block_.begin(), block_.end(), 0);
        std::fill(super_.begin(), super_.end(), 0);
    }
    // Rank of the k-th (0-based) smallest element.
    std::uint32_t select(std::uint32_t k) const {
        std::size_t s = 0;
        while (super_[s] <= k) k -= super_[s++];
        std::size_t b = s << (kSuperShift - kBlockShift);
        while (block_[b] <= k) k -= block_[b++];
        std::size_t f = b << kBlockShift;
        while (fine_[f] <= k) k -= fine_[f++];
        return static_cast<std::uint32_t>(f);
    }

private:
    static constexpr int kBlockShift = 6;
    static constexpr int kSuperShift = 12;
    std::vector<std::uint32_t> fine_;
    std::vector<std::uint32_t> block_;
    std::vector<std::uint32_t> super_;
};

std::vector<double> median_ranked(const GrayImage& img, int size) {
    const int r = size / 2;
    const int w = img.width();
    const int h = img.height();
    const auto src = img.data();
    std::vector<std::uint32_t> order(img.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return src[a] < src[b] || (src[a] == src[b] && a < b);
    });
    std::vector<std::uint32_t> rank(img.size());
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<std::uint32_t>(i);

    const auto cols = clamped_indices(w, r);
    const auto rows = clamped_indices(h, r);
    const auto mid = static_cast<std::uint32_t>((static_cast<std::size_t>(size) * size) / 2);
    auto rank_at = [&](int col_slot, int row_slot) {
        return rank[static_cast<std::size_t>(rows[static_cast<std::size_t>(row_slot)]) * static_cast<std::size_t>(w) +
                    static_cast<std::size_t>(cols[static_cast<std::size_t>(col_slot)])];
    };

    RankWindow win(img.size());
    std::vector<double> out(img.size());
    for (int y = 0; y < h; ++y) {
        win.clear();
        for (int dy = 0; dy < size; ++dy) {
            for (int dx = 0; dx < size; ++dx) win.add(rank_at(dx, y + dy));
        }
        for (int x = 0; x < w; ++x) {
            if (x > 0) {
                for (int dy = 0; dy < size; ++dy) {
                    win.remove(rank_at(x - 1, y + dy));
                    win.add(rank_at(x + size - 1, y + dy));
                }
            }
            out[img.index(x, y)] = src[order[win.select(mid)]];
        }
    }
    return out;
}

}  // namespace

GrayImage to_grayscale(const RgbImage& img) {
    std::vector<double> out(img.pixel_count());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = kGrayWeightR * img.at(i, Channel::Red) +
                         kGrayWeightG * img.at(i, Channel::Green) +
                         kGrayWeightB * img.at(i, Channel::Blue);
        out[i] = std::clamp(v, 0.0, 1.0);
    }
    return GrayImage(img.width(), img.height(), std::move(out));
}

GrayImage equalize_adaptive(const GrayImage& img, double clip_limit, Warnings* warnings) {
    if (!(clip_limit >= 0.0 && clip_limit <= 1.0)) {
        throw InvalidArgument("equalization clip limit must be in [0,1]");
    }
    if (img.empty()) return img;
    const int w = img.width();
    const int h = img.height();
    if (w < 2 * kClaheTiles || h < 2 * kClaheTiles) {
        if (warnings) {
            warnings->push_back("image " + std::to_string(w) + "x" + std::to_string(h) +
                                " too small for an 8x8 tile grid; used global equalization");
        }
        return equalize_global(img, clip_limit);
    }

    const int tw = (w + kClaheTiles - 1) / kClaheTiles;
    const int th = (h + kClaheTiles - 1) / kClaheTiles;
    const double n = static_cast<double>(tw) * th;

    std::vector<Mapping> maps(kClaheTiles * kClaheTiles);
    for (int ty = 0; ty < kClaheTiles; ++ty) {
        for (int tx = 0; tx < kClaheTiles; ++tx) {
            std::array<double, kClaheBins> hist{};
            for (int y = ty * th; y < (ty + 1) * th; ++y) {
                for (int x = tx * tw; x < (tx + 1) * tw; ++x) {
                    hist[static_cast<std::size_t>(intensity_bin(img.clamped(x, y)))] += 1.0;
                }
            }
            maps[static_cast<std::size_t>(ty * kClaheTiles + tx)] = tile_mapping(hist, n, clip_limit);
        }
    }

    // Position of a pixel in tile-center coordinates, split into the lower tile and weight.
    auto locate = [](int p, int tile) {
        const double u = (p + 0.5) / tile - 0.5;
        if (u <= 0.0) return std::tuple<int, int, double>{0, 0, 0.0};
        if (u >= kClaheTiles - 1) return std::tuple<int, int, double>{kClaheTiles - 1, kClaheTiles - 1, 0.0};
        const int lo = static_cast<int>(std::floor(u));
        return std::tuple<int, int, double>{lo, lo + 1, u - lo};
    };

    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const auto [y0, y1, by] = locate(y, th);
        for (int x = 0; x < w; ++x) {
            const auto [x0, x1, bx] = locate(x, tw);
            const auto b = static_cast<std::size_t>(intensity_bin(img(x, y)));
            auto m = [&](int tx, int ty) { return maps[static_cast<std::size_t>(ty * kClaheTiles + tx)][b]; };
            const double top = (1.0 - bx) * m(x0, y0) + bx * m(x1, y0);
            const double bottom = (1.0 - bx) * m(x0, y1) + bx * m(x1, y1);
            out(x, y) = std::clamp((1.0 - by) * top + by * bottom, 0.0, 1.0);
        }
    }
    return out;
}

GrayImage median_filter(const GrayImage& img, int size) {
    if (size < 1 || size % 2 == 0) throw InvalidArgument("median window size must be odd and >= 1");
    if (size == 1 || img.empty()) return img;
    auto out = size <= kDirectMedianMaxSize ? median_direct(img, size) : median_ranked(img, size);
    return GrayImage(img.width(), img.height(), std::move(out));
}

GrayImage subtract_background(const GrayImage& img, int background_size) {
    if (background_size < 3 || background_size % 2 == 0) {
        throw InvalidArgument("background size must be odd and >= 3");
    }
    if (background_size > img.width() && background_size > img.height()) {
        throw InvalidArgument("background size " + std::to_string(background_size) +
                              " exceeds both image dimensions");
    }
    const GrayImage background = median_filter(img, background_size);
    GrayImage out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) {
        out[i] = std::clamp(img[i] - background[i], 0.0, 1.0);
    }
    return out;
}

GrayImage median_smooth(const GrayImage& img, int median_size) {
    return median_filter(img, median_size);
}

std::vector<double> gaussian_kernel(double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
        throw InvalidArgument("gaussian radius must be positive");
    }
    const double sigma = radius / 2.0;
    const int hw = static_cast<int>(std::ceil(2.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * hw + 1));
    for (int i = -hw; i <= hw; ++i) {
        k[static_cast<std::size_t>(i + hw)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    }
    double sum = k[static_cast<std::size_t>(hw)];
    for (int i = 1; i <= hw; ++i) sum += 2.0 * k[static_cast<std::size_t>(hw + i)];
    for (double& v : k) v /= sum;
    return k;
}

GrayImage gaussian_smooth(const GrayImage& img, double radius) {
    const auto k = gaussian_kernel(radius);
    if (img.empty()) return img;
    const int hw = static_cast<int>(k.size() / 2);
    const int w = img.width();
    const int h = img.height();
    const auto cols = clamped_indices(w, hw);
    const auto rows = clamped_indices(h, hw);
    const double center = k[static_cast<std::size_t>(hw)];

    // Symmetric taps are summed in mirrored pairs so that the result is exactly
    // invariant under image flips.
    std::vector<double> tmp(img.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = center * img(x, y);
            for (int i = 1; i <= hw; ++i) {
                const double l = img(cols[static_cast<std::size_t>(x + hw - i)], y);
                const double r = img(cols[static_cast<std::size_t>(x + hw + i)], y);
                acc += k[static_cast<std::size_t>(hw + i)] * (l + r);
            }
            tmp[img.index(x, y)] = acc;
        }
    }
    std::vector<double> out(img.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = center * tmp[img.index(x, y)];
            for (int i = 1; i <= hw; ++i) {
                const double u = tmp[img.index(x, rows[static_cast<std::size_t>(y + hw - i)])];
                const double d = tmp[img.index(x, rows[static_cast<std::size_t>(y + hw + i)])];
                acc += k[static_cast<std::size_t>(hw + i)] * (u + d);
            }
            out[img.index(x, y)] = std::clamp(acc, 0.0, 1.0);
        }
    }
    return GrayImage(w, h, std::move(out));
}

FilterStages run_filter_pipeline(const RgbImage& img, const PipelineParams& p,
                                 bool keep_intermediates, Warnings* warnings) {
    validate(p);
    FilterStages st;
    st.grayscale = to_grayscale(img);
    GrayImage cur = st.grayscale;
    if (p.enable_equalization) {
        cur = equalize_adaptive(cur, p.equalization_clip_limit, warnings);
        if (keep_intermediates) st.equalized = cur;
    }
    if (p.enable_background_subtraction) {
        if (p.background_size > cur.width() && p.background_size > cur.height()) {
            throw ValidationError(std::vector<FieldError>{
                {"background_size", "exceeds both image dimensions (" + std::to_string(cur.width()) + "x" +
                                        std::to_string(cur.height()) + ")"}});
        }
        GrayImage background = median_filter(cur, p.background_size);
        GrayImage sub(cur.width(), cur.height());
        for (std::size_t i = 0; i < cur.size(); ++i) sub[i] = std::clamp(cur[i] - background[i], 0.0, 1.0);
        if (keep_intermediates) {
            st.background = std::move(background);
            st.background_subtracted = sub;
        }
        cur = std::move(sub);
    }
    if (p.enable_smoothing) {
        cur = median_smooth(cur, p.median_size);
        if (keep_intermediates) st.median_smoothed = cur;
        cur = gaussian_smooth(cur, p.gaussian_radius);
        if (keep_intermediates) st.smoothed = cur;
    }
    st.filtered = std::move(cur);
    return st;
}

}  // namespace cellseg
