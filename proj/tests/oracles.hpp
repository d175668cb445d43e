#pragma once

// Slow, independently written reference implementations used to check the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <utility>
#include <vector>

#include "cellseg/image.hpp"
#include "cellseg/optimize.hpp"

namespace oracle {

// Between-class variance in the deviation form sum_i w_i (mu_i - mu)^2, with class
// sums accumulated as exact integers. Empty classes contribute nothing.
struct ClassSums {
    std::uint64_t n = 0;
    std::uint64_t moment = 0;
};

inline double between_class(std::initializer_list<ClassSums> classes) {
    std::uint64_t n = 0, m = 0;
    for (const auto& c : classes) {
        n += c.n;
        m += c.moment;
    }
    const double mu = static_cast<double>(m) / static_cast<double>(n);
    double s = 0.0;
    for (const auto& c : classes) {
        if (c.n == 0) continue;
        const double w = static_cast<double>(c.n) / static_cast<double>(n);
        const double mu_c = static_cast<double>(c.moment) / static_cast<double>(c.n);
        s += w * (mu_c - mu) * (mu_c - mu);
    }
    return s;
}

// Exhaustive single-level Otsu: lower class 0..k for k in 0..254. Ties (relative
// 1e-12 of the maximum) go to the smallest k.
inline int otsu_single(const std::vector<std::uint64_t>& h) {
    std::vector<double> score;
    for (int k = 0; k < 255; ++k) {
        ClassSums a, b;
        for (int i = 0; i < 256; ++i) {
            ClassSums& c = i <= k ? a : b;
            c.n += h[static_cast<std::size_t>(i)];
            c.moment += static_cast<std::uint64_t>(i) * h[static_cast<std::size_t>(i)];
        }
        score.push_back(between_class({a, b}));
    }
    const double best = *std::max_element(score.begin(), score.end());
    for (int k = 0; k < 255; ++k) {
        if (score[static_cast<std::size_t>(k)] >= best - 1e-12 * std::abs(best)) return k;
    }
    return -1;
}

// Exhaustive two-level Otsu over k1 < k2 <= 254 with cumulative integer sums.
inline std::pair<int, int> otsu_two(const std::vector<std::uint64_t>& h) {
    std::array<std::uint64_t, 257> cn{}, cm{};
    for (int i = 0; i < 256; ++i) {
        cn[static_cast<std::size_t>(i + 1)] = cn[static_cast<std::size_t>(i)] + h[static_cast<std::size_t>(i)];
        cm[static_cast<std::size_t>(i + 1)] =
            cm[static_cast<std::size_t>(i)] + static_cast<std::uint64_t>(i) * h[static_cast<std::size_t>(i)];
    }
    auto range = [&](int a, int b) {  // bins a..b inclusive
        return ClassSums{cn[static_cast<std::size_t>(b + 1)] - cn[static_cast<std::size_t>(a)],
                         cm[static_cast<std::size_t>(b + 1)] - cm[static_cast<std::size_t>(a)]};
    };
    std::vector<std::pair<std::pair<int, int>, double>> all;
    double best = -1.0;
    for (int k1 = 0; k1 <= 253; ++k1) {
        for (int k2 = k1 + 1; k2 <= 254; ++k2) {
            const double s = between_class({range(0, k1), range(k1 + 1, k2), range(k2 + 1, 255)});
            all.push_back({{k1, k2}, s});
            best = std::max(best, s);
        }
    }
    for (const auto& [k, s] : all) {
        if (s >= best - 1e-12 * std::abs(best)) return k;
    }
    return {-1, -1};
}

// Median by sorting each replicate-padded window.
inline cellseg::GrayImage median(const cellseg::GrayImage& img, int size) {
    const int r = size / 2;
    cellseg::GrayImage out(img.width(), img.height());
    std::vector<double> win;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            win.clear();
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) win.push_back(img.clamped(x + dx, y + dy));
            }
            std::sort(win.begin(), win.end());
            out(x, y) = win[win.size() / 2];
        }
    }
    return out;
}

// Direct 2-D convolution with the outer product of a Gaussian (sigma = radius/2,
// half-width ceil(2 sigma)), replicate padding.
inline cellseg::GrayImage gaussian(const cellseg::GrayImage& img, double radius) {
    const double sigma = radius / 2.0;
    const int hw = static_cast<int>(std::ceil(2.0 * sigma));
    std::vector<double> k;
    double sum = 0.0;
    for (int i = -hw; i <= hw; ++i) {
        k.push_back(std::exp(-(i * i) / (2.0 * sigma * sigma)));
        sum += k.back();
    }
    for (double& v : k) v /= sum;
    cellseg::GrayImage out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double acc = 0.0;
            for (int dy = -hw; dy <= hw; ++dy) {
                for (int dx = -hw; dx <= hw; ++dx) {
                    acc += k[static_cast<std::size_t>(dy + hw)] * k[static_cast<std::size_t>(dx + hw)] *
                           img.clamped(x + dx, y + dy);
                }
            }
            out(x, y) = acc;
        }
    }
    return out;
}

// Regional minima count: flood each equal-valued 8-connected plateau and count those
// with no strictly lower neighbor anywhere on the plateau.
inline int count_minima(const cellseg::GrayImage& e) {
    const int w = e.width(), h = e.height();
    std::vector<int> seen(e.size(), 0);
    int count = 0;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            if (seen[e.index(sx, sy)]) continue;
            const double v = e(sx, sy);
            bool minimum = true;
            std::vector<std::pair<int, int>> stack{{sx, sy}};
            seen[e.index(sx, sy)] = 1;
            while (!stack.empty()) {
                auto [x, y] = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        if (e(nx, ny) < v) minimum = false;
                        if (e(nx, ny) == v && !seen[e.index(nx, ny)]) {
                            seen[e.index(nx, ny)] = 1;
                            stack.push_back({nx, ny});
                        }
                    }
                }
            }
            count += minimum;
        }
    }
    return count;
}

// 8-connected component count by recursive-free flood fill.
inline int count_components(int w, int h, const std::vector<bool>& fg) {
    std::vector<bool> seen(fg.size(), false);
    int count = 0;
    for (int i = 0; i < w * h; ++i) {
        if (!fg[static_cast<std::size_t>(i)] || seen[static_cast<std::size_t>(i)]) continue;
        ++count;
        std::vector<int> stack{i};
        seen[static_cast<std::size_t>(i)] = true;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int x = p % w + dx, y = p / w + dy;
                    if (x < 0 || y < 0 || x >= w || y >= h) continue;
                    const auto q = static_cast<std::size_t>(y * w + x);
                    if (fg[q] && !seen[q]) {
                        seen[q] = true;
                        stack.push_back(static_cast<int>(q));
                    }
                }
            }
        }
    }
    return count;
}

struct Counts {
    long tp = 0, tn = 0, fp = 0, fn = 0;
};

inline Counts confusion(const std::map<cellseg::Label, cellseg::State>& pred,
                        const cellseg::GroundTruthStates& truth, cellseg::State positive) {
    Counts c;
    for (const auto& t : truth) {
        const bool actual = t.state == positive;
        const bool predicted = pred.at(t.label) == positive;
        if (actual && predicted) ++c.tp;
        else if (!actual && !predicted) ++c.tn;
        else if (predicted) ++c.fp;
        else ++c.fn;
    }
    return c;
}

// Twenty pixels per cell: the six listed rows of each example cell followed by fill
// values chosen so the channel means are exactly the listed means.
struct CellPixels {
    std::vector<int> r, g, b;
};

inline std::vector<int> complete_column(std::vector<int> listed, int mean, int n) {
    int sum = 0;
    for (int v : listed) sum += v;
    const int rest = mean * n - sum;
    const int slots = n - static_cast<int>(listed.size());
    for (int i = 0; i < slots; ++i) listed.push_back(rest / slots + (i < rest % slots ? 1 : 0));
    return listed;
}

inline CellPixels table_cell_a() {
    return {complete_column({0, 6, 20, 0, 13, 0}, 17, 20), complete_column({12, 6, 18, 9, 12, 12}, 10, 20),
            complete_column({28, 19, 5, 15, 2, 28}, 9, 20)};
}

inline CellPixels table_cell_b() {
    return {complete_column({0, 9, 0, 5, 8, 0}, 3, 20), complete_column({21, 30, 15, 13, 13, 21}, 16, 20),
            complete_column({5, 2, 15, 3, 11, 5}, 44, 20)};
}

// Inverse standard normal CDF by bisection on erfc; plenty for quantile sampling.
inline double normal_quantile(double p) {
    double lo = -12.0, hi = 12.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace oracle
