#include "cellseg/watershed.hpp"

#include <algorithm>
#include <array>
#include <queue>
#include <tuple>

namespace cellseg {

namespace {

constexpr std::array<std::pair<int, int>, 8> kNeighbors{{
    {-1, -1}, {0, -1}, {1, -1}, {-1, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1},
}};

template <typename Fn>
void for_each_neighbor(int w, int h, int x, int y, Fn fn) {
    for (const auto& [dx, dy] : kNeighbors) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        fn(nx, ny, static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) + static_cast<std::size_t>(nx));
    }
}

}  // namespace

std::size_t BackgroundMask::count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

BackgroundMask compute_background_mask(const GrayImage& img, const OtsuLevels& levels) {
    BackgroundMask m{img.width(), img.height(), std::vector<bool>(img.size())};
    for (std::size_t i = 0; i < img.size(); ++i) m.mask[i] = img[i] < levels.t1;
    return m;
}

GrayImage invert(const GrayImage& img) {
    GrayImage out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = 1.0 - img[i];
    return out;
}

GrayImage invert_and_enforce(const GrayImage& img, const BackgroundMask& mask) {
    require_same_shape(img, mask, "invert_and_enforce");
    GrayImage out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = mask[i] ? 0.0 : 1.0 - img[i];
    return out;
}

LabelMatrix regional_minima(const GrayImage& elev) {
    const int w = elev.width();
    const int h = elev.height();
    std::vector<Label> plateau(elev.size(), 0);
    std::vector<Label> out(elev.size(), 0);
    std::vector<std::size_t> members;
    std::vector<std::size_t> stack;
    Label plateau_id = 0;
    Label minima = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t start = elev.index(x, y);
            if (plateau[start] != 0) continue;
            const double v = elev[start];
            ++plateau_id;
            members.clear();
            stack.assign(1, start);
            plateau[start] = plateau_id;
            bool is_minimum = true;
            while (!stack.empty()) {
                const std::size_t p = stack.back();
                stack.pop_back();
                members.push_back(p);
                const int px = static_cast<int>(p % static_cast<std::size_t>(w));
                const int py = static_cast<int>(p / static_cast<std::size_t>(w));
                for_each_neighbor(w, h, px, py, [&](int, int, std::size_t q) {
                    if (elev[q] < v) {
                        is_minimum = false;
                    } else if (elev[q] == v && plateau[q] == 0) {
                        plateau[q] = plateau_id;
                        stack.push_back(q);
                    }
                });
            }
            if (is_minimum) {
                ++minima;
                for (std::size_t p : members) out[p] = minima;
            }
        }
    }
    return LabelMatrix(w, h, std::move(out));
}

LabelMatrix watershed_flood(const GrayImage& elev) {
    const int w = elev.width();
    const int h = elev.height();
    const LabelMatrix seeds = regional_minima(elev);

    constexpr Label kUnvisited = 0;
    constexpr Label kRidge = static_cast<Label>(-1);
    std::vector<Label> labels(seeds.labels().begin(), seeds.labels().end());
    std::vector<bool> queued(elev.size(), false);

    // (elevation, sequence, pixel, label of the enqueuing neighbor)
    using Entry = std::tuple<double, std::uint64_t, std::size_t, Label>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    std::uint64_t seq = 0;

    auto push_neighbors = [&](std::size_t p, Label label) {
        const int px = static_cast<int>(p % static_cast<std::size_t>(w));
        const int py = static_cast<int>(p / static_cast<std::size_t>(w));
        for_each_neighbor(w, h, px, py, [&](int, int, std::size_t q) {
            if (labels[q] == kUnvisited && !queued[q]) {
                queued[q] = true;
                queue.emplace(elev[q], seq++, q, label);
            }
        });
    };

    for (std::size_t p = 0; p < labels.size(); ++p) {
        if (labels[p] != kUnvisited) push_neighbors(p, labels[p]);
    }

    while (!queue.empty()) {
        const auto [e, s, p, from] = queue.top();
        queue.pop();
        const int px = static_cast<int>(p % static_cast<std::size_t>(w));
        const int py = static_cast<int>(p / static_cast<std::size_t>(w));
        bool conflict = false;
        for_each_neighbor(w, h, px, py, [&](int, int, std::size_t q) {
            const Label l = labels[q];
            if (l != kUnvisited && l != kRidge && l != from) conflict = true;
        });
        if (conflict) {
            labels[p] = kRidge;
            continue;
        }
        labels[p] = from;
        push_neighbors(p, from);
    }

    for (Label& l : labels) {
        if (l == kRidge) l = 0;
    }
    return LabelMatrix(w, h, std::move(labels));
}

LabelMatrix discard_background_regions(const LabelMatrix& lm, const BackgroundMask& mask) {
    require_same_shape(lm, mask, "discard_background_regions");
    std::vector<bool> touches(static_cast<std::size_t>(lm.n_objects()) + 1, false);
    for (std::size_t i = 0; i < lm.size(); ++i) {
        if (mask[i]) touches[lm[i]] = true;
    }
    return lm.filtered([&](Label l) { return !touches[l]; });
}

LabelMatrix apply_limits(const LabelMatrix& lm, const GrayImage& raw_gray, long min_area,
                         long max_area, double min_signal) {
    require_same_shape(lm, raw_gray, "apply_limits");
    const std::size_t n = static_cast<std::size_t>(lm.n_objects()) + 1;
    std::vector<std::size_t> area(n, 0);
    std::vector<double> sum(n, 0.0);
    for (std::size_t i = 0; i < lm.size(); ++i) {
        ++area[lm[i]];
        sum[lm[i]] += raw_gray[i];
    }
    return lm.filtered([&](Label l) {
        const auto a = static_cast<long>(area[l]);
        if (a < min_area || a > max_area) return false;
        return sum[l] / static_cast<double>(area[l]) >= min_signal;
    });
}

LabelMatrix connected_components(int width, int height, const std::vector<bool>& foreground) {
    if (foreground.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw InvalidArgument("connected_components: mask size mismatch");
    }
    std::vector<Label> labels(foreground.size(), 0);
    std::vector<std::size_t> stack;
    Label next = 0;
    for (std::size_t start = 0; start < foreground.size(); ++start) {
        if (!foreground[start] || labels[start] != 0) continue;
        labels[start] = ++next;
        stack.assign(1, start);
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            const int px = static_cast<int>(p % static_cast<std::size_t>(width));
            const int py = static_cast<int>(p / static_cast<std::size_t>(width));
            for_each_neighbor(width, height, px, py, [&](int, int, std::size_t q) {
                if (foreground[q] && labels[q] == 0) {
                    labels[q] = next;
                    stack.push_back(q);
                }
            });
        }
    }
    return LabelMatrix(width, height, std::move(labels));
}

}  // namespace cellseg
