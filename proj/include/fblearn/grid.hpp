#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fblearn {

// Row-major 2-D grid of doubles. Shared container for residual maps,
// detector maps and error maps; value-range invariants are enforced at
// the producing call sites.
class Grid {
public:
    Grid() = default;

    Grid(int width, int height, double fill = 0.0)
        : width_(width), height_(height) {
        check_dims(width, height);
        values_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    Grid(int width, int height, std::vector<double> values)
        : width_(width), height_(height), values_(std::move(values)) {
        check_dims(width, height);
        if (values_.size() != static_cast<std::size_t>(width) * height)
            throw std::invalid_argument("Grid: value count does not match width*height");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return values_.size(); }

    double operator()(int x, int y) const { return values_[index(x, y)]; }
    double& operator()(int x, int y) { return values_[index(x, y)]; }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    std::span<const double> values() const { return values_; }
    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }

    bool same_shape(const Grid& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    static void check_dims(int width, int height) {
        if (width < 1 || height < 1)
            throw std::invalid_argument("Grid: width and height must be >= 1");
    }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

inline void require_same_shape(const Grid& a, const Grid& b, const char* what) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(what) + ": incompatible map shapes " +
                                    std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                    " vs " + std::to_string(b.width()) + "x" +
                                    std::to_string(b.height()));
}

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

inline bool in_unit_range(const Grid& g) {
    return std::all_of(g.values().begin(), g.values().end(),
                       [](double v) { return v >= 0.0 && v <= 1.0; });
}

}  // namespace fblearn
