#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>

namespace lerwlab {

// Lattice geometry for Z^2 and Z^3. Points are stored as 32-bit integer
// coordinates and packed into one 64-bit word for hashing and flat path
// storage (2x32 bits in 2D, 3x21 bits biased in 3D).

template <int D>
struct Point {
    static_assert(D == 2 || D == 3, "only Z^2 and Z^3 are supported");

    std::array<std::int32_t, D> c{};

    constexpr std::int32_t operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
    constexpr std::int32_t& operator[](int i) { return c[static_cast<std::size_t>(i)]; }

    // squared Euclidean norm; exact in 64-bit for all packable points
    constexpr std::int64_t norm2() const {
        std::int64_t s = 0;
        for (int i = 0; i < D; ++i) s += std::int64_t(c[std::size_t(i)]) * c[std::size_t(i)];
        return s;
    }

    double norm() const { return std::sqrt(double(norm2())); }

    constexpr Point neighbor(int dir) const {
        Point p = *this;
        p.c[std::size_t(dir >> 1)] += (dir & 1) ? 1 : -1;
        return p;
    }

    friend constexpr bool operator==(const Point& a, const Point& b) { return a.c == b.c; }
    friend constexpr bool operator!=(const Point& a, const Point& b) { return !(a.c == b.c); }
};

template <int D>
constexpr Point<D> operator+(Point<D> a, const Point<D>& b) {
    for (int i = 0; i < D; ++i) a.c[std::size_t(i)] += b.c[std::size_t(i)];
    return a;
}

template <int D>
constexpr Point<D> operator-(Point<D> a, const Point<D>& b) {
    for (int i = 0; i < D; ++i) a.c[std::size_t(i)] -= b.c[std::size_t(i)];
    return a;
}

template <int D>
constexpr Point<D> origin() {
    return Point<D>{};
}

template <int D>
constexpr Point<D> unit(int axis) {
    Point<D> p{};
    p.c[std::size_t(axis)] = 1;
    return p;
}

inline constexpr int num_dirs(int d) { return 2 * d; }

// In 3D each coordinate is packed into 21 bits with a bias, so points must
// stay within +-(2^20 - 1). Walks run to exit of a ball of radius n never
// leave |x| <= n + 1, which keeps desk-scale runs far below the limit.
inline constexpr std::int32_t kCoordLimit3 = (std::int32_t(1) << 20) - 1;

template <int D>
constexpr std::uint64_t pack(const Point<D>& p) {
    if constexpr (D == 2) {
        return (std::uint64_t(std::uint32_t(p.c[0])) << 32) | std::uint64_t(std::uint32_t(p.c[1]));
    } else {
        assert(p.c[0] >= -kCoordLimit3 && p.c[0] <= kCoordLimit3);
        assert(p.c[1] >= -kCoordLimit3 && p.c[1] <= kCoordLimit3);
        assert(p.c[2] >= -kCoordLimit3 && p.c[2] <= kCoordLimit3);
        const std::uint64_t bias = std::uint64_t(1) << 20;
        return ((std::uint64_t(std::uint32_t(p.c[0])) + bias) & 0x1FFFFF) << 42 |
               ((std::uint64_t(std::uint32_t(p.c[1])) + bias) & 0x1FFFFF) << 21 |
               ((std::uint64_t(std::uint32_t(p.c[2])) + bias) & 0x1FFFFF);
    }
}

template <int D>
constexpr Point<D> unpack(std::uint64_t w) {
    Point<D> p{};
    if constexpr (D == 2) {
        p.c[0] = std::int32_t(std::uint32_t(w >> 32));
        p.c[1] = std::int32_t(std::uint32_t(w));
    } else {
        const std::int64_t bias = std::int64_t(1) << 20;
        p.c[0] = std::int32_t(std::int64_t((w >> 42) & 0x1FFFFF) - bias);
        p.c[1] = std::int32_t(std::int64_t((w >> 21) & 0x1FFFFF) - bias);
        p.c[2] = std::int32_t(std::int64_t(w & 0x1FFFFF) - bias);
    }
    return p;
}

// Open Euclidean ball B(center, radius) = { z : |z - center| < radius }.
// Radii may be non-integer. Membership |z-c| < r is decided on integers:
// inside_max is the largest integer strictly below radius^2, so the strict
// inequality is exact for every packable point (|z-c|^2 <= 3*2^40 < 2^53).
template <int D>
struct Ball {
    Point<D> center{};
    double radius = 0.0;

    Ball() = default;
    Ball(Point<D> c, double r) : center(c), radius(r) {
        assert(r > 0.0);
        double r2 = r * r;
        inside_max_ = std::int64_t(std::floor(r2));
        if (double(inside_max_) == r2) --inside_max_;
    }
    static Ball centered(double r) { return Ball(origin<D>(), r); }

    // Largest squared distance from the center still inside the ball.
    std::int64_t inside_max() const { return inside_max_; }

    bool contains(const Point<D>& p) const { return (p - center).norm2() <= inside_max_; }

private:
    std::int64_t inside_max_ = -1;
};

}  // namespace lerwlab
