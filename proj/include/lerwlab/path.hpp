#pragma once

#include <cstdint>
#include <cstdlib>
#include <vector>

#include "lerwlab/hash_table.hpp"
#include "lerwlab/point.hpp"

namespace lerwlab {

// A nearest-neighbor lattice path stored as one packed 64-bit word per
// point. Length conventions follow the usual one for walks: size() counts
// points, steps() counts edges.
template <int D>
class Path {
public:
    Path() = default;
    explicit Path(Point<D> start) { pts_.push_back(pack<D>(start)); }
    Path(std::initializer_list<Point<D>> pts) {
        for (const auto& p : pts) pts_.push_back(pack<D>(p));
    }

    std::size_t size() const { return pts_.size(); }
    bool empty() const { return pts_.empty(); }
    std::int64_t steps() const { return std::int64_t(pts_.size()) - 1; }

    Point<D> operator[](std::size_t i) const { return unpack<D>(pts_[i]); }
    std::uint64_t packed(std::size_t i) const { return pts_[i]; }
    Point<D> front() const { return unpack<D>(pts_.front()); }
    Point<D> back() const { return unpack<D>(pts_.back()); }

    void push_back(const Point<D>& p) { pts_.push_back(pack<D>(p)); }
    void push_packed(std::uint64_t w) { pts_.push_back(w); }
    void truncate(std::size_t n_points) { pts_.resize(n_points); }
    void clear() { pts_.clear(); }
    void reserve(std::size_t n) { pts_.reserve(n); }

    const std::vector<std::uint64_t>& words() const { return pts_; }

    Path reversed() const {
        Path r;
        r.pts_.assign(pts_.rbegin(), pts_.rend());
        return r;
    }

    Path subpath(std::size_t first, std::size_t last) const {  // inclusive indices
        Path r;
        r.pts_.assign(pts_.begin() + std::ptrdiff_t(first), pts_.begin() + std::ptrdiff_t(last) + 1);
        return r;
    }

    bool unit_steps() const {
        for (std::size_t i = 1; i < pts_.size(); ++i) {
            Point<D> d = (*this)[i] - (*this)[i - 1];
            if (d.norm2() != 1) return false;
        }
        return true;
    }

    bool is_simple() const {
        PointSet seen(pts_.size());
        for (std::uint64_t w : pts_) {
            bool fresh;
            seen.slot(w, fresh) = 1;
            if (!fresh) return false;
        }
        return true;
    }

    friend bool operator==(const Path& a, const Path& b) { return a.pts_ == b.pts_; }
    friend bool operator!=(const Path& a, const Path& b) { return !(a.pts_ == b.pts_); }

private:
    std::vector<std::uint64_t> pts_;
};

}  // namespace lerwlab
