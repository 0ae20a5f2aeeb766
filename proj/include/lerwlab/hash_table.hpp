#pragma once

#include <cstdint>
#include <vector>

#include "lerwlab/rng.hpp"

namespace lerwlab {

// Open-addressing map from packed lattice points to a small payload.
// This sits in the inner loop of every sampler, so it is tuned for the
// access pattern we actually have: insert/overwrite and lookup, never
// erase, and a whole-map reset between samples. Reset is O(1) via epoch
// stamps, and key, stamp and payload share one slot so a probe touches a
// single cache line.
template <class V = std::uint32_t>
class PointTable {
    struct Slot {
        std::uint64_t key;
        std::uint32_t stamp;
        V val;
    };

public:
    explicit PointTable(std::size_t expected = 1024) { rehash(capacity_for(expected)); }

    void clear() {
        if (++epoch_ == 0) {
            for (Slot& s : slots_) s.stamp = 0;
            epoch_ = 1;
        }
        size_ = 0;
    }

    // Pre-size so a sampling pass never rehashes mid-walk.
    void reserve(std::size_t expected) {
        std::size_t cap = capacity_for(expected);
        if (cap > slots_.size()) {
            rehash(cap);
        } else {
            clear();
        }
    }

    std::size_t size() const { return size_; }

    // Returns the payload slot for key, creating it if absent.
    // `fresh` reports whether the slot was newly claimed this epoch.
    V& slot(std::uint64_t key, bool& fresh) {
        if (size_ >= grow_at_) grow();
        std::size_t i = detail::mix64v(key) & mask_;
        while (slots_[i].stamp == epoch_ && slots_[i].key != key) i = (i + 1) & mask_;
        Slot& s = slots_[i];
        fresh = s.stamp != epoch_;
        if (fresh) {
            s.stamp = epoch_;
            s.key = key;
            ++size_;
        }
        return s.val;
    }

    // Returns nullptr when the key is absent.
    const V* find(std::uint64_t key) const {
        std::size_t i = detail::mix64v(key) & mask_;
        while (true) {
            const Slot& s = slots_[i];
            if (s.stamp != epoch_) return nullptr;
            if (s.key == key) return &s.val;
            i = (i + 1) & mask_;
        }
    }

    bool contains(std::uint64_t key) const { return find(key) != nullptr; }

    void insert(std::uint64_t key, V val) {
        bool fresh;
        slot(key, fresh) = val;
    }

    template <class Fn>  // Fn(key, value)
    void for_each(Fn&& fn) const {
        for (const Slot& s : slots_)
            if (s.stamp == epoch_) fn(s.key, s.val);
    }

private:
    static std::size_t capacity_for(std::size_t expected) {
        std::size_t cap = 16;
        while (cap * 5 < expected * 8) cap <<= 1;  // keep load below 0.625
        return cap;
    }

    void rehash(std::size_t cap) {
        slots_.assign(cap, Slot{0, 0, V{}});
        mask_ = cap - 1;
        grow_at_ = cap / 8 * 5;
        epoch_ = 1;
        size_ = 0;
    }

    void grow() {
        std::vector<Slot> old = std::move(slots_);
        std::uint32_t old_epoch = epoch_;
        rehash(old.size() * 2);
        for (const Slot& s : old)
            if (s.stamp == old_epoch) insert(s.key, s.val);
    }

    std::vector<Slot> slots_;
    std::size_t mask_ = 0;
    std::size_t grow_at_ = 0;
    std::size_t size_ = 0;
    std::uint32_t epoch_ = 1;
};

// Set of packed points; payload ignored.
using PointSet = PointTable<std::uint32_t>;

}  // namespace lerwlab
