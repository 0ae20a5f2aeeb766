#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace lerwlab {

// One Monte Carlo estimate at radius (or piece count) n.
struct EstimateRecord {
    double n = 0.0;
    double mean = 0.0;
    double stderr_ = 0.0;
    std::int64_t count = 0;
};

// Records sorted by strictly increasing n; the unit every exponent fit and
// band check consumes.
struct EstimateSeries {
    std::vector<EstimateRecord> records;

    void push(EstimateRecord r) {
        if (!records.empty() && r.n <= records.back().n)
            throw std::invalid_argument("EstimateSeries: n must be strictly increasing");
        records.push_back(r);
    }

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

}  // namespace lerwlab
