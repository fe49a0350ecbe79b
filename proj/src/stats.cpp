#include "superhedge/stats.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace superhedge {

double RunningStats::stddev() const { return std::sqrt(variance()); }

Histogram::Histogram(double lo, double hi, std::size_t bins) : lo_(lo), hi_(hi), counts_(bins, 0) {
    if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
    if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
        throw std::invalid_argument("histogram needs a finite range lo <= hi");
}

void Histogram::add(double x) {
    if (x < lo_ || x > hi_) return;
    std::size_t i = 0;
    if (hi_ > lo_) {
        const double pos = (x - lo_) / (hi_ - lo_) * static_cast<double>(counts_.size());
        i = std::min(static_cast<std::size_t>(pos), counts_.size() - 1);
    }
    ++counts_[i];
}

double Histogram::bin_lo(std::size_t i) const {
    return lo_ + (hi_ - lo_) * static_cast<double>(i) / static_cast<double>(counts_.size());
}

double Histogram::bin_hi(std::size_t i) const {
    return i + 1 == counts_.size() ? hi_ : bin_lo(i + 1);
}

std::uint64_t Histogram::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

}  // namespace superhedge
