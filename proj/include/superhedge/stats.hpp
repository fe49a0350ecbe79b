#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace superhedge {

/**
 * One-pass mean / variance / extrema (Welford), mergeable across batches with
 * the pairwise update of Chan, Golub and LeVeque. Merging in a fixed order
 * gives bit-identical results independent of how batches were scheduled.
 */
class RunningStats {
public:
    void push(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
        if (x < min_) min_ = x;
        if (x > max_) max_ = x;
    }

    void merge(const RunningStats& other) {
        if (other.n_ == 0) return;
        if (n_ == 0) {
            *this = other;
            return;
        }
        const double na = static_cast<double>(n_);
        const double nb = static_cast<double>(other.n_);
        const double n = na + nb;
        const double delta = other.mean_ - mean_;
        mean_ += delta * nb / n;
        m2_ += other.m2_ + delta * delta * na * nb / n;
        n_ += other.n_;
        if (other.min_ < min_) min_ = other.min_;
        if (other.max_ > max_) max_ = other.max_;
    }

    [[nodiscard]] std::uint64_t count() const { return n_; }
    [[nodiscard]] double mean() const { return n_ ? mean_ : std::numeric_limits<double>::quiet_NaN(); }
    /// Population variance (divides by n).
    [[nodiscard]] double variance() const {
        return n_ ? m2_ / static_cast<double>(n_) : std::numeric_limits<double>::quiet_NaN();
    }
    [[nodiscard]] double stddev() const;
    [[nodiscard]] double min() const { return min_; }
    [[nodiscard]] double max() const { return max_; }

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double min_ = std::numeric_limits<double>::infinity();
    double max_ = -std::numeric_limits<double>::infinity();
};

/// Fixed-width histogram over [lo, hi]; the last bin is closed on the right.
class Histogram {
public:
    Histogram(double lo, double hi, std::size_t bins);

    void add(double x);

    [[nodiscard]] std::size_t bins() const { return counts_.size(); }
    [[nodiscard]] double bin_lo(std::size_t i) const;
    [[nodiscard]] double bin_hi(std::size_t i) const;
    [[nodiscard]] std::uint64_t count(std::size_t i) const { return counts_[i]; }
    [[nodiscard]] std::uint64_t total() const;

private:
    double lo_;
    double hi_;
    std::vector<std::uint64_t> counts_;
};

}  // namespace superhedge
