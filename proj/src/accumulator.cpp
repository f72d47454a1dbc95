#include "spintwa/accumulator.hpp"

#include <cassert>
#include <cmath>

namespace spintwa {

void RunningMoments::add(std::span<const double> row) {
    assert(row.size() == mean_.size());
    ++count_;
    const double inv = 1.0 / static_cast<double>(count_);
    for (size_t i = 0; i < mean_.size(); ++i) {
        const double delta = row[i] - mean_[i];
        mean_[i] += delta * inv;
        m2_[i] += delta * (row[i] - mean_[i]);
    }
}

void RunningMoments::merge(const RunningMoments& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    for (size_t i = 0; i < mean_.size(); ++i) {
        const double delta = other.mean_[i] - mean_[i];
        mean_[i] += delta * nb / n;
        m2_[i] += other.m2_[i] + delta * delta * na * nb / n;
    }
    count_ += other.count_;
}

std::vector<double> RunningMoments::stderr_of_mean() const {
    std::vector<double> out(mean_.size(), 0.0);
    if (count_ < 2) return out;
    const double n = static_cast<double>(count_);
    for (size_t i = 0; i < mean_.size(); ++i)
        out[i] = std::sqrt(std::max(m2_[i], 0.0) / (n - 1.0) / n);
    return out;
}

EnsembleAccumulator::EnsembleAccumulator(int n_blocks, int n_times, int row_len)
    : n_times_(n_times),
      row_len_(row_len),
      blocks_(n_blocks, RunningMoments(n_times * row_len)),
      clamp_events_(n_blocks, 0),
      diverged_(n_blocks, 0) {}

void EnsembleAccumulator::add_trajectory(int block, std::span<const double> rows) {
    blocks_[block].add(rows);
}

EnsembleAccumulator::Summary EnsembleAccumulator::finalize() const {
    Summary s;
    s.n_times = n_times_;
    s.row_len = row_len_;
    s.n_blocks = n_blocks();
    const int flat = n_times_ * row_len_;
    s.block_mean.resize(static_cast<size_t>(s.n_blocks) * flat);
    s.block_count.resize(s.n_blocks);
    RunningMoments total(flat);
    for (int b = 0; b < s.n_blocks; ++b) {
        total.merge(blocks_[b]);
        s.block_count[b] = blocks_[b].count();
        const auto bm = blocks_[b].mean();
        std::copy(bm.begin(), bm.end(), s.block_mean.begin() + static_cast<size_t>(b) * flat);
        s.clamp_events += clamp_events_[b];
        s.n_diverged += diverged_[b];
    }
    s.n_kept = total.count();
    const auto m = total.mean();
    s.mean.assign(m.begin(), m.end());
    s.stderr_ = total.stderr_of_mean();
    return s;
}

}  // namespace spintwa
