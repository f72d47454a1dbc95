#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace spintwa {

/// Streaming elementwise mean/variance (Welford) over fixed-length rows.
class RunningMoments {
public:
    RunningMoments() = default;
    explicit RunningMoments(int row_len) : mean_(row_len, 0.0), m2_(row_len, 0.0) {}

    void add(std::span<const double> row);
    void merge(const RunningMoments& other);

    int64_t count() const { return count_; }
    std::span<const double> mean() const { return mean_; }
    /// Standard error of the mean per element; 0 when count < 2.
    std::vector<double> stderr_of_mean() const;

private:
    int64_t count_ = 0;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

/// Moment accumulator over trajectories, partitioned into blocks. Blocks are
/// the unit of work distribution and of jackknife resampling; merging in
/// block order keeps results bit-identical for any worker count.
class EnsembleAccumulator {
public:
    EnsembleAccumulator(int n_blocks, int n_times, int row_len);

    int n_blocks() const { return static_cast<int>(blocks_.size()); }
    int n_times() const { return n_times_; }
    int row_len() const { return row_len_; }

    /// rows: n_times consecutive rows of row_len values for one trajectory.
    void add_trajectory(int block, std::span<const double> rows);
    void add_clamp_events(int block, int64_t events) { clamp_events_[block] += events; }
    void add_diverged(int block) { ++diverged_[block]; }

    struct Summary {
        int n_times = 0;
        int row_len = 0;
        int n_blocks = 0;
        std::vector<double> mean;       // n_times x row_len
        std::vector<double> stderr_;    // n_times x row_len
        std::vector<double> block_mean; // n_blocks x n_times x row_len
        std::vector<int64_t> block_count;
        int64_t n_kept = 0;
        int64_t n_diverged = 0;
        int64_t clamp_events = 0;
    };
    Summary finalize() const;

private:
    int n_times_;
    int row_len_;
    // per block: one RunningMoments spanning all save times
    std::vector<RunningMoments> blocks_;
    std::vector<int64_t> clamp_events_;
    std::vector<int64_t> diverged_;
};

}  // namespace spintwa
