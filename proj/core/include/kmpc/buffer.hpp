#pragma once

#include <cstddef>
#include <deque>
#include <iosfwd>

#include "kmpc/types.hpp"

namespace kmpc {

struct Sample {
    double t = 0.0;
    Vector x;  ///< state
    Vector u;  ///< motor torque applied from t on
};

/// Time-equidistant shifted data ready for EDMD.
struct ResampledData {
    Matrix X;     ///< n x (N-1), grid points 0..N-2
    Matrix Xbar;  ///< n x (N-1), grid points 1..N-1
    Matrix U;     ///< m x (N-1), aligned with X
    double dt = 0.0;
};

/// Fixed-capacity FIFO of timestamped samples.
class TrajectoryBuffer {
public:
    static constexpr std::size_t kDefaultCapacity = 200;

    explicit TrajectoryBuffer(std::size_t capacity = kDefaultCapacity);

    /// Appends s, evicting the oldest sample once full. Throws InputError on
    /// a non-increasing timestamp, non-finite values or inconsistent sizes.
    void push(Sample s);

    std::size_t size() const { return samples_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return samples_.empty(); }
    bool full() const { return samples_.size() == capacity_; }
    void clear() { samples_.clear(); }

    const Sample& operator[](std::size_t i) const { return samples_[i]; }
    const Sample& front() const { return samples_.front(); }
    const Sample& back() const { return samples_.back(); }
    auto begin() const { return samples_.begin(); }
    auto end() const { return samples_.end(); }

    /// (t_last - t_first) / (N - 1). Throws InputError with fewer than 2 samples.
    double mean_dt() const;

    /// Interpolates every state and control coordinate independently with
    /// PCHIP and evaluates on t_0, t_0 + dt, ... up to the last grid time not
    /// after t_last. Throws IdentificationError with fewer than 4 samples or
    /// a span shorter than 2 dt.
    ResampledData resample(double dt) const;

    /// Header t,x_0..,u_0.. then one row per sample.
    void write_csv(std::ostream& os) const;

private:
    std::size_t capacity_;
    std::deque<Sample> samples_;
};

}  // namespace kmpc
