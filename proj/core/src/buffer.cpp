#include "kmpc/buffer.hpp"

#include <cmath>
#include <ostream>
#include <vector>

#include "kmpc/errors.hpp"
#include "kmpc/pchip.hpp"

namespace kmpc {

TrajectoryBuffer::TrajectoryBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw InputError("buffer capacity must be positive");
}

void TrajectoryBuffer::push(Sample s) {
    if (!std::isfinite(s.t) || !s.x.allFinite() || !s.u.allFinite()) {
        throw InputError("buffer: sample contains non-finite values");
    }
    if (!samples_.empty()) {
        if (!(s.t > samples_.back().t)) {
            throw InputError("buffer: timestamps must be strictly increasing");
        }
        if (s.x.size() != samples_.back().x.size() || s.u.size() != samples_.back().u.size()) {
            throw InputError("buffer: sample dimensions changed");
        }
    }
    samples_.push_back(std::move(s));
    if (samples_.size() > capacity_) samples_.pop_front();
}

double TrajectoryBuffer::mean_dt() const {
    if (samples_.size() < 2) throw InputError("mean_dt: need at least two samples");
    return (samples_.back().t - samples_.front().t) / static_cast<double>(samples_.size() - 1);
}

ResampledData TrajectoryBuffer::resample(double dt) const {
    if (samples_.size() < 4) throw IdentificationError("resample: need at least four samples");
    if (!(dt > 0.0)) throw IdentificationError("resample: dt must be positive");
    const double t0 = samples_.front().t;
    const double span = samples_.back().t - t0;
    if (span < 2.0 * dt) throw IdentificationError("resample: buffer spans less than 2 dt");

    // Largest grid index with t0 + k dt <= t_last; the epsilon absorbs
    // rounding when the data is already uniform.
    const auto last = static_cast<std::size_t>(std::floor(span / dt + 1e-9));
    const std::size_t grid = last + 1;

    const std::size_t N = samples_.size();
    const auto n = static_cast<std::size_t>(samples_.front().x.size());
    const auto m = static_cast<std::size_t>(samples_.front().u.size());

    std::vector<double> t(N), y(N);
    for (std::size_t i = 0; i < N; ++i) t[i] = samples_[i].t;

    std::vector<double> tg(grid);
    for (std::size_t k = 0; k < grid; ++k) tg[k] = t0 + static_cast<double>(k) * dt;

    Matrix Xg(n, grid), Ug(m, grid);
    auto interpolate_row = [&](auto get, Matrix& out, Eigen::Index row) {
        for (std::size_t i = 0; i < N; ++i) y[i] = get(samples_[i]);
        const Pchip f(t, y);
        for (std::size_t k = 0; k < grid; ++k) out(row, static_cast<Eigen::Index>(k)) = f(tg[k]);
    };
    for (std::size_t r = 0; r < n; ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        interpolate_row([ri](const Sample& s) { return s.x[ri]; }, Xg, ri);
    }
    for (std::size_t r = 0; r < m; ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        interpolate_row([ri](const Sample& s) { return s.u[ri]; }, Ug, ri);
    }

    const auto cols = static_cast<Eigen::Index>(grid - 1);
    ResampledData out;
    out.X = Xg.leftCols(cols);
    out.Xbar = Xg.rightCols(cols);
    out.U = Ug.leftCols(cols);
    out.dt = dt;
    return out;
}

void TrajectoryBuffer::write_csv(std::ostream& os) const {
    if (samples_.empty()) {
        os << "t\n";
        return;
    }
    os << "t";
    for (Eigen::Index i = 0; i < samples_.front().x.size(); ++i) os << ",x_" << i;
    for (Eigen::Index i = 0; i < samples_.front().u.size(); ++i) os << ",u_" << i;
    os << "\n";
    const auto old = os.precision(17);
    for (const auto& s : samples_) {
        os << s.t;
        for (Eigen::Index i = 0; i < s.x.size(); ++i) os << "," << s.x[i];
        for (Eigen::Index i = 0; i < s.u.size(); ++i) os << "," << s.u[i];
        os << "\n";
    }
    os.precision(old);
}

}  // namespace kmpc
