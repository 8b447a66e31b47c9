#include "kmpc/pchip.hpp"

#include <algorithm>
#include <cmath>

#include "kmpc/errors.hpp"

namespace kmpc {
namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

// One-sided three-point end slope with the shape-preserving clamp.
double end_slope(double h0, double h1, double del0, double del1) {
    double d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if (sign(d) != sign(del0)) {
        d = 0.0;
    } else if (sign(del0) != sign(del1) && std::abs(d) > std::abs(3.0 * del0)) {
        d = 3.0 * del0;
    }
    return d;
}

}  // namespace

Pchip::Pchip(std::span<const double> t, std::span<const double> y)
    : t_(t.begin(), t.end()), y_(y.begin(), y.end()) {
    const std::size_t n = t_.size();
    if (n < 2) throw InputError("pchip: need at least two knots");
    if (y_.size() != n) throw InputError("pchip: t and y differ in length");
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!(t_[i + 1] > t_[i])) throw InputError("pchip: t must be strictly increasing");
    }

    std::vector<double> h(n - 1), del(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = t_[i + 1] - t_[i];
        del[i] = (y_[i + 1] - y_[i]) / h[i];
    }

    d_.assign(n, 0.0);
    if (n == 2) {
        d_[0] = d_[1] = del[0];
        return;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (sign(del[k - 1]) * sign(del[k]) > 0) {
            const double w1 = 2.0 * h[k] + h[k - 1];
            const double w2 = h[k] + 2.0 * h[k - 1];
            d_[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    d_[0] = end_slope(h[0], h[1], del[0], del[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
}

std::size_t Pchip::locate(double t) const {
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    if (it == t_.begin()) return 0;
    const auto i = static_cast<std::size_t>(it - t_.begin()) - 1;
    return std::min(i, t_.size() - 2);
}

Pchip::Cubic Pchip::interval(std::size_t i) const {
    const double h = t_[i + 1] - t_[i];
    const double del = (y_[i + 1] - y_[i]) / h;
    const double c2 = (3.0 * del - 2.0 * d_[i] - d_[i + 1]) / h;
    const double c3 = (d_[i] - 2.0 * del + d_[i + 1]) / (h * h);
    return {y_[i], d_[i], c2, c3};
}

double Pchip::operator()(double t) const {
    const std::size_t i = locate(t);
    if (t == t_[i]) return y_[i];
    if (t == t_[i + 1]) return y_[i + 1];
    const Cubic c = interval(i);
    const double s = t - t_[i];
    return c.c0 + s * (c.c1 + s * (c.c2 + s * c.c3));
}

}  // namespace kmpc
