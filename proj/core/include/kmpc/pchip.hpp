#pragma once

#include <span>
#include <vector>

namespace kmpc {

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch–Carlson).
///
/// Interior knot slopes use the weighted harmonic mean of the adjacent
/// secants and are zero wherever the secants change sign or one of them
/// vanishes. Endpoint slopes use the one-sided three-point formula, clamped
/// so the end intervals stay monotone. Queries outside [t_0, t_{N-1}] are
/// evaluated on the end polynomials.
class Pchip {
public:
    /// Throws InputError unless N >= 2 and t is strictly increasing.
    Pchip(std::span<const double> t, std::span<const double> y);

    double operator()(double t) const;
    double derivative_at_knot(std::size_t i) const { return d_[i]; }
    std::size_t knot_count() const { return t_.size(); }

    /// Power-basis coefficients of interval i in s = t - t_i:
    /// y = c0 + c1 s + c2 s^2 + c3 s^3.
    struct Cubic {
        double c0, c1, c2, c3;
    };
    Cubic interval(std::size_t i) const;

private:
    std::size_t locate(double t) const;

    std::vector<double> t_;
    std::vector<double> y_;
    std::vector<double> d_;
};

}  // namespace kmpc
