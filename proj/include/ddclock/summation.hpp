#pragma once

#include <cstddef>

namespace ddclock {

// Neumaier-compensated accumulator. The pair sums in the shift engine are
// small residues of strongly cancelling terms, so plain summation can lose
// most significant digits; the compensation term recovers them at one extra
// add per term. Accumulation order is whatever the caller uses -- callers
// that need determinism must feed terms in a canonical order.
class CompensatedSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (absval(sum_) >= absval(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

    CompensatedSum& operator+=(double x) {
        add(x);
        return *this;
    }

  private:
    static double absval(double v) { return v < 0 ? -v : v; }

    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace ddclock
