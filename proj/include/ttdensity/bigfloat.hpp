#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <mutex>

namespace ttdensity {

/// Arbitrary-precision decimal scalar with runtime precision.
using BigFloat =
    boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                  boost::multiprecision::et_off>;

namespace detail {
inline std::recursive_mutex& bigfloat_mutex() {
    static std::recursive_mutex m;
    return m;
}
}  // namespace detail

/// Scopes the working precision for BigFloat temporaries. The default
/// precision in this boost version is process-global, so the guard also
/// serializes big-arithmetic sections across threads; values created under
/// the guard keep their precision afterwards and may be read concurrently.
class PrecisionGuard {
public:
    explicit PrecisionGuard(unsigned digits10)
        : lock_(detail::bigfloat_mutex()),
          previous_(BigFloat::default_precision()) {
        BigFloat::default_precision(digits10);
    }
    ~PrecisionGuard() { BigFloat::default_precision(previous_); }

    PrecisionGuard(const PrecisionGuard&) = delete;
    PrecisionGuard& operator=(const PrecisionGuard&) = delete;

private:
    std::unique_lock<std::recursive_mutex> lock_;
    unsigned previous_;
};

}  // namespace ttdensity
