#pragma once

#include <string>
#include <vector>

#include "pairs/model.hpp"

namespace pairs {

struct PriceSeries {
    std::vector<std::string> dates; // ISO-8601, strictly increasing
    std::vector<double> prices;     // positive, same length

    void validate() const;
};

// Normalized spread z_t = p1_t/MA(p1) - p2_t/MA(p2) sampled on a uniform
// clock of dt years. K0 is 1 after normalization.
struct SpreadSeries {
    std::vector<std::string> dates;
    std::vector<double> z;
    double dt = 1.0 / 252.0;
    double k0 = 1.0;
};

struct OuFit {
    double a = 0.0, b = 0.0, sigma = 0.0;
    double a_stderr = 0.0, b_stderr = 0.0, sigma_stderr = 0.0;
    double c0 = 0.0, c1 = 0.0; // underlying AR(1) regression z' = c0 + c1 z
    std::size_t n = 0;
};

class CalibrationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Inner-joins the two series on dates, normalizes each by its simple moving
// average over ma_window observations, and differences. The first
// (ma_window - 1) joined points are dropped as warmup.
SpreadSeries build_spread(const PriceSeries& p1, const PriceSeries& p2, std::size_t ma_window,
                          double dt = 1.0 / 252.0);

// Least-squares AR(1) fit mapped to OU parameters through the exact
// discretization: a = -ln(c1)/dt, b = c0/(1-c1), sigma from the innovation
// variance. Requires 0 < c1 < 1.
OuFit fit_ou(const SpreadSeries& s, std::size_t min_length = 30);

// Headered delimited text with columns `date` and `close`.
PriceSeries load_price_csv(const std::string& path);
void save_price_csv(const std::string& path, const PriceSeries& series);

} // namespace pairs
