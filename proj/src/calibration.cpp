#include "pairs/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace pairs {

void PriceSeries::validate() const {
    if (dates.size() != prices.size())
        throw CalibrationError("price series: dates and prices differ in length");
    if (dates.size() < 2) throw CalibrationError("price series: need at least 2 observations");
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0))
            throw CalibrationError("price series: nonpositive price at " + dates[i]);
        if (i > 0 && !(dates[i - 1] < dates[i]))
            throw CalibrationError("price series: dates not strictly increasing at " + dates[i]);
    }
}

SpreadSeries build_spread(const PriceSeries& p1, const PriceSeries& p2, std::size_t ma_window,
                          double dt) {
    p1.validate();
    p2.validate();
    if (ma_window < 1) throw CalibrationError("build_spread: ma_window must be >= 1");
    if (!(dt > 0.0)) throw CalibrationError("build_spread: dt must be > 0");

    // Inner join on dates.
    std::unordered_map<std::string, double> lookup;
    lookup.reserve(p2.dates.size());
    for (std::size_t i = 0; i < p2.dates.size(); ++i) lookup.emplace(p2.dates[i], p2.prices[i]);

    std::vector<std::string> dates;
    std::vector<double> a, b;
    for (std::size_t i = 0; i < p1.dates.size(); ++i) {
        auto it = lookup.find(p1.dates[i]);
        if (it == lookup.end()) continue;
        dates.push_back(p1.dates[i]);
        a.push_back(p1.prices[i]);
        b.push_back(it->second);
    }
    if (dates.empty()) throw CalibrationError("build_spread: no overlapping dates");
    if (dates.size() < ma_window)
        throw CalibrationError("build_spread: fewer joined observations (" +
                               std::to_string(dates.size()) + ") than ma_window");

    SpreadSeries out;
    out.dt = dt;
    out.k0 = 1.0;
    double sum_a = 0.0, sum_b = 0.0;
    for (std::size_t i = 0; i < dates.size(); ++i) {
        sum_a += a[i];
        sum_b += b[i];
        if (i + 1 < ma_window) continue;
        if (i >= ma_window) {
            sum_a -= a[i - ma_window];
            sum_b -= b[i - ma_window];
        }
        const double w = static_cast<double>(ma_window);
        out.dates.push_back(dates[i]);
        out.z.push_back(a[i] / (sum_a / w) - b[i] / (sum_b / w));
    }
    return out;
}

OuFit fit_ou(const SpreadSeries& s, std::size_t min_length) {
    if (s.z.size() < std::max<std::size_t>(min_length, 3))
        throw CalibrationError("fit_ou: series too short");
    if (!(s.dt > 0.0)) throw CalibrationError("fit_ou: dt must be > 0");

    const std::size_t n = s.z.size() - 1; // regression pairs
    double sx = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sx += s.z[k];
        sy += s.z[k + 1];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (s.z[k] - mx) * (s.z[k] - mx);
        sxy += (s.z[k] - mx) * (s.z[k + 1] - my);
    }
    if (!(sxx > 0.0)) throw CalibrationError("fit_ou: degenerate series (zero variance)");

    const double c1 = sxy / sxx;
    const double c0 = my - c1 * mx;
    if (!(c1 > 0.0 && c1 < 1.0))
        throw CalibrationError("fit_ou: non-stationary fit, c1 = " + std::to_string(c1) +
                               " outside (0, 1)");

    double rss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double e = s.z[k + 1] - c0 - c1 * s.z[k];
        rss += e * e;
    }
    const double s2 = rss / (n - 2);
    const double se_c1 = std::sqrt(s2 / sxx);
    const double se_c0 = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));

    OuFit fit;
    fit.n = n;
    fit.c0 = c0;
    fit.c1 = c1;
    fit.a = -std::log(c1) / s.dt;
    fit.b = c0 / (1.0 - c1);
    fit.sigma = std::sqrt(s2 * 2.0 * fit.a / (1.0 - c1 * c1));

    // Delta method on the AR(1) estimates.
    fit.a_stderr = se_c1 / (c1 * s.dt);
    const double db_dc0 = 1.0 / (1.0 - c1);
    const double db_dc1 = c0 / ((1.0 - c1) * (1.0 - c1));
    // c0 and c1 estimates are correlated: cov = -mx * var(c1).
    const double cov01 = -mx * se_c1 * se_c1;
    fit.b_stderr = std::sqrt(std::max(
        0.0, db_dc0 * db_dc0 * se_c0 * se_c0 + db_dc1 * db_dc1 * se_c1 * se_c1 +
                 2.0 * db_dc0 * db_dc1 * cov01));
    // Dominant terms: chi-square spread of the residual variance plus the
    // c1 dependence of the variance map.
    const double dsig_dc1 = fit.sigma * (-1.0 / (2.0 * fit.a * c1 * s.dt) + c1 / (1.0 - c1 * c1));
    fit.sigma_stderr =
        std::sqrt(fit.sigma * fit.sigma / (2.0 * n) + dsig_dc1 * dsig_dc1 * se_c1 * se_c1);
    return fit;
}

PriceSeries load_price_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CalibrationError("cannot open price file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw CalibrationError("empty price file: " + path);

    auto split = [](const std::string& str) {
        std::vector<std::string> out;
        std::stringstream ss(str);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
            out.push_back(cell);
        }
        return out;
    };

    const auto header = split(line);
    std::ptrdiff_t date_col = -1, close_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "date") date_col = static_cast<std::ptrdiff_t>(i);
        if (header[i] == "close") close_col = static_cast<std::ptrdiff_t>(i);
    }
    if (date_col < 0 || close_col < 0)
        throw CalibrationError("price file must have `date` and `close` columns: " + path);

    PriceSeries out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (static_cast<std::ptrdiff_t>(cells.size()) <= std::max(date_col, close_col))
            throw CalibrationError(path + ":" + std::to_string(lineno) + ": short row");
        try {
            out.prices.push_back(std::stod(cells[close_col]));
        } catch (const std::exception&) {
            throw CalibrationError(path + ":" + std::to_string(lineno) + ": bad close value");
        }
        out.dates.push_back(cells[date_col]);
    }
    out.validate();
    return out;
}

void save_price_csv(const std::string& path, const PriceSeries& series) {
    std::ofstream out(path);
    if (!out) throw CalibrationError("cannot write price file: " + path);
    out << "date,close\n";
    out.precision(17);
    for (std::size_t i = 0; i < series.dates.size(); ++i)
        out << series.dates[i] << "," << series.prices[i] << "\n";
}

} // namespace pairs
