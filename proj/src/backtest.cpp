#include "pairs/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace pairs {

std::string to_string(ExitReason r) {
    switch (r) {
        case ExitReason::Target: return "target";
        case ExitReason::StopLoss: return "stop-loss";
        case ExitReason::EndOfData: return "end-of-data";
    }
    return "?";
}

BacktestReport run_backtest(const BacktestConfig& cfg, const SpreadSeries& spread,
                            const PriceSeries& p1, const PriceSeries& p2) {
    if (!(cfg.initial_capital > 0.0)) throw BacktestError("run_backtest: capital must be > 0");
    if (!(cfg.commission >= 0.0)) throw BacktestError("run_backtest: commission must be >= 0");
    if (!(cfg.allocation > 0.0 && cfg.allocation <= 1.0))
        throw BacktestError("run_backtest: allocation must be in (0, 1]");

    std::unordered_map<std::string, double> px1, px2;
    for (std::size_t i = 0; i < p1.dates.size(); ++i) px1.emplace(p1.dates[i], p1.prices[i]);
    for (std::size_t i = 0; i < p2.dates.size(); ++i) px2.emplace(p2.dates[i], p2.prices[i]);

    const ThresholdPolicy& pol = cfg.policy;
    const double M = pol.params.M;

    BacktestReport rep;
    rep.initial_capital = cfg.initial_capital;

    double cash = cfg.initial_capital;
    bool in_position = false;
    bool halted = false; // stop-loss hit and reentry disabled
    double shares_long = 0.0, short_notional = 0.0, short_entry_px = 0.0;
    double entry_cost = 0.0; // cash committed to the long leg
    Trade open;

    double peak = cfg.initial_capital;

    for (std::size_t i = 0; i < spread.dates.size(); ++i) {
        const std::string& date = spread.dates[i];
        const double z = spread.z[i];
        const auto it1 = px1.find(date);
        const auto it2 = px2.find(date);
        if (it1 == px1.end() || it2 == px2.end())
            throw BacktestError("run_backtest: no price for spread date " + date);
        const double price1 = it1->second, price2 = it2->second;

        const bool last_day = (i + 1 == spread.dates.size());

        if (in_position) {
            const bool target = z >= pol.x2;
            const bool stop = z <= M;
            if (target || stop || last_day) {
                const double long_value = shares_long * price1;
                const double short_pnl = short_notional * (short_entry_px - price2) / short_entry_px;
                cash += long_value + short_pnl - cfg.commission;
                open.exit_date = date;
                open.exit_z = z;
                open.reason = stop ? ExitReason::StopLoss
                                   : (target ? ExitReason::Target : ExitReason::EndOfData);
                open.profit = (long_value - entry_cost) + short_pnl - 2.0 * cfg.commission;
                rep.trades.push_back(open);
                in_position = false;
                if (stop && !cfg.reentry_after_stop) halted = true;
                if (cash <= 0.0) throw BacktestError("run_backtest: account wiped out on " + date);
            }
        } else if (!halted && !last_day && z >= pol.x0 && z <= pol.x1 && z > M) {
            const double base = cfg.reinvest ? cash : cfg.initial_capital;
            const double leg = cfg.allocation * base;
            shares_long = leg / price1;
            entry_cost = leg;
            short_notional = leg;
            short_entry_px = price2;
            cash -= leg + cfg.commission;
            in_position = true;
            open = Trade{};
            open.entry_date = date;
            open.entry_z = z;
        }

        double equity = cash;
        if (in_position)
            equity += shares_long * price1 + short_notional * (short_entry_px - price2) / short_entry_px;
        rep.equity.push_back({date, equity});
        peak = std::max(peak, equity);
        if (peak > 0.0) rep.max_drawdown = std::max(rep.max_drawdown, (peak - equity) / peak);
    }

    rep.end_balance = rep.equity.empty() ? cfg.initial_capital : rep.equity.back().value;
    return rep;
}

SpreadSeries reverse_spread(const SpreadSeries& spread) {
    SpreadSeries out = spread;
    for (double& v : out.z) v = -v;
    return out;
}

} // namespace pairs
