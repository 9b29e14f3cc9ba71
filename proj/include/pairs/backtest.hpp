#pragma once

#include <string>
#include <vector>

#include "pairs/calibration.hpp"
#include "pairs/threshold_solver.hpp"

namespace pairs {

struct BacktestConfig {
    ThresholdPolicy policy;
    double initial_capital = 100000.0;
    double commission = 5.0;        // per pairs transaction (entry or exit)
    double allocation = 0.5;        // fraction of equity per leg
    bool reentry_after_stop = true; // keep trading after a stop-loss exit
    bool reinvest = true;           // size entries off current equity, else initial capital
};

enum class ExitReason { Target, StopLoss, EndOfData };

std::string to_string(ExitReason r);

struct Trade {
    std::string entry_date, exit_date;
    double entry_z = 0.0, exit_z = 0.0;
    ExitReason reason = ExitReason::Target;
    double profit = 0.0; // net of both commissions
};

struct EquityPoint {
    std::string date;
    double value = 0.0;
};

struct BacktestReport {
    std::vector<Trade> trades;
    std::vector<EquityPoint> equity;
    double initial_capital = 0.0;
    double end_balance = 0.0;
    double max_drawdown = 0.0; // fraction of peak equity
};

class BacktestError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Daily-close state machine: flat -> long when z in [x0, x1], long -> flat
// when z >= x2 or z <= M. Long leg buys p1, short leg shorts the same dollar
// amount of p2; commission charged once at entry and once at exit.
BacktestReport run_backtest(const BacktestConfig& cfg, const SpreadSeries& spread,
                            const PriceSeries& p1, const PriceSeries& p2);

// Pointwise negation of the spread, for trading the reversed pair. Warns via
// return flag when b != 0 (the symmetry argument needs b = 0).
SpreadSeries reverse_spread(const SpreadSeries& spread);

} // namespace pairs
