#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pairs/backtest.hpp"
#include "pairs/calibration.hpp"
#include "pairs/simulation.hpp"
#include "pairs/threshold_solver.hpp"
#include "pairs/value_function.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

struct Options {
    pairs::ModelParams params;
    double tol = 1e-10;
    std::uint64_t seed = 0;
    std::string format = "table";
    std::string out;
};

void add_model_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--a", opt.params.a, "reversion rate")->capture_default_str();
    cmd->add_option("--b", opt.params.b, "equilibrium level")->capture_default_str();
    cmd->add_option("--sigma", opt.params.sigma, "volatility")->capture_default_str();
    cmd->add_option("--rho", opt.params.rho, "discount rate")->capture_default_str();
    cmd->add_option("--K", opt.params.K, "transaction cost")->capture_default_str();
    cmd->add_option("--M", opt.params.M, "stop-loss level")->capture_default_str();
    cmd->add_option("--tol", opt.tol, "relative quadrature tolerance")->capture_default_str();
    cmd->add_option("--seed", opt.seed, "RNG seed")->capture_default_str();
    cmd->add_option("--format", opt.format, "output format: json|csv|table")
        ->check(CLI::IsMember({"json", "csv", "table"}))
        ->capture_default_str();
    cmd->add_option("--out", opt.out, "output path (or prefix for multi-file output)");
}

pairs::QuadConfig quad_config(const Options& opt) {
    pairs::QuadConfig cfg;
    cfg.rel_tol = opt.tol;
    cfg.abs_tol = opt.tol * 1e-2;
    return cfg;
}

json params_json(const pairs::ModelParams& p) {
    return json{{"a", p.a}, {"b", p.b}, {"sigma", p.sigma},
                {"rho", p.rho}, {"K", p.K}, {"M", p.M}};
}

json policy_json(const pairs::ThresholdPolicy& pol) {
    const auto& r = pol.verification;
    return json{
        {"params", params_json(pol.params)},
        {"x0", pol.x0},
        {"x1", pol.x1},
        {"x2", pol.x2},
        {"A2", pol.A2},
        {"B1", pol.B1},
        {"B2", pol.B2},
        {"C1", pol.C1},
        {"C2", pol.C2},
        {"x1_upper_bound", pol.params.buy_upper_bound()},
        {"x2_lower_bound", pol.params.sell_lower_bound()},
        {"verified", pol.verified()},
        {"verification",
         {{"ordering_ok", r.ordering_ok},
          {"x1_bound_ok", r.x1_bound_ok},
          {"x2_bound_ok", r.x2_bound_ok},
          {"obstacle_ok_Mx0", r.obstacle_ok_Mx0},
          {"obstacle_ok_x1x2", r.obstacle_ok_x1x2},
          {"obstacle_margin_Mx0", r.obstacle_margin_Mx0},
          {"obstacle_margin_x1x2", r.obstacle_margin_x1x2},
          {"v0_nonneg_ok", r.v0_nonneg_ok},
          {"v0_min", r.v0_min},
          {"smoothfit_value_residual", r.smoothfit_value_residual},
          {"smoothfit_deriv_residual", r.smoothfit_deriv_residual},
          {"eq_x0_residual", r.eq_x0_residual},
          {"eq_x1x2_residual", r.eq_x1x2_residual},
          {"grid_n", r.grid_n}}}};
}

void emit(const Options& opt, const json& doc, const std::string& table_text,
          const std::string& csv_text) {
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!opt.out.empty()) {
        file.open(opt.out);
        if (!file) throw pairs::CalibrationError("cannot open output file: " + opt.out);
        os = &file;
    }
    if (opt.format == "json")
        *os << doc.dump(2) << "\n";
    else if (opt.format == "csv")
        *os << csv_text;
    else
        *os << table_text;
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

int cmd_thresholds(const Options& opt) {
    const pairs::ThresholdPolicy pol = pairs::solve_policy(opt.params, 2001, quad_config(opt));
    json doc = policy_json(pol);
    doc["config"] = {{"tol", opt.tol}};

    std::ostringstream tbl;
    tbl << "x0        " << fmt6(pol.x0) << "\n"
        << "x1        " << fmt6(pol.x1) << "\n"
        << "x2        " << fmt6(pol.x2) << "\n"
        << "A2        " << fmt6(pol.A2) << "\n"
        << "B1        " << fmt6(pol.B1) << "\n"
        << "B2        " << fmt6(pol.B2) << "\n"
        << "C1        " << fmt6(pol.C1) << "\n"
        << "C2        " << fmt6(pol.C2) << "\n"
        << "x1_bound  " << fmt6(pol.params.buy_upper_bound()) << "\n"
        << "x2_bound  " << fmt6(pol.params.sell_lower_bound()) << "\n"
        << "verified  " << (pol.verified() ? "yes" : "no") << "\n";

    std::ostringstream csv;
    csv << "x0,x1,x2,A2,B1,B2,C1,C2,verified\n"
        << fmt6(pol.x0) << "," << fmt6(pol.x1) << "," << fmt6(pol.x2) << "," << fmt6(pol.A2) << ","
        << fmt6(pol.B1) << "," << fmt6(pol.B2) << "," << fmt6(pol.C1) << "," << fmt6(pol.C2) << ","
        << (pol.verified() ? 1 : 0) << "\n";

    emit(opt, doc, tbl.str(), csv.str());
    return pol.verified() ? kExitOk : kExitSolver;
}

int cmd_sweep(const Options& opt, const std::string& vary, const std::vector<double>& values) {
    if (values.empty()) throw CLI::ValidationError("--values", "empty values list");
    const auto rows = pairs::sensitivity_sweep(opt.params, vary, values, quad_config(opt));

    json jrows = json::array();
    std::ostringstream csv, tbl;
    csv << vary << ",x0,x1,x2,verified\n";
    tbl << vary << "\tx0\tx1\tx2\tverified\n";
    for (const auto& r : rows) {
        json jr{{"value", r.value}, {"ok", r.ok}};
        if (r.ok) {
            jr["x0"] = r.x0;
            jr["x1"] = r.x1;
            jr["x2"] = r.x2;
            jr["verified"] = r.verified;
            csv << fmt6(r.value) << "," << fmt6(r.x0) << "," << fmt6(r.x1) << "," << fmt6(r.x2)
                << "," << (r.verified ? 1 : 0) << "\n";
            tbl << fmt6(r.value) << "\t" << fmt6(r.x0) << "\t" << fmt6(r.x1) << "\t" << fmt6(r.x2)
                << "\t" << (r.verified ? "yes" : "no") << "\n";
        } else {
            jr["error"] = r.error;
            csv << fmt6(r.value) << ",,,,failed\n";
            tbl << fmt6(r.value) << "\tfailed: " << r.error << "\n";
        }
        jrows.push_back(jr);
    }
    json doc{{"vary", vary}, {"params", params_json(opt.params)}, {"rows", jrows},
             {"config", {{"tol", opt.tol}}}};
    emit(opt, doc, tbl.str(), csv.str());
    return kExitOk;
}

int cmd_calibrate(const Options& opt, const std::string& p1_path, const std::string& p2_path,
                  std::size_t window, double dt) {
    const pairs::PriceSeries p1 = pairs::load_price_csv(p1_path);
    const pairs::PriceSeries p2 = pairs::load_price_csv(p2_path);
    const pairs::SpreadSeries spread = pairs::build_spread(p1, p2, window, dt);
    const pairs::OuFit fit = pairs::fit_ou(spread);

    json doc{{"a", fit.a},         {"b", fit.b},           {"sigma", fit.sigma},
             {"a_stderr", fit.a_stderr}, {"b_stderr", fit.b_stderr}, {"sigma_stderr", fit.sigma_stderr},
             {"c0", fit.c0},       {"c1", fit.c1},         {"n", fit.n},
             {"config", {{"p1", p1_path}, {"p2", p2_path}, {"window", window}, {"dt", dt}}}};

    std::ostringstream tbl, csv;
    tbl << "a      " << fmt6(fit.a) << " (se " << fmt6(fit.a_stderr) << ")\n"
        << "b      " << fmt6(fit.b) << " (se " << fmt6(fit.b_stderr) << ")\n"
        << "sigma  " << fmt6(fit.sigma) << " (se " << fmt6(fit.sigma_stderr) << ")\n"
        << "n      " << fit.n << "\n";
    csv << "a,b,sigma,a_stderr,b_stderr,sigma_stderr,n\n"
        << fmt6(fit.a) << "," << fmt6(fit.b) << "," << fmt6(fit.sigma) << ","
        << fmt6(fit.a_stderr) << "," << fmt6(fit.b_stderr) << "," << fmt6(fit.sigma_stderr) << ","
        << fit.n << "\n";
    emit(opt, doc, tbl.str(), csv.str());
    return kExitOk;
}

int cmd_simulate(const Options& opt, double x, int i, std::size_t paths, double dt,
                 double horizon) {
    const pairs::ThresholdPolicy pol = pairs::solve_policy(opt.params, 201, quad_config(opt));
    if (horizon <= 0.0) horizon = pairs::default_horizon(opt.params);
    const pairs::McEstimate est = pairs::mc_value(pol, x, i, paths, dt, horizon, opt.seed);

    const pairs::PiecewiseValue pv(pol, quad_config(opt));
    const double analytic = pv.value(i, x);

    json doc{{"mean", est.mean},
             {"stderr", est.stderr},
             {"analytic_value", analytic},
             {"policy", policy_json(pol)},
             {"config",
              {{"x", x}, {"i", i}, {"paths", paths}, {"dt", dt}, {"horizon", horizon},
               {"seed", opt.seed}, {"tol", opt.tol}}}};

    std::ostringstream tbl, csv;
    tbl << "mc_mean    " << fmt6(est.mean) << "\n"
        << "mc_stderr  " << fmt6(est.stderr) << "\n"
        << "analytic   " << fmt6(analytic) << "\n";
    csv << "mc_mean,mc_stderr,analytic\n"
        << fmt6(est.mean) << "," << fmt6(est.stderr) << "," << fmt6(analytic) << "\n";
    emit(opt, doc, tbl.str(), csv.str());
    return kExitOk;
}

int cmd_backtest(const Options& opt, const std::string& p1_path, const std::string& p2_path,
                 std::size_t window, double dt, double capital, double commission, bool reverse,
                 bool no_reentry) {
    const pairs::PriceSeries p1 = pairs::load_price_csv(p1_path);
    const pairs::PriceSeries p2 = pairs::load_price_csv(p2_path);
    pairs::SpreadSeries spread = pairs::build_spread(p1, p2, window, dt);
    if (reverse) spread = pairs::reverse_spread(spread);

    pairs::BacktestConfig cfg;
    cfg.policy = pairs::solve_policy(opt.params, 201, quad_config(opt));
    cfg.initial_capital = capital;
    cfg.commission = commission;
    cfg.reentry_after_stop = !no_reentry;
    const pairs::BacktestReport rep = pairs::run_backtest(cfg, spread, p1, p2);

    if (!opt.out.empty()) {
        std::ofstream tf(opt.out + "_trades.csv");
        std::ofstream ef(opt.out + "_equity.csv");
        if (!tf || !ef)
            throw pairs::CalibrationError("cannot write backtest output with prefix " + opt.out);
        tf << "entry_date,exit_date,entry_z,exit_z,reason,profit\n";
        tf.precision(17);
        for (const auto& t : rep.trades)
            tf << t.entry_date << "," << t.exit_date << "," << t.entry_z << "," << t.exit_z << ","
               << pairs::to_string(t.reason) << "," << t.profit << "\n";
        ef << "date,equity\n";
        ef.precision(17);
        for (const auto& e : rep.equity) ef << e.date << "," << e.value << "\n";
    }

    json jtrades = json::array();
    for (const auto& t : rep.trades)
        jtrades.push_back({{"entry_date", t.entry_date},
                           {"exit_date", t.exit_date},
                           {"entry_z", t.entry_z},
                           {"exit_z", t.exit_z},
                           {"reason", pairs::to_string(t.reason)},
                           {"profit", t.profit}});
    json doc{{"trade_count", rep.trades.size()},
             {"end_balance", rep.end_balance},
             {"max_drawdown", rep.max_drawdown},
             {"trades", jtrades},
             {"policy", policy_json(cfg.policy)},
             {"config",
              {{"p1", p1_path}, {"p2", p2_path}, {"window", window}, {"dt", dt},
               {"capital", capital}, {"commission", commission}, {"reverse", reverse},
               {"reentry", cfg.reentry_after_stop}, {"tol", opt.tol}}}};

    std::ostringstream tbl, csv;
    tbl << "trades       " << rep.trades.size() << "\n"
        << "end_balance  " << fmt6(rep.end_balance) << "\n"
        << "max_drawdown " << fmt6(rep.max_drawdown) << "\n";
    csv << "trade_count,end_balance,max_drawdown\n"
        << rep.trades.size() << "," << fmt6(rep.end_balance) << "," << fmt6(rep.max_drawdown)
        << "\n";

    Options console = opt;
    console.out.clear(); // files already written under the prefix
    emit(console, doc, tbl.str(), csv.str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pairs-trading threshold policy toolkit"};
    app.require_subcommand(1);
    app.set_config("--config")->envname("PAIRS_CONFIG");

    Options opt;

    auto* thresholds = app.add_subcommand("thresholds", "solve and verify the threshold triple");
    add_model_flags(thresholds, opt);

    auto* sweep = app.add_subcommand("sweep", "solve across a parameter range");
    add_model_flags(sweep, opt);
    std::string vary = "a";
    std::vector<double> values;
    sweep->add_option("--vary", vary, "parameter to vary: a|b|sigma|rho|K|M")
        ->check(CLI::IsMember({"a", "b", "sigma", "rho", "K", "M"}));
    sweep->add_option("--values", values, "comma-separated parameter values")->delimiter(',');

    auto* calibrate = app.add_subcommand("calibrate", "fit OU parameters from two price files");
    add_model_flags(calibrate, opt);
    std::string p1_path, p2_path;
    std::size_t window = 1000;
    double dt = 1.0 / 252.0;
    calibrate->add_option("--p1", p1_path, "price file for the long leg")->required();
    calibrate->add_option("--p2", p2_path, "price file for the short leg")->required();
    calibrate->add_option("--window", window, "moving-average window")->capture_default_str();
    calibrate->add_option("--dt", dt, "time step in years")->capture_default_str();

    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo value of the solved policy");
    add_model_flags(simulate, opt);
    double sim_x = 0.0, sim_dt = 1e-4, sim_horizon = 0.0;
    int sim_i = 0;
    std::size_t sim_paths = 10000;
    simulate->add_option("--x", sim_x, "initial spread level")->capture_default_str();
    simulate->add_option("--i", sim_i, "initial position (0 flat, 1 long)")
        ->check(CLI::Range(0, 1))
        ->capture_default_str();
    simulate->add_option("--paths", sim_paths, "number of paths")->capture_default_str();
    simulate->add_option("--dt", sim_dt, "simulation step")->capture_default_str();
    simulate->add_option("--horizon", sim_horizon, "time horizon (0 = discount cutoff default)")
        ->capture_default_str();

    auto* backtest = app.add_subcommand("backtest", "run the threshold rule on historical prices");
    add_model_flags(backtest, opt);
    std::string bt_p1, bt_p2;
    std::size_t bt_window = 1000;
    double bt_dt = 1.0 / 252.0, capital = 100000.0, commission = 5.0;
    bool reverse = false, no_reentry = false;
    backtest->add_option("--p1", bt_p1, "price file for the long leg")->required();
    backtest->add_option("--p2", bt_p2, "price file for the short leg")->required();
    backtest->add_option("--window", bt_window, "moving-average window")->capture_default_str();
    backtest->add_option("--dt", bt_dt, "time step in years")->capture_default_str();
    backtest->add_option("--capital", capital, "initial capital")->capture_default_str();
    backtest->add_option("--commission", commission, "commission per pairs transaction")
        ->capture_default_str();
    backtest->add_flag("--reverse", reverse, "trade the negated spread");
    backtest->add_flag("--no-reentry", no_reentry, "stop trading after a stop-loss exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        opt.params.validate();
        if (thresholds->parsed()) return cmd_thresholds(opt);
        if (sweep->parsed()) return cmd_sweep(opt, vary, values);
        if (calibrate->parsed()) return cmd_calibrate(opt, p1_path, p2_path, window, dt);
        if (simulate->parsed()) return cmd_simulate(opt, sim_x, sim_i, sim_paths, sim_dt, sim_horizon);
        if (backtest->parsed())
            return cmd_backtest(opt, bt_p1, bt_p2, bt_window, bt_dt, capital, commission, reverse,
                                no_reentry);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const pairs::CalibrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const pairs::BacktestError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const pairs::SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const pairs::QuadratureError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitValidation;
}
