#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairs/threshold_solver.hpp"

namespace pairs {

enum class TradeEvent { Buy, Sell, StopLossExit };

std::string to_string(TradeEvent e);

struct PolicyEvent {
    double time = 0.0;
    TradeEvent event = TradeEvent::Buy;
    double z = 0.0;
};

struct PolicyRun {
    double initial_x = 0.0;
    int initial_position = 0;
    double reward = 0.0; // realized discounted reward
    std::vector<PolicyEvent> events;
};

struct McEstimate {
    double mean = 0.0;
    double stderr = 0.0;
    std::size_t n_paths = 0;
};

// Exact OU transition: z' = b + (z - b)e^(-a dt) + sigma sqrt((1 - e^(-2a dt))/(2a)) * noise.
double step_exact(double z, double dt, const ModelParams& params, double noise);

// Discrete-time emulation of the threshold policy: while flat, buy at the
// first step with z in [x0, x1] (and z > M); while long, sell at the first
// step with z >= x2 or z <= M. Touching M ends the run.
PolicyRun run_policy(const ThresholdPolicy& policy, double x, int i, double dt, double horizon,
                     std::uint64_t seed);

// Sample mean / stderr of the discounted reward over independent paths.
// Path index + seed fully determine a path, so the result is independent of
// scheduling; the reduction is deterministic pairwise summation.
McEstimate mc_value(const ThresholdPolicy& policy, double x, int i, std::size_t n_paths, double dt,
                    double horizon, std::uint64_t seed, unsigned threads = 0);

// Per-path rewards (index order), for paired comparisons under common random
// numbers.
std::vector<double> mc_rewards(const ThresholdPolicy& policy, double x, int i, std::size_t n_paths,
                               double dt, double horizon, std::uint64_t seed, unsigned threads = 0);

// Deterministic pairwise sum, independent of threading.
double pairwise_sum(const std::vector<double>& v);

double default_horizon(const ModelParams& params); // discount weight 1e-6 cutoff

} // namespace pairs
