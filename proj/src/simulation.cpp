#include "pairs/simulation.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace pairs {

std::string to_string(TradeEvent e) {
    switch (e) {
        case TradeEvent::Buy: return "buy";
        case TradeEvent::Sell: return "sell";
        case TradeEvent::StopLossExit: return "stop-loss-exit";
    }
    return "?";
}

double step_exact(double z, double dt, const ModelParams& params, double noise) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_exact: dt must be > 0");
    const double decay = std::exp(-params.a * dt);
    const double sd = params.sigma * std::sqrt((1.0 - decay * decay) / (2.0 * params.a));
    return params.b + (z - params.b) * decay + sd * noise;
}

double default_horizon(const ModelParams& params) { return -std::log(1e-6) / params.rho; }

namespace {

// splitmix64; (seed, path index) -> engine seed, so paths are independent
// streams regardless of evaluation order.
std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t path_seed(std::uint64_t seed, std::uint64_t index) {
    return mix(mix(seed) ^ mix(index + 0x1234567ull));
}

} // namespace

PolicyRun run_policy(const ThresholdPolicy& policy, double x, int i, double dt, double horizon,
                     std::uint64_t seed) {
    const ModelParams& mp = policy.params;
    if (x < mp.M) throw std::domain_error("run_policy: start below the stop-loss level");
    if (i != 0 && i != 1) throw std::invalid_argument("run_policy: position must be 0 or 1");
    if (!(dt > 0.0) || !(horizon > 0.0))
        throw std::invalid_argument("run_policy: dt and horizon must be > 0");

    PolicyRun run;
    run.initial_x = x;
    run.initial_position = i;

    std::mt19937_64 rng(path_seed(seed, 0));
    std::normal_distribution<double> normal(0.0, 1.0);

    const double decay = std::exp(-mp.a * dt);
    const double shock_sd = mp.sigma * std::sqrt((1.0 - decay * decay) / (2.0 * mp.a));
    const double disc_step = std::exp(-mp.rho * dt);

    double z = x;
    double t = 0.0;
    double disc = 1.0;
    int pos = i;

    const std::size_t n_steps = static_cast<std::size_t>(horizon / dt);
    for (std::size_t step = 0; step <= n_steps; ++step) {
        if (z <= mp.M) {
            if (pos == 1) { // forced liquidation at the stop-loss
                run.reward += disc * (z - mp.K);
                pos = 0;
            }
            run.events.push_back({t, TradeEvent::StopLossExit, z});
            return run;
        }
        if (pos == 1 && z >= policy.x2) {
            run.reward += disc * (z - mp.K);
            run.events.push_back({t, TradeEvent::Sell, z});
            pos = 0;
        }
        if (pos == 0 && z >= policy.x0 && z <= policy.x1) {
            run.reward -= disc * (z + mp.K);
            run.events.push_back({t, TradeEvent::Buy, z});
            pos = 1;
        }
        z = mp.b + (z - mp.b) * decay + shock_sd * normal(rng);
        t += dt;
        disc *= disc_step;
    }
    return run; // horizon reached; residual value below the discount cutoff
}

namespace {

// Slim path loop for Monte Carlo; rewards only, no event log.
double path_reward(const ThresholdPolicy& policy, double x, int i, double dt,
                   std::size_t n_steps, std::uint64_t engine_seed) {
    const ModelParams& mp = policy.params;
    std::mt19937_64 rng(engine_seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const double decay = std::exp(-mp.a * dt);
    const double shock_sd = mp.sigma * std::sqrt((1.0 - decay * decay) / (2.0 * mp.a));
    const double disc_step = std::exp(-mp.rho * dt);

    double z = x, disc = 1.0, reward = 0.0;
    int pos = i;
    for (std::size_t step = 0; step <= n_steps; ++step) {
        if (z <= mp.M) {
            if (pos == 1) reward += disc * (z - mp.K);
            return reward;
        }
        if (pos == 1 && z >= policy.x2) {
            reward += disc * (z - mp.K);
            pos = 0;
        }
        if (pos == 0 && z >= policy.x0 && z <= policy.x1) {
            reward -= disc * (z + mp.K);
            pos = 1;
        }
        z = mp.b + (z - mp.b) * decay + shock_sd * normal(rng);
        disc *= disc_step;
    }
    return reward;
}

} // namespace

std::vector<double> mc_rewards(const ThresholdPolicy& policy, double x, int i, std::size_t n_paths,
                               double dt, double horizon, std::uint64_t seed, unsigned threads) {
    if (n_paths < 1) throw std::invalid_argument("mc_rewards: need at least one path");
    const std::size_t n_steps = static_cast<std::size_t>(horizon / dt);
    std::vector<double> rewards(n_paths);

    unsigned n_threads = threads ? threads : std::thread::hardware_concurrency();
    if (n_threads == 0) n_threads = 1;
    n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_paths));

    auto worker = [&](unsigned tid) {
        for (std::size_t p = tid; p < n_paths; p += n_threads)
            rewards[p] = path_reward(policy, x, i, dt, n_steps, path_seed(seed, p));
    };
    if (n_threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned tid = 0; tid < n_threads; ++tid) pool.emplace_back(worker, tid);
        for (auto& th : pool) th.join();
    }
    return rewards;
}

double pairwise_sum(const std::vector<double>& v) {
    // Bottom-up pairwise reduction in index order.
    std::vector<double> buf(v);
    std::size_t n = buf.size();
    while (n > 1) {
        const std::size_t half = n / 2;
        for (std::size_t j = 0; j < half; ++j) buf[j] = buf[2 * j] + buf[2 * j + 1];
        if (n % 2) {
            buf[half] = buf[n - 1];
            n = half + 1;
        } else {
            n = half;
        }
    }
    return buf.empty() ? 0.0 : buf[0];
}

McEstimate mc_value(const ThresholdPolicy& policy, double x, int i, std::size_t n_paths, double dt,
                    double horizon, std::uint64_t seed, unsigned threads) {
    if (n_paths < 100) throw std::invalid_argument("mc_value: need at least 100 paths");
    const std::vector<double> rewards = mc_rewards(policy, x, i, n_paths, dt, horizon, seed, threads);

    McEstimate est;
    est.n_paths = n_paths;
    est.mean = pairwise_sum(rewards) / static_cast<double>(n_paths);
    std::vector<double> sq(rewards.size());
    for (std::size_t p = 0; p < rewards.size(); ++p) {
        const double d = rewards[p] - est.mean;
        sq[p] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(n_paths - 1);
    est.stderr = std::sqrt(var / static_cast<double>(n_paths));
    return est;
}

} // namespace pairs
