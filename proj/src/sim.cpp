#include "mmjsq/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <limits>
#include <random>
#include <string>
#include <thread>

#include "mmjsq/error.hpp"

namespace mmjsq {

namespace {

// Bit-level conversions so results do not depend on the standard library's
// distribution implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double exponential(std::mt19937_64& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

inline void add_time(std::vector<double>& hist, std::int64_t x, double dt) {
  const auto idx = static_cast<std::size_t>(x);
  if (idx >= hist.size()) hist.resize(std::max(idx + 1, hist.size() * 2), 0.0);
  hist[idx] += dt;
}

}  // namespace

void validate(const SimConfig& config) {
  if (config.num_arrivals < 10'000)
    throw Error(ErrorCode::InvalidConfig, "num_arrivals must be at least 1e4");
  if (!(config.burn_in_fraction >= 0.0 && config.burn_in_fraction < 0.5))
    throw Error(ErrorCode::InvalidConfig, "burn_in_fraction must lie in [0, 0.5)");
  if (config.pmf_cap < 1) throw Error(ErrorCode::InvalidConfig, "pmf_cap must be at least 1");
  for (double s : config.laplace_s_values) {
    if (!(s > 0.0) || !std::isfinite(s))
      throw Error(ErrorCode::InvalidConfig, "Laplace evaluation points must be positive");
  }
}

std::vector<double> norm_tail_thresholds(std::size_t pmf_cap) {
  std::vector<double> out;
  for (std::size_t t = 1; t <= pmf_cap; t *= 2) out.push_back(static_cast<double>(t));
  return out;
}

RunStats simulate(const MmJsqModel& model, const SimConfig& config) {
  validate(config);
  const DerivedRates rates = derived_rates(model);
  if (!(rates.rho < 1.0))
    throw Error(ErrorCode::UnstableModel, "mean load " + std::to_string(rates.rho) + " is not below 1");
  if (!(rates.rho > 0.0)) throw Error(ErrorCode::InvalidModel, "mean load must be positive");

  const std::size_t m = model.num_states();
  const std::size_t n = model.num_servers();
  const Eigen::MatrixXd& mu = model.mu();
  const Eigen::VectorXd& lambda = model.lambda();
  const ModulatingChain& chain = model.chain();
  const auto& jump_cdf = chain.jump_cdf();

  std::vector<double> exit(m);
  for (std::size_t i = 0; i < m; ++i) exit[i] = chain.exit_rate(i);

  const std::vector<double> thresholds = norm_tail_thresholds(config.pmf_cap);
  std::vector<double> tail_cut(thresholds.size());
  for (std::size_t k = 0; k < thresholds.size(); ++k)
    tail_cut[k] = static_cast<double>(n) * thresholds[k] * thresholds[k];

  std::mt19937_64 rng(config.seed);
  SystemState st;
  st.q.assign(n, 0);

  std::vector<std::vector<double>> hist_q(n, std::vector<double>(64, 0.0));
  std::vector<double> hist_sum(64, 0.0);
  std::vector<double> gap_acc(n, 0.0);
  std::vector<double> tail_acc(thresholds.size(), 0.0);
  std::vector<double> occupancy(m, 0.0);
  double empty_acc = 0.0;

  const auto burn_in =
      static_cast<std::uint64_t>(std::floor(config.burn_in_fraction * static_cast<double>(config.num_arrivals)));
  bool measuring = burn_in == 0;
  double measure_start = 0.0;

  std::uint64_t arrivals = 0;
  std::uint64_t departures = 0;
  std::uint64_t jumps = 0;
  std::int64_t q_sigma = 0;
  std::vector<std::size_t> argmin;
  argmin.reserve(n);
  const double inv_n = 1.0 / static_cast<double>(n);

  while (arrivals < config.num_arrivals) {
    const std::size_t i = st.mod_state;
    double busy = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (st.q[j] > 0) busy += mu(i, j);
    const double total = lambda(i) + busy + exit[i];
    const double dt = exponential(rng, total);

    if (measuring) {
      const double avg = static_cast<double>(q_sigma) * inv_n;
      std::int64_t sq = 0;
      for (std::size_t j = 0; j < n; ++j) {
        add_time(hist_q[j], st.q[j], dt);
        gap_acc[j] += std::abs(static_cast<double>(st.q[j]) - avg) * dt;
        sq += st.q[j] * st.q[j];
      }
      add_time(hist_sum, q_sigma, dt);
      // n ||q_perp||^2 = n sum q_j^2 - q_Sigma^2, an exact integer
      const double w = static_cast<double>(static_cast<std::int64_t>(n) * sq - q_sigma * q_sigma);
      for (std::size_t k = 0; k < tail_cut.size() && w > tail_cut[k]; ++k) tail_acc[k] += dt;
      empty_acc += (rates.mu_state_sigma(static_cast<Eigen::Index>(i)) - busy) * dt;
      occupancy[i] += dt;
    }
    st.clock += dt;

    const double u = uniform01(rng) * total;
    if (u < lambda(i)) {
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      argmin.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (st.q[j] < best) {
          best = st.q[j];
          argmin.clear();
        }
        if (st.q[j] == best) argmin.push_back(j);
      }
      std::size_t target = argmin.front();
      if (argmin.size() > 1) {
        auto pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(argmin.size()));
        target = argmin[std::min(pick, argmin.size() - 1)];
      }
      if (++st.q[target] > kQueueGuard)
        throw Error(ErrorCode::OverflowGuard, "queue " + std::to_string(target) + " exceeded 2^31");
      ++q_sigma;
      ++arrivals;
      if (!measuring && arrivals == burn_in) {
        measuring = true;
        measure_start = st.clock;
      }
    } else if (u < lambda(i) + busy) {
      double acc = lambda(i);
      std::size_t target = n;
      std::size_t last_busy = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (st.q[j] == 0) continue;
        last_busy = j;
        acc += mu(i, j);
        if (u < acc) {
          target = j;
          break;
        }
      }
      if (target == n) target = last_busy;
      --st.q[target];
      --q_sigma;
      ++departures;
    } else {
      const double v = uniform01(rng);
      const auto& cdf = jump_cdf[i];
      std::size_t next = 0;
      while (next + 1 < m && (v >= cdf[next] || next == i)) ++next;
      st.mod_state = next;
      ++jumps;
    }
  }

  if (departures > arrivals)
    throw Error(ErrorCode::InvalidModel, "internal error: more departures than arrivals");

  const double T = st.clock - measure_start;
  RunStats out;
  out.seed = config.seed;
  out.arrivals = arrivals;
  out.departures = departures;
  out.modulation_jumps = jumps;
  out.total_sim_time = st.clock;
  out.measured_time = T;
  out.epsilon_used = rates.epsilon;
  const double eps = rates.epsilon;

  out.mean_q.assign(n, 0.0);
  out.pmf.assign(n, std::vector<double>(config.pmf_cap + 2, 0.0));
  out.ssc_gap.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double mean = 0.0;
    for (std::size_t x = 0; x < hist_q[j].size(); ++x) {
      const double p = hist_q[j][x] / T;
      mean += static_cast<double>(x) * p;
      out.pmf[j][std::min(x, config.pmf_cap + 1)] += p;
    }
    out.mean_q[j] = mean;
    out.ssc_gap[j] = gap_acc[j] / T;
  }
  double mean_sum = 0.0;
  for (std::size_t x = 0; x < hist_sum.size(); ++x) mean_sum += static_cast<double>(x) * hist_sum[x] / T;
  out.mean_q_sigma_over_n = mean_sum * inv_n;

  for (std::size_t k = 0; k < thresholds.size(); ++k) out.ssc_norm_tail[thresholds[k]] = tail_acc[k] / T;

  for (double s : config.laplace_s_values) {
    LaplaceValues lv;
    lv.per_server.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t x = 0; x < hist_q[j].size(); ++x)
        if (hist_q[j][x] > 0.0) acc += std::exp(-s * eps * static_cast<double>(x)) * hist_q[j][x];
      lv.per_server[j] = acc / T;
    }
    double acc = 0.0;
    for (std::size_t x = 0; x < hist_sum.size(); ++x)
      if (hist_sum[x] > 0.0) acc += std::exp(-s * eps * static_cast<double>(x) * inv_n) * hist_sum[x];
    lv.average = acc / T;
    out.laplace_emp[s] = std::move(lv);
  }

  out.empty_drift = empty_acc / T;
  out.state_occupancy.resize(m);
  for (std::size_t i = 0; i < m; ++i) out.state_occupancy[i] = occupancy[i] / T;
  return out;
}

bool Estimate::contains(double value) const {
  return std::abs(value - mean) <= half_width;
}

Estimate estimate(const std::vector<double>& samples) {
  Estimate e;
  const auto r = static_cast<double>(samples.size());
  if (samples.empty()) return e;
  double sum = 0.0;
  for (double x : samples) sum += x;
  e.mean = sum / r;
  if (samples.size() < 2) {
    e.std_error = std::numeric_limits<double>::quiet_NaN();
    e.half_width = std::numeric_limits<double>::quiet_NaN();
    return e;
  }
  double ss = 0.0;
  for (double x : samples) ss += (x - e.mean) * (x - e.mean);
  e.std_error = std::sqrt(ss / (r - 1.0) / r);
  e.half_width = 1.96 * e.std_error;
  return e;
}

namespace {

template <typename Get>
Estimate fold(const std::vector<RunStats>& runs, Get get) {
  std::vector<double> xs;
  xs.reserve(runs.size());
  for (const auto& r : runs) xs.push_back(get(r));
  return estimate(xs);
}

}  // namespace

AggregateStats aggregate(const std::vector<RunStats>& runs) {
  AggregateStats a;
  a.num_runs = runs.size();
  if (runs.empty()) return a;
  const RunStats& first = runs.front();
  const std::size_t n = first.mean_q.size();
  a.epsilon_used = first.epsilon_used;
  for (std::size_t j = 0; j < n; ++j) {
    a.mean_q.push_back(fold(runs, [j](const RunStats& r) { return r.mean_q[j]; }));
    a.ssc_gap.push_back(fold(runs, [j](const RunStats& r) { return r.ssc_gap[j]; }));
    std::vector<Estimate> row;
    for (std::size_t x = 0; x < first.pmf[j].size(); ++x)
      row.push_back(fold(runs, [j, x](const RunStats& r) { return r.pmf[j][x]; }));
    a.pmf.push_back(std::move(row));
  }
  a.mean_q_sigma_over_n = fold(runs, [](const RunStats& r) { return r.mean_q_sigma_over_n; });
  a.empty_drift = fold(runs, [](const RunStats& r) { return r.empty_drift; });
  for (const auto& [t, unused] : first.ssc_norm_tail)
    a.ssc_norm_tail[t] = fold(runs, [t = t](const RunStats& r) { return r.ssc_norm_tail.at(t); });
  for (const auto& [s, unused] : first.laplace_emp) {
    std::vector<Estimate> per;
    for (std::size_t j = 0; j < n; ++j)
      per.push_back(fold(runs, [s = s, j](const RunStats& r) { return r.laplace_emp.at(s).per_server[j]; }));
    a.laplace_emp[s] = {std::move(per), fold(runs, [s = s](const RunStats& r) { return r.laplace_emp.at(s).average; })};
  }
  return a;
}

std::size_t default_parallelism() {
  if (const char* env = std::getenv("MMJSQ_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

Replication replicate(const MmJsqModel& model, const SimConfig& config, std::size_t num_runs,
                      std::size_t threads) {
  if (num_runs < 1) throw Error(ErrorCode::InvalidConfig, "num_runs must be positive");
  validate(config);
  if (threads == 0) threads = default_parallelism();
  threads = std::min(threads, num_runs);

  Replication rep;
  rep.runs.resize(num_runs);
  auto run_one = [&](std::size_t r) {
    SimConfig c = config;
    c.seed = config.seed + r;
    rep.runs[r] = simulate(model, c);
  };

  if (threads <= 1) {
    for (std::size_t r = 0; r < num_runs; ++r) run_one(r);
  } else {
    // Workers take run indices in strides; each writes only its own slots.
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < threads; ++w) {
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t r = w; r < num_runs; r += threads) run_one(r);
      }));
    }
    for (auto& f : workers) f.get();
  }
  rep.aggregate = aggregate(rep.runs);
  return rep;
}

}  // namespace mmjsq
