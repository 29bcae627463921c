#include "netsched/asymptotics.hpp"

#include <cmath>
#include <sstream>

#include "netsched/cost_model.hpp"
#include "netsched/errors.hpp"
#include "netsched/rng.hpp"

namespace netsched {

MeanFieldOperator MeanFieldOperator::decoupled(Eigen::MatrixXd local) {
  MeanFieldOperator op;
  op.shared_ = std::move(local);
  return op;
}

MeanFieldOperator MeanFieldOperator::coupled(LocalAtFn local_at) {
  MeanFieldOperator op;
  op.local_at_ = std::move(local_at);
  return op;
}

Eigen::MatrixXd MeanFieldOperator::local_at(const Eigen::VectorXd& p) const {
  return local_at_ ? local_at_(p) : shared_;
}

Eigen::VectorXd MeanFieldOperator::step(const Eigen::VectorXd& p) const {
  if (p.minCoeff() < -1e-12 || std::abs(p.sum() - 1.0) > 1e-9)
    throw ConfigError("mean-field input is not a pmf");
  Eigen::MatrixXd t = local_at_ ? local_at_(p) : shared_;
  // T-bar(p)(s') = sum_s p(s) T(s'|s,p): left-multiply by the row-stochastic
  // matrix transposed.
  return t.transpose() * p;
}

Eigen::VectorXd mean_field_step(const Eigen::VectorXd& p,
                                const MeanFieldOperator& op) {
  return op.step(p);
}

Eigen::VectorXd infinite_population_estimate(const Eigen::VectorXd& m1, int t,
                                             const MeanFieldOperator& op) {
  if (t < 1) throw ConfigError("time index starts at 1");
  Eigen::VectorXd p = m1;
  for (int i = 1; i < t; ++i) p = op.step(p);
  return p;
}

double certainty_threshold(double k_c, double k_p, double gamma,
                           double noise_term) {
  if (gamma <= 0.0 || gamma >= 1.0) throw ConfigError("gamma must be in (0,1)");
  if (noise_term < 0.0) throw ConfigError("noise term must be nonnegative");
  if (gamma * k_p >= 1.0)
    throw ConfigError("Assumption 4 violated: gamma*K_p >= 1");
  return gamma * k_c / ((1.0 - gamma) * (1.0 - gamma * k_p)) * noise_term;
}

namespace {

// Enumerate the resolution-R grid on the probability simplex.
std::vector<Eigen::VectorXd> simplex_grid(int num_states, int resolution) {
  std::vector<Eigen::VectorXd> out;
  std::vector<int> c(static_cast<std::size_t>(num_states), 0);
  auto rec = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == num_states - 1) {
      c[static_cast<std::size_t>(pos)] = remaining;
      Eigen::VectorXd p(num_states);
      for (int i = 0; i < num_states; ++i)
        p[i] = static_cast<double>(c[static_cast<std::size_t>(i)]) / resolution;
      out.push_back(std::move(p));
      return;
    }
    for (int a = remaining; a >= 0; --a) {
      c[static_cast<std::size_t>(pos)] = a;
      self(self, pos + 1, remaining - a);
    }
  };
  rec(rec, 0, resolution);
  return out;
}

double linf(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

LipschitzEstimates estimate_lipschitz_constants(const MeanFieldOperator& op,
                                                const CostModel& cost,
                                                int num_states,
                                                int grid_resolution) {
  if (grid_resolution < 1) throw ConfigError("grid resolution must be >= 1");
  auto grid = simplex_grid(num_states, grid_resolution);
  LipschitzEstimates est;
  est.grid_resolution = grid_resolution;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Eigen::MatrixXd ti = op.local_at(grid[i]);
    Eigen::VectorXd si = op.step(grid[i]);
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      double d = linf(grid[i], grid[j]);
      if (d < 1e-12) continue;
      Eigen::MatrixXd tj = op.local_at(grid[j]);
      est.k_t = std::max(est.k_t, (ti - tj).cwiseAbs().maxCoeff() / d);
      est.k_p = std::max(est.k_p, linf(si, op.step(grid[j])) / d);
      for (int a = 0; a < 2; ++a)
        est.k_c = std::max(est.k_c, cost(grid[i], grid[j], a) / d);
    }
  }
  return est;
}

std::string ThresholdReport::to_json() const {
  std::ostringstream out;
  out.precision(12);
  out << "{\"n\": " << n << ", \"K_c\": " << k_c << ", \"K_p\": " << k_p
      << ", \"gamma\": " << gamma << ", \"C_fit\": " << c_fit
      << ", \"threshold\": " << threshold
      << ", \"collection_cost\": " << collection_cost
      << ", \"recommend_estimate_only\": "
      << (recommend_estimate_only ? "true" : "false") << "}";
  return out.str();
}

double fit_deviation_constant(const Eigen::MatrixXd& local, int n,
                              const Eigen::VectorXd& m1, std::int64_t paths,
                              std::uint64_t seed, double k_p, int horizon) {
  const int num_states = static_cast<int>(local.rows());
  std::vector<int> counts(static_cast<std::size_t>(num_states));
  for (int s = 0; s < num_states; ++s) {
    double c = m1[s] * n;
    counts[static_cast<std::size_t>(s)] = static_cast<int>(std::lround(c));
    if (std::abs(c - std::lround(c)) > 1e-9)
      throw ConfigError("initial pmf is not representable with n nodes");
  }
  MeanFieldOperator op = MeanFieldOperator::decoupled(local);

  double acc = 0.0;
  std::int64_t terms = 0;
  for (std::int64_t path = 0; path < paths; ++path) {
    SplitMix64 rng(derive_stream(seed, static_cast<std::uint64_t>(path)));
    std::vector<int> cur = counts;
    Eigen::VectorXd mhat = m1;
    Eigen::VectorXd m = m1;
    for (int t = 1; t <= horizon; ++t) {
      double prev_dev = linf(m, mhat);
      // Advance every node independently through its row.
      std::vector<int> next(static_cast<std::size_t>(num_states), 0);
      for (int s = 0; s < num_states; ++s) {
        for (int i = 0; i < cur[static_cast<std::size_t>(s)]; ++i) {
          double u = rng.uniform();
          double csum = 0.0;
          int target = num_states - 1;
          for (int ss = 0; ss < num_states; ++ss) {
            csum += local(s, ss);
            if (u < csum) {
              target = ss;
              break;
            }
          }
          ++next[static_cast<std::size_t>(target)];
        }
      }
      cur = next;
      for (int s = 0; s < num_states; ++s)
        m[s] = static_cast<double>(cur[static_cast<std::size_t>(s)]) / n;
      mhat = op.step(mhat);
      acc += linf(m, mhat) - k_p * prev_dev;
      ++terms;
    }
  }
  return std::sqrt(static_cast<double>(n)) * acc /
         static_cast<double>(terms);
}

}  // namespace netsched
