#include "netsched/planning.hpp"

#include <cmath>

#include "netsched/csv.hpp"
#include "netsched/errors.hpp"

namespace netsched {

int truncation_index(double epsilon, double gamma, double c_max,
                     bool* degenerate) {
  if (epsilon <= 0.0) throw ConfigError("epsilon must be positive");
  if (gamma <= 0.0 || gamma >= 1.0) throw ConfigError("gamma must be in (0,1)");
  if (c_max <= 0.0) throw ConfigError("c_max must be positive");
  if (degenerate) *degenerate = false;
  double ratio = (1.0 - gamma) * epsilon / (2.0 * c_max);
  if (ratio >= 1.0) {
    if (degenerate) *degenerate = true;
    return 0;
  }
  double k = std::log(ratio) / std::log(gamma);
  return static_cast<int>(std::ceil(k - 1e-12));
}

double expected_step_cost(const PlanningProblem& p, int x, int y, int a) {
  const Eigen::MatrixXd& power = p.kernel->power(y);
  Eigen::VectorXd row = power.row(x);
  Estimate est = p.estimator->estimate(row, x, y);
  double total = 0.0;
  for (int m = 0; m < row.size(); ++m)
    if (row[m] > 0.0) total += row[m] * (*p.cost)(p.space->pmf(m), est.pmf, a);
  return total;
}

int ValueTable::first_collect(int x) const {
  for (int y = 0; y <= k; ++y)
    if (action_at(x, y) == 1) return y;
  return -1;
}

void ValueTable::save_csv(const EmpiricalSpace& space,
                          const std::filesystem::path& path,
                          const std::map<std::string, std::string>& metadata)
    const {
  CsvWriter w(path, metadata,
              {"x_index", "x_counts", "y", "V0", "V1", "V", "action"});
  for (int x = 0; x < num_x; ++x) {
    std::string counts;
    for (std::size_t i = 0; i < space.at(x).counts.size(); ++i) {
      if (i) counts += ' ';
      counts += std::to_string(space.at(x).counts[i]);
    }
    for (int y = 0; y <= k; ++y) {
      w.row({std::to_string(x), counts, std::to_string(y),
             CsvWriter::num(value0(x, y)), CsvWriter::num(value1(x, y)),
             CsvWriter::num(value(x, y)), std::to_string(action_at(x, y))});
    }
  }
}

ValueTable value_iteration(const PlanningProblem& p, int k,
                           const ValueIterationOptions& options) {
  if (k < 0) throw ConfigError("truncation index must be >= 0");
  if (p.credibility < 0.0 || p.credibility > 1.0)
    throw ConfigError("credibility must be in [0,1]");
  const int num_x = p.space->size();
  const double gamma = p.gamma;
  const double q = p.credibility;
  const double c_max = p.cost->c_max();
  const int anchor = options.anchor >= 0 ? options.anchor : 0;
  if (anchor >= num_x) throw ConfigError("anchor atom out of range");

  p.kernel->ensure_powers(k + 1);

  // Expected per-step costs for both actions over the whole planning space.
  const int ky = k + 1;
  std::vector<double> chat0(static_cast<std::size_t>(num_x) * ky);
  std::vector<double> chat1(static_cast<std::size_t>(num_x) * ky);
  for (int x = 0; x < num_x; ++x)
    for (int y = 0; y <= k; ++y) {
      const Eigen::MatrixXd& power = p.kernel->power(y);
      Eigen::VectorXd row = power.row(x);
      Estimate est = p.estimator->estimate(row, x, y);
      double c0 = 0.0, c1 = 0.0;
      for (int m = 0; m < num_x; ++m) {
        if (row[m] <= 0.0) continue;
        c0 += row[m] * (*p.cost)(p.space->pmf(m), est.pmf, 0);
        c1 += row[m] * (*p.cost)(p.space->pmf(m), est.pmf, 1);
      }
      chat0[static_cast<std::size_t>(x) * ky + y] = c0;
      chat1[static_cast<std::size_t>(x) * ky + y] = c1;
    }

  int max_iter = options.max_iterations;
  if (max_iter < 0) {
    double bound =
        std::log(options.tol * (1.0 - gamma) / std::max(c_max, 1e-300)) /
        std::log(gamma);
    max_iter = static_cast<int>(std::ceil(std::max(1.0, bound))) + 16;
  }

  ValueTable table;
  table.num_x = num_x;
  table.k = k;
  table.anchor = anchor;
  table.v0.assign(static_cast<std::size_t>(num_x) * ky, 0.0);
  table.v1.assign(static_cast<std::size_t>(num_x) * ky, 0.0);
  table.v.assign(static_cast<std::size_t>(num_x) * ky, 0.0);
  table.action.assign(static_cast<std::size_t>(num_x) * ky, 0);

  Eigen::VectorXd v0col = Eigen::VectorXd::Zero(num_x);
  std::vector<double> value = table.v;
  std::vector<double> next(value.size());

  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  while (residual > options.tol) {
    if (++it > max_iter)
      throw NumericalError("value iteration did not reach tol " +
                           std::to_string(options.tol) + "; residual " +
                           std::to_string(residual));
    for (int x = 0; x < num_x; ++x) v0col[x] = value[table.idx(x, 0)];
    residual = 0.0;
    for (int y = 0; y <= k; ++y) {
      // Expected value of a fresh credible observation drawn y+1 steps out.
      Eigen::VectorXd reset = p.kernel->power(y + 1) * v0col;
      for (int x = 0; x < num_x; ++x) {
        double cont = y < k ? value[table.idx(x, y + 1)]
                            : value[table.idx(anchor, 0)];
        double b0 = chat0[static_cast<std::size_t>(x) * ky + y] + gamma * cont;
        double b1 = chat1[static_cast<std::size_t>(x) * ky + y] +
                    (1.0 - q) * gamma * cont + q * gamma * reset[x];
        double v = std::min(b0, b1);
        next[table.idx(x, y)] = v;
        residual = std::max(residual, std::abs(v - value[table.idx(x, y)]));
      }
    }
    value.swap(next);
  }

  // Final branch tables from the converged values.
  for (int x = 0; x < num_x; ++x) v0col[x] = value[table.idx(x, 0)];
  for (int y = 0; y <= k; ++y) {
    Eigen::VectorXd reset = p.kernel->power(y + 1) * v0col;
    for (int x = 0; x < num_x; ++x) {
      double cont =
          y < k ? value[table.idx(x, y + 1)] : value[table.idx(anchor, 0)];
      double b0 = chat0[static_cast<std::size_t>(x) * ky + y] + gamma * cont;
      double b1 = chat1[static_cast<std::size_t>(x) * ky + y] +
                  (1.0 - q) * gamma * cont + q * gamma * reset[x];
      table.v0[table.idx(x, y)] = b0;
      table.v1[table.idx(x, y)] = b1;
      table.v[table.idx(x, y)] = std::min(b0, b1);
      table.action[table.idx(x, y)] = b0 <= b1 ? 0 : 1;
    }
  }
  table.iterations = it;
  table.residual = residual;
  return table;
}

std::vector<std::uint8_t> extract_strategy(const ValueTable& table) {
  return table.action;
}

namespace {

struct OracleContext {
  const PlanningProblem* p;
  int horizon;
};

// V_t(b, x, y): optimal cost-to-go from the filtered belief b over M(n); x, y
// are carried only for the estimator.
double oracle_value(const OracleContext& ctx, const Eigen::VectorXd& belief,
                    int x, int y, int t) {
  if (t > ctx.horizon) return 0.0;
  const PlanningProblem& p = *ctx.p;
  const int num = p.space->size();
  const double q = p.credibility;

  Estimate est = p.estimator->estimate(belief, x, y);
  Eigen::VectorXd pushed = p.kernel->matrix().transpose() * belief;

  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 2; ++a) {
    double step = 0.0;
    for (int m = 0; m < num; ++m)
      if (belief[m] > 0.0)
        step += belief[m] * (*p.cost)(p.space->pmf(m), est.pmf, a);
    double cont = 0.0;
    double p_blank = 1.0 - a * q;
    // A blank keeps the pushed belief (the blank likelihood is flat in m).
    if (p_blank > 0.0)
      cont += p_blank * oracle_value(ctx, pushed, x, y + 1, t + 1);
    if (a == 1 && q > 0.0) {
      for (int mp = 0; mp < num; ++mp) {
        if (pushed[mp] <= 1e-15) continue;
        Eigen::VectorXd point = Eigen::VectorXd::Zero(num);
        point[mp] = 1.0;
        cont += q * pushed[mp] * oracle_value(ctx, point, mp, 0, t + 1);
      }
    }
    best = std::min(best, step + p.gamma * cont);
  }
  return best;
}

}  // namespace

double bellman_oracle_small(const PlanningProblem& p, int initial_atom,
                            int horizon, const OracleLimits& limits) {
  if (p.space->size() > limits.max_atoms)
    throw ConfigError("oracle restricted to tiny spaces");
  if (horizon > limits.max_horizon)
    throw ConfigError("oracle restricted to small horizons");
  Eigen::VectorXd belief = Eigen::VectorXd::Zero(p.space->size());
  belief[initial_atom] = 1.0;
  OracleContext ctx{&p, horizon};
  return oracle_value(ctx, belief, initial_atom, 0, 1);
}

}  // namespace netsched
