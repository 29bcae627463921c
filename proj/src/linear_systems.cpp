#include "netsched/linear_systems.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "netsched/errors.hpp"

namespace netsched {

std::vector<SpectralMode> spectral_vectorize(const GraphSpec& graph) {
  const Eigen::MatrixXd& adj = graph.adjacency;
  if (adj.rows() != adj.cols() || adj.rows() < 1)
    throw ConfigError("adjacency must be square");
  if ((adj - adj.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError("adjacency must be symmetric");
  if (graph.dominant_modes < 1 || graph.dominant_modes > adj.rows())
    throw ConfigError("dominant mode count out of range");
  if (graph.poly.empty()) throw ConfigError("polynomial coefficients missing");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(adj);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed");
  const int n = static_cast<int>(adj.rows());

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  const Eigen::VectorXd& evals = solver.eigenvalues();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double ma = std::abs(evals[a]), mb = std::abs(evals[b]);
    if (ma != mb) return ma > mb;
    return evals[a] > evals[b];
  });

  std::vector<SpectralMode> modes;
  modes.reserve(static_cast<std::size_t>(graph.dominant_modes));
  for (int d = 0; d < graph.dominant_modes; ++d) {
    int j = order[static_cast<std::size_t>(d)];
    SpectralMode mode;
    mode.eigenvalue = evals[j];
    mode.coefficient = 0.0;
    double pw = 1.0;
    for (std::size_t l = 0; l < graph.poly.size(); ++l) {
      mode.coefficient += graph.poly[l] * pw;
      pw *= mode.eigenvalue;
    }
    // Unit eigenvector scaled to the (1/n) sum v^2 = 1 convention, sign fixed
    // by the largest-magnitude entry.
    Eigen::VectorXd v = solver.eigenvectors().col(j) * std::sqrt(double(n));
    int arg = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    if (v[arg] < 0.0) v = -v;
    mode.weights = std::move(v);
    modes.push_back(std::move(mode));
  }
  return modes;
}

Eigen::MatrixXd load_adjacency_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        cells.push_back(std::stod(cell, &pos));
        if (pos != cell.size() && cell.find_first_not_of(" \t", pos) !=
                                      std::string::npos)
          numeric = false;
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) continue;  // header line
    if (!cells.empty()) rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw ConfigError("no numeric rows in " + path.string());

  bool dense = rows.front().size() == rows.size();
  for (const auto& r : rows) dense = dense && r.size() == rows.size();
  if (dense && rows.size() > 3) {
    Eigen::MatrixXd adj(rows.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows.size(); ++j)
        adj(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    return adj;
  }

  // Edge list: find the node count first.
  int max_node = 0;
  for (const auto& r : rows) {
    if (r.size() < 2 || r.size() > 3)
      throw ConfigError("edge rows must be i,j or i,j,weight");
    max_node = std::max({max_node, static_cast<int>(std::lround(r[0])),
                         static_cast<int>(std::lround(r[1]))});
  }
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(max_node + 1, max_node + 1);
  for (const auto& r : rows) {
    int i = static_cast<int>(std::lround(r[0]));
    int j = static_cast<int>(std::lround(r[1]));
    double w = r.size() == 3 ? r[2] : 1.0;
    adj(i, j) = w;
    adj(j, i) = w;
  }
  return adj;
}

void LinearNetworkModel::validate() const {
  if (A.rows() != A.cols()) throw ConfigError("A must be square");
  if (sigma_w.rows() != A.rows() || sigma_w.cols() != A.cols())
    throw ConfigError("noise covariance size mismatch");
  if ((sigma_w - sigma_w.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw ConfigError("noise covariance must be symmetric");
  if (credibility < 0.0 || credibility > 1.0)
    throw ConfigError("credibility must be in [0,1]");
  if (gamma <= 0.0 || gamma >= 1.0) throw ConfigError("gamma must be in (0,1)");
  if (fee < 0.0) throw ConfigError("fee must be nonnegative");
}

bool LinearNetworkModel::stable(double margin) const {
  Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(A).eigenvalues();
  double radius = 0.0;
  for (int i = 0; i < ev.size(); ++i) radius = std::max(radius, std::abs(ev[i]));
  return radius < 1.0 - margin;
}

Eigen::VectorXd kalman_like_update(const Eigen::VectorXd& mhat,
                                   const std::optional<Eigen::VectorXd>& x_next,
                                   int y_next, const Eigen::MatrixXd& A) {
  if (A.rows() != mhat.size()) throw ConfigError("dimension mismatch");
  if (y_next == 0) {
    if (!x_next || x_next->size() != mhat.size())
      throw ConfigError("fresh observation required when y resets");
    return *x_next;
  }
  return A * mhat;
}

namespace {

double error_trace_sum(int effective_y, const LinearNetworkModel& model) {
  const int d = model.dim();
  Eigen::MatrixXd ata = model.A.transpose() * model.A;
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(d, d);
  double total = 0.0;
  for (int tau = 1; tau <= effective_y; ++tau) {
    total += (term * model.sigma_w).trace();
    term = ata * term;
  }
  return total;
}

}  // namespace

double elapsed_cost_sum(int y, int a, const LinearNetworkModel& model) {
  if (y < 0) throw ConfigError("elapsed time must be nonnegative");
  return error_trace_sum(y + model.delay, model) + model.fee * a;
}

double elapsed_cost(int y, int a, const LinearNetworkModel& model) {
  if (y < 0) throw ConfigError("elapsed time must be nonnegative");
  const int ye = y + model.delay;
  if (ye == 0) return model.fee * a;
  const int d = model.dim();
  Eigen::MatrixXd ata = model.A.transpose() * model.A;
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(d, d) - ata;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
  if (!lu.isInvertible())
    return error_trace_sum(ye, model) + model.fee * a;
  Eigen::MatrixXd atay = Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i < ye; ++i) atay = ata * atay;
  Eigen::MatrixXd inner =
      lu.solve(Eigen::MatrixXd::Identity(d, d) - atay) * model.sigma_w;
  return inner.trace() + model.fee * a;
}

double estimate_only_cost(const LinearNetworkModel& model) {
  if (!model.stable())
    throw ConfigError("estimate-only cost requires a stable A");
  const int d = model.dim();
  Eigen::MatrixXd ata = model.A.transpose() * model.A;
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  // sum_t gamma^{t-1} Tr((I-S)^{-1}(I - S^{t-1}) W), S = A^T A:
  // = Tr((I-S)^{-1} [1/(1-gamma) I - (I - gamma S)^{-1}] W).
  Eigen::MatrixXd lhs = (eye - ata).fullPivLu().solve(
      eye / (1.0 - model.gamma) -
      (eye - model.gamma * ata).fullPivLu().solve(eye));
  return (lhs * model.sigma_w).trace();
}

int YValueTable::first_collect() const {
  for (int y = 0; y <= k; ++y)
    if (action[static_cast<std::size_t>(y)] == 1) return y;
  return -1;
}

YValueTable y_space_value_iteration(const LinearNetworkModel& model, int k,
                                    double tol) {
  model.validate();
  if (k < 0) throw ConfigError("truncation index must be >= 0");
  const double gamma = model.gamma;
  const double q = model.credibility;

  std::vector<double> c0(static_cast<std::size_t>(k) + 1);
  std::vector<double> c1(static_cast<std::size_t>(k) + 1);
  for (int y = 0; y <= k; ++y) {
    c0[static_cast<std::size_t>(y)] = elapsed_cost(y, 0, model);
    c1[static_cast<std::size_t>(y)] = elapsed_cost(y, 1, model);
  }

  double c_max = std::max(c0[static_cast<std::size_t>(k)],
                          c1[static_cast<std::size_t>(k)]);
  int max_iter =
      static_cast<int>(std::ceil(std::max(
          1.0, std::log(tol * (1.0 - gamma) / std::max(c_max, 1e-300)) /
                   std::log(gamma)))) +
      16;

  YValueTable t;
  t.k = k;
  t.v.assign(static_cast<std::size_t>(k) + 1, 0.0);
  t.v0.assign(static_cast<std::size_t>(k) + 1, 0.0);
  t.v1.assign(static_cast<std::size_t>(k) + 1, 0.0);
  t.action.assign(static_cast<std::size_t>(k) + 1, 0);

  std::vector<double> value = t.v, next = t.v;
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  while (residual > tol) {
    if (++it > max_iter)
      throw NumericalError("elapsed-time value iteration did not converge");
    residual = 0.0;
    for (int y = 0; y <= k; ++y) {
      double cont = y < k ? value[static_cast<std::size_t>(y) + 1] : value[0];
      double b0 = c0[static_cast<std::size_t>(y)] + gamma * cont;
      double b1 = c1[static_cast<std::size_t>(y)] + (1.0 - q) * gamma * cont +
                  q * gamma * value[0];
      double v = std::min(b0, b1);
      residual = std::max(residual,
                          std::abs(v - value[static_cast<std::size_t>(y)]));
      next[static_cast<std::size_t>(y)] = v;
    }
    value.swap(next);
  }
  for (int y = 0; y <= k; ++y) {
    double cont = y < k ? value[static_cast<std::size_t>(y) + 1] : value[0];
    double b0 = c0[static_cast<std::size_t>(y)] + gamma * cont;
    double b1 = c1[static_cast<std::size_t>(y)] + (1.0 - q) * gamma * cont +
                q * gamma * value[0];
    t.v0[static_cast<std::size_t>(y)] = b0;
    t.v1[static_cast<std::size_t>(y)] = b1;
    t.v[static_cast<std::size_t>(y)] = std::min(b0, b1);
    t.action[static_cast<std::size_t>(y)] = b0 <= b1 ? 0 : 1;
  }
  t.iterations = it;
  t.residual = residual;
  return t;
}

Eigen::MatrixXd riccati_step(const Eigen::MatrixXd& P, int a,
                             const LinearNetworkModel& model,
                             const ObservationModel& obs,
                             bool* used_pseudo_inverse) {
  const int d = model.dim();
  if (P.rows() != d || P.cols() != d) throw ConfigError("P size mismatch");
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw ConfigError("P must be symmetric");
  if (used_pseudo_inverse) *used_pseudo_inverse = false;

  Eigen::MatrixXd predicted =
      model.A * P * model.A.transpose() + model.sigma_w;
  if (a == 0) return 0.5 * (predicted + predicted.transpose());

  const Eigen::MatrixXd& c = obs.C;
  if (c.cols() != d) throw ConfigError("C size mismatch");
  Eigen::MatrixXd innovation =
      c * P * c.transpose() + obs.sigma_xi;  // E(a)=1 when a=1
  Eigen::MatrixXd gain_rhs = c * P * model.A.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(innovation);
  Eigen::MatrixXd correction;
  if (llt.info() == Eigen::Success &&
      innovation.diagonal().minCoeff() > 1e-300) {
    correction = gain_rhs.transpose() * llt.solve(gain_rhs);
  } else {
    if (used_pseudo_inverse) *used_pseudo_inverse = true;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(innovation);
    correction = gain_rhs.transpose() * cod.pseudoInverse() * gain_rhs;
  }
  Eigen::MatrixXd next = predicted - correction;
  return 0.5 * (next + next.transpose());
}

namespace {

struct ScheduleSearch {
  const LinearNetworkModel* model;
  const ObservationModel* obs;
  int horizon;
  bool memoize;
  std::map<std::pair<int, std::vector<std::int64_t>>,
           std::pair<double, std::vector<int>>>
      memo;

  std::vector<std::int64_t> key(const Eigen::MatrixXd& P) const {
    std::vector<std::int64_t> k;
    k.reserve(static_cast<std::size_t>(P.size()));
    for (int i = 0; i < P.rows(); ++i)
      for (int j = 0; j < P.cols(); ++j)
        k.push_back(static_cast<std::int64_t>(std::llround(P(i, j) * 1e9)));
    return k;
  }

  // Best discounted suffix cost from step t with covariance P.
  std::pair<double, std::vector<int>> search(int t, const Eigen::MatrixXd& P) {
    if (t > horizon) return {0.0, {}};
    std::pair<int, std::vector<std::int64_t>> memo_key;
    if (memoize) {
      memo_key = {t, key(P)};
      auto it = memo.find(memo_key);
      if (it != memo.end()) return it->second;
    }
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_actions;
    // Ties prefer measuring: from P_1 = 0 the first measurement is free of
    // information, and the all-ones schedule should still win at zero fee.
    for (int a : {1, 0}) {
      Eigen::MatrixXd next = riccati_step(P, a, *model, *obs);
      auto [suffix, actions] = search(t + 1, next);
      double cost = next.trace() + model->fee * a + model->gamma * suffix;
      if (cost < best) {
        best = cost;
        best_actions = actions;
        best_actions.insert(best_actions.begin(), a);
      }
    }
    std::pair<double, std::vector<int>> out{best, std::move(best_actions)};
    if (memoize) memo[memo_key] = out;
    return out;
  }
};

}  // namespace

ScheduleResult finite_horizon_schedule(const LinearNetworkModel& model,
                                       const ObservationModel& obs, int horizon,
                                       bool memoize) {
  model.validate();
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (horizon > 22)
    throw ConfigError(
        "horizon over the exhaustive-search cap of 22; use a heuristic");
  ScheduleSearch s{&model, &obs, horizon, memoize, {}};
  Eigen::MatrixXd P0 = Eigen::MatrixXd::Zero(model.dim(), model.dim());
  // The objective discounts from t=1: sum_t gamma^{t-1} (Tr P_{t+1} + fee a_t).
  auto [objective, actions] = s.search(1, P0);
  return ScheduleResult{std::move(actions), objective};
}

}  // namespace netsched
