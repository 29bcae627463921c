#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace netsched {

// Undirected weighted graph plus the polynomial filter coefficients used to
// vectorize its dynamics.
struct GraphSpec {
  Eigen::MatrixXd adjacency;
  std::vector<double> poly;  // alpha(0..L)
  int dominant_modes = 1;    // D
};

struct SpectralMode {
  double eigenvalue = 0.0;    // lambda_d
  double coefficient = 0.0;   // A_d = sum_l alpha(l) lambda_d^l
  Eigen::VectorXd weights;    // v^d, normalized so (1/n) sum_i (v_i)^2 = 1
};

// Top-D eigenpairs by |lambda| (ties: larger lambda first). Eigenvector sign
// fixed by making the largest-magnitude entry positive.
std::vector<SpectralMode> spectral_vectorize(const GraphSpec& graph);

// Adjacency input: a dense matrix CSV (square grid of numbers) or an
// edge-list CSV with rows "i,j[,weight]" over 0-based node ids. Symmetrized
// edges; the format is detected from the row shapes.
Eigen::MatrixXd load_adjacency_csv(const std::filesystem::path& path);

struct LinearNetworkModel {
  Eigen::MatrixXd A;         // block-diagonal mode dynamics
  Eigen::MatrixXd sigma_w;   // noise covariance of the aggregated noise
  double credibility = 1.0;  // q
  double gamma = 0.9;
  double fee = 0.0;          // ell
  int delay = 0;             // fixed observation delay: costs shift y by tau

  int dim() const { return static_cast<int>(A.rows()); }
  void validate() const;
  // Spectral radius of A below 1 (the stability assumption for the closed
  // form and the infinite-horizon cost).
  bool stable(double margin = 1e-12) const;
};

// Separation-principle estimate update: a fresh credible observation replaces
// the estimate, otherwise the estimate is propagated by A.
Eigen::VectorXd kalman_like_update(const Eigen::VectorXd& mhat,
                                   const std::optional<Eigen::VectorXd>& x_next,
                                   int y_next, const Eigen::MatrixXd& A);

// Elapsed-time cost c(y,a): trace of the accumulated estimation-error
// covariance plus the collection fee. Closed form under stability, finite sum
// otherwise; the two agree within 1e-9 where both apply.
double elapsed_cost(int y, int a, const LinearNetworkModel& model);
double elapsed_cost_sum(int y, int a, const LinearNetworkModel& model);

// Exact discounted cost of never collecting: sum_t gamma^{t-1} c(t-1, 0).
// This is the sharp certainty threshold for the linear-quadratic case.
double estimate_only_cost(const LinearNetworkModel& model);

struct YValueTable {
  int k = 0;
  std::vector<double> v0, v1, v;
  std::vector<std::uint8_t> action;
  int iterations = 0;
  double residual = 0.0;

  int first_collect() const;  // smallest y with a collect action, -1 if none
};

// Elapsed-time-only Bellman recursion; the state is y alone, so the result is
// independent of the observed data by construction.
YValueTable y_space_value_iteration(const LinearNetworkModel& model, int k,
                                    double tol = 1e-12);

struct ObservationModel {
  Eigen::MatrixXd C;
  Eigen::MatrixXd sigma_xi;
};

// Covariance recursion: prediction only when a=0, full measurement update
// when a=1. Falls back to a pseudo-inverse on a singular innovation
// covariance and sets the flag.
Eigen::MatrixXd riccati_step(const Eigen::MatrixXd& P, int a,
                             const LinearNetworkModel& model,
                             const ObservationModel& obs,
                             bool* used_pseudo_inverse = nullptr);

struct ScheduleResult {
  std::vector<int> actions;
  double objective = 0.0;
};

// Globally optimal binary measurement schedule over horizon H by exhaustive
// search (H <= 22), with optional memoization keyed on the rounded covariance.
// Ties resolve to the lexicographically smallest schedule.
ScheduleResult finite_horizon_schedule(const LinearNetworkModel& model,
                                       const ObservationModel& obs, int horizon,
                                       bool memoize = true);

}  // namespace netsched
