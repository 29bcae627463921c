#pragma once

#include <Eigen/Dense>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>

#include "netsched/empirical.hpp"
#include "netsched/local_kernel.hpp"

namespace netsched {

// Data transition matrix over M(n), row-stochastic in the [from][to]
// convention: matrix()(i, j) = P(m' = atom j | m = atom i). Immutable after
// construction; the power cache is the only mutable state and is guarded.
class TransitionKernel {
 public:
  TransitionKernel(const EmpiricalSpace& space, Eigen::MatrixXd matrix);

  int size() const { return static_cast<int>(powers_.front().rows()); }
  const Eigen::MatrixXd& matrix() const { return powers_[1]; }

  // Memoized exact matrix power; power(0) is the identity. Safe to call from
  // multiple readers, cache growth is serialized.
  const Eigen::MatrixXd& power(int y) const;
  void ensure_powers(int y) const;

  // Distribution of the data y steps after a credible observation x.
  Eigen::VectorXd row_after(int x, int y) const { return power(y).row(x); }

  void save_csv(const std::filesystem::path& path) const;
  static Eigen::MatrixXd load_csv_matrix(const std::filesystem::path& path);

 private:
  mutable std::deque<Eigen::MatrixXd> powers_;  // deque: stable references
  mutable std::unique_ptr<std::mutex> cache_mutex_;
};

// Exact T_m row for every source atom by convolving, across source states,
// the multinomial allocation of the n*m(s) nodes under row T(.|s,m).
TransitionKernel build_kernel_exact(const LocalKernel& local,
                                    const EmpiricalSpace& space);

// Length-(n+1) law of n*m_{t+1}(s_target) given m: convolution over source
// states of Binomial(n*m(s), T(s_target|s,m)), with a Dirac at 0 when m(s)=0.
Eigen::VectorXd deep_ck_marginal(const EmpiricalDistribution& m, int s_target,
                                 const LocalKernel& local,
                                 const EmpiricalSpace& space);

}  // namespace netsched
