#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "netsched/empirical.hpp"

namespace netsched {

// Per-node transition law T(s'|s,m): one |S|x|S| row-stochastic matrix, either
// shared across all m (decoupled dynamics) or stored per atom of M(n).
class LocalKernel {
 public:
  static LocalKernel decoupled(Eigen::MatrixXd matrix);
  static LocalKernel coupled(std::vector<Eigen::MatrixXd> per_atom);

  bool is_decoupled() const { return per_atom_.empty(); }
  int num_states() const;

  // Matrix for the given M(n) atom; decoupled kernels ignore the index.
  const Eigen::MatrixXd& at(int m_index) const;
  // Decoupled-only accessor.
  const Eigen::MatrixXd& matrix() const;

 private:
  LocalKernel() = default;
  Eigen::MatrixXd shared_;
  std::vector<Eigen::MatrixXd> per_atom_;
};

// Finite noise distribution for building kernels from a dynamics function.
struct NoisePmf {
  std::vector<double> values;
  std::vector<double> probs;

  void validate() const;
};

// Node dynamics s' = f(s, m, w); m is the probability view of the empirical
// distribution. Must return a member of the state space.
using DynamicsFn =
    std::function<double(double s, const Eigen::VectorXd& m, double w)>;
using DecoupledDynamicsFn = std::function<double(double s, double w)>;

// T(s'|s,m) = sum of noise probabilities landing on s'. Throws when f leaves
// the state space ("dynamics leaves state space").
LocalKernel local_kernel_from_noise(const DynamicsFn& f, const NoisePmf& noise,
                                    const EmpiricalSpace& space);
Eigen::MatrixXd local_matrix_from_noise(const DecoupledDynamicsFn& f,
                                        const NoisePmf& noise,
                                        const StateSpace& states);

}  // namespace netsched
