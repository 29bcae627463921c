#include "netsched/local_kernel.hpp"

#include <cmath>

#include "netsched/errors.hpp"

namespace netsched {
namespace {

void validate_rows(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw ConfigError("local kernel must be square");
  for (int i = 0; i < m.rows(); ++i) {
    double sum = 0.0;
    for (int j = 0; j < m.cols(); ++j) {
      double v = m(i, j);
      if (v < -1e-12 || v > 1.0 + 1e-12)
        throw ConfigError("local kernel entry outside [0,1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw ConfigError("local kernel row does not sum to 1");
  }
}

}  // namespace

LocalKernel LocalKernel::decoupled(Eigen::MatrixXd matrix) {
  validate_rows(matrix);
  LocalKernel k;
  k.shared_ = std::move(matrix);
  return k;
}

LocalKernel LocalKernel::coupled(std::vector<Eigen::MatrixXd> per_atom) {
  if (per_atom.empty()) throw ConfigError("coupled kernel needs one matrix per atom");
  for (const auto& m : per_atom) {
    validate_rows(m);
    if (m.rows() != per_atom.front().rows())
      throw ConfigError("coupled kernel matrices must share a size");
  }
  LocalKernel k;
  k.per_atom_ = std::move(per_atom);
  return k;
}

int LocalKernel::num_states() const {
  return is_decoupled() ? static_cast<int>(shared_.rows())
                        : static_cast<int>(per_atom_.front().rows());
}

const Eigen::MatrixXd& LocalKernel::at(int m_index) const {
  if (is_decoupled()) return shared_;
  return per_atom_.at(static_cast<std::size_t>(m_index));
}

const Eigen::MatrixXd& LocalKernel::matrix() const {
  if (!is_decoupled())
    throw ConfigError("coupled kernel has no single matrix; use at(m)");
  return shared_;
}

void NoisePmf::validate() const {
  if (values.size() != probs.size() || values.empty())
    throw ConfigError("noise pmf needs matching values and probabilities");
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw ConfigError("noise probability negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw ConfigError("noise probabilities must sum to 1");
}

namespace {

Eigen::MatrixXd matrix_from_noise(
    const std::function<double(double, double)>& f, const NoisePmf& noise,
    const StateSpace& states) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(states.size(), states.size());
  for (int s = 0; s < states.size(); ++s) {
    for (std::size_t w = 0; w < noise.values.size(); ++w) {
      double target = f(states.label(s), noise.values[w]);
      if (!states.contains(target))
        throw ConfigError("dynamics leaves state space");
      t(s, states.index_of(target)) += noise.probs[w];
    }
  }
  return t;
}

}  // namespace

LocalKernel local_kernel_from_noise(const DynamicsFn& f, const NoisePmf& noise,
                                    const EmpiricalSpace& space) {
  noise.validate();
  std::vector<Eigen::MatrixXd> per_atom;
  per_atom.reserve(static_cast<std::size_t>(space.size()));
  for (int m = 0; m < space.size(); ++m) {
    const Eigen::VectorXd& pmf = space.pmf(m);
    per_atom.push_back(matrix_from_noise(
        [&](double s, double w) { return f(s, pmf, w); }, noise,
        space.states()));
  }
  return LocalKernel::coupled(std::move(per_atom));
}

Eigen::MatrixXd local_matrix_from_noise(const DecoupledDynamicsFn& f,
                                        const NoisePmf& noise,
                                        const StateSpace& states) {
  noise.validate();
  return matrix_from_noise(f, noise, states);
}

}  // namespace netsched
