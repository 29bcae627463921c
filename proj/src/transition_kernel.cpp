#include "netsched/transition_kernel.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "netsched/errors.hpp"

namespace netsched {
namespace {

// Clamp tiny negative round-off, then renormalize rows; anything worse than
// the tolerance is a construction bug, not round-off.
Eigen::MatrixXd sanitize_rows(Eigen::MatrixXd m, double tol = 1e-10) {
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      double v = m(i, j);
      if (v < 0.0) {
        if (v < -1e-14) throw NumericalError("kernel entry below -1e-14");
        m(i, j) = 0.0;
      }
    }
    double sum = m.row(i).sum();
    if (std::abs(sum - 1.0) > tol)
      throw NumericalError("kernel row sum off by more than 1e-10");
    m.row(i) /= sum;
  }
  return m;
}

// Binomial pmf as a dense vector of length trials+1; exact at p in {0,1}.
Eigen::VectorXd binomial_pmf(int trials, double p) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(trials + 1);
  if (trials == 0) {
    out[0] = 1.0;
    return out;
  }
  if (p <= 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (p >= 1.0) {
    out[trials] = 1.0;
    return out;
  }
  double lp = std::log(p), lq = std::log1p(-p);
  for (int j = 0; j <= trials; ++j) {
    double lg = std::lgamma(trials + 1.0) - std::lgamma(j + 1.0) -
                std::lgamma(trials - j + 1.0);
    out[j] = std::exp(lg + j * lp + (trials - j) * lq);
  }
  return out;
}

std::vector<double> convolve(const std::vector<double>& a,
                             const Eigen::VectorXd& b) {
  std::vector<double> out(a.size() + static_cast<std::size_t>(b.size()) - 1,
                          0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

}  // namespace

TransitionKernel::TransitionKernel(const EmpiricalSpace& space,
                                   Eigen::MatrixXd matrix) {
  if (matrix.rows() != space.size() || matrix.cols() != space.size())
    throw ConfigError("kernel size does not match |M(n)|");
  cache_mutex_ = std::make_unique<std::mutex>();
  Eigen::MatrixXd clean = sanitize_rows(std::move(matrix));
  powers_.emplace_back(
      Eigen::MatrixXd::Identity(clean.rows(), clean.cols()));
  powers_.push_back(std::move(clean));
}

const Eigen::MatrixXd& TransitionKernel::power(int y) const {
  if (y < 0) throw ConfigError("kernel power must be nonnegative");
  ensure_powers(y);
  return powers_[static_cast<std::size_t>(y)];
}

void TransitionKernel::ensure_powers(int y) const {
  std::lock_guard<std::mutex> lock(*cache_mutex_);
  while (static_cast<int>(powers_.size()) <= y)
    powers_.push_back(powers_.back() * powers_[1]);
}

void TransitionKernel::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path.string());
  const Eigen::MatrixXd& m = matrix();
  out << "from_index";
  for (int j = 0; j < m.cols(); ++j) out << "," << j;
  out << "\n";
  out.precision(17);
  for (int i = 0; i < m.rows(); ++i) {
    out << i;
    for (int j = 0; j < m.cols(); ++j) out << "," << m(i, j);
    out << "\n";
  }
}

Eigen::MatrixXd TransitionKernel::load_csv_matrix(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty kernel csv");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      if (first) {
        first = false;  // from_index column
        continue;
      }
      row.push_back(std::stod(cell));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("kernel csv has no rows");
  Eigen::MatrixXd m(static_cast<int>(rows.size()),
                    static_cast<int>(rows.front().size()));
  for (int i = 0; i < m.rows(); ++i) {
    if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != m.cols())
      throw ConfigError("ragged kernel csv");
    for (int j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

TransitionKernel build_kernel_exact(const LocalKernel& local,
                                    const EmpiricalSpace& space) {
  if (local.num_states() != space.states().size())
    throw ConfigError("local kernel size does not match the state space");
  const int num_states = space.states().size();
  const int num_atoms = space.size();
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(num_atoms, num_atoms);

  // Allocation pmfs of c nodes into target states under one source row:
  // enumerate compositions of c with their multinomial probability.
  auto allocations = [&](int c, const Eigen::VectorXd& row) {
    std::vector<std::pair<std::vector<int>, double>> out;
    std::vector<int> alloc(static_cast<std::size_t>(num_states), 0);
    auto rec = [&](auto&& self, int pos, int remaining, double logp,
                   double logcoef) -> void {
      if (pos == num_states - 1) {
        alloc[static_cast<std::size_t>(pos)] = remaining;
        double lp = logp;
        if (remaining > 0) {
          if (row[pos] <= 0.0) return;  // impossible allocation
          lp += remaining * std::log(row[pos]);
        }
        double lc = logcoef - std::lgamma(remaining + 1.0);
        out.emplace_back(alloc, std::exp(lc + lp));
        return;
      }
      for (int a = 0; a <= remaining; ++a) {
        if (a > 0 && row[pos] <= 0.0) break;
        alloc[static_cast<std::size_t>(pos)] = a;
        double lp = logp + (a > 0 ? a * std::log(row[pos]) : 0.0);
        self(self, pos + 1, remaining - a, lp,
             logcoef - std::lgamma(a + 1.0));
      }
      alloc[static_cast<std::size_t>(pos)] = 0;
    };
    rec(rec, 0, c, 0.0, std::lgamma(c + 1.0));
    return out;
  };

  for (int mi = 0; mi < num_atoms; ++mi) {
    const auto& counts = space.at(mi).counts;
    const Eigen::MatrixXd& rows = local.at(mi);
    // Convolve per-source-state multinomial allocations across source states.
    std::map<std::vector<int>, double> dist;
    dist.emplace(std::vector<int>(static_cast<std::size_t>(num_states), 0),
                 1.0);
    for (int s = 0; s < num_states; ++s) {
      int c = counts[static_cast<std::size_t>(s)];
      if (c == 0) continue;
      auto allocs = allocations(c, rows.row(s));
      std::map<std::vector<int>, double> next;
      for (const auto& [vec, p] : dist) {
        for (const auto& [alloc, ap] : allocs) {
          std::vector<int> sum = vec;
          for (int ss = 0; ss < num_states; ++ss)
            sum[static_cast<std::size_t>(ss)] +=
                alloc[static_cast<std::size_t>(ss)];
          next[sum] += p * ap;
        }
      }
      dist = std::move(next);
    }
    for (const auto& [vec, p] : dist)
      t(mi, space.index_of_counts(vec)) += p;
  }
  return TransitionKernel(space, std::move(t));
}

Eigen::VectorXd deep_ck_marginal(const EmpiricalDistribution& m, int s_target,
                                 const LocalKernel& local,
                                 const EmpiricalSpace& space) {
  const int n = space.population();
  if (m.n != n) throw ConfigError("population size mismatch");
  const int mi = space.index_of(m);
  const Eigen::MatrixXd& rows = local.at(mi);
  std::vector<double> acc{1.0};  // Dirac at zero
  for (int s = 0; s < space.states().size(); ++s) {
    int c = m.counts[static_cast<std::size_t>(s)];
    if (c == 0) continue;  // delta_0 leaves the convolution unchanged
    acc = convolve(acc, binomial_pmf(c, rows(s, s_target)));
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n + 1);
  for (std::size_t i = 0; i < acc.size() && i <= static_cast<std::size_t>(n);
       ++i)
    out[static_cast<int>(i)] = acc[i];
  return out;
}

}  // namespace netsched
