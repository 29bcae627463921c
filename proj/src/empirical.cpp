#include "netsched/empirical.hpp"

#include <algorithm>
#include <set>

#include "netsched/errors.hpp"

namespace netsched {

StateSpace::StateSpace(std::vector<double> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw ConfigError("state space must be nonempty");
  for (int i = 0; i < static_cast<int>(labels_.size()); ++i) {
    if (!index_.emplace(labels_[i], i).second)
      throw ConfigError("state labels must be distinct");
  }
}

StateSpace StateSpace::integer_range(int lo, int hi) {
  if (hi < lo) throw ConfigError("empty integer range");
  std::vector<double> labels;
  labels.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (int s = lo; s <= hi; ++s) labels.push_back(static_cast<double>(s));
  return StateSpace(std::move(labels));
}

int StateSpace::index_of(double label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw ConfigError("label not in state space");
  return it->second;
}

bool StateSpace::contains(double label) const {
  return index_.count(label) > 0;
}

Eigen::VectorXd StateSpace::labels_vector() const {
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v[i] = labels_[static_cast<std::size_t>(i)];
  return v;
}

Eigen::VectorXd EmpiricalDistribution::pmf() const {
  Eigen::VectorXd p(static_cast<int>(counts.size()));
  for (int i = 0; i < p.size(); ++i)
    p[i] = static_cast<double>(counts[static_cast<std::size_t>(i)]) / n;
  return p;
}

std::int64_t EmpiricalSpace::count_atoms(int n, int num_states) {
  // C(n + k - 1, k - 1) with overflow watch.
  std::int64_t result = 1;
  int k = num_states - 1;
  for (int i = 1; i <= k; ++i) {
    // result *= (n + i); result /= i — keep exact by dividing as we go.
    if (result > (std::int64_t{1} << 62) / (n + i)) return -1;
    result = result * (n + i) / i;
  }
  return result;
}

EmpiricalSpace::EmpiricalSpace(StateSpace states, int n, std::int64_t cap)
    : states_(std::move(states)), n_(n) {
  if (n < 1) throw ConfigError("population size must be >= 1");
  std::int64_t total = count_atoms(n, states_.size());
  if (total < 0 || total > cap)
    throw ConfigError("state space too large: |M(n)| exceeds the cap of " +
                      std::to_string(cap) +
                      "; use Monte-Carlo kernel estimation instead");
  atoms_.reserve(static_cast<std::size_t>(total));

  // Descending lexicographic enumeration of the compositions of n.
  std::vector<int> current(static_cast<std::size_t>(states_.size()), 0);
  auto recurse = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == states_.size() - 1) {
      current[static_cast<std::size_t>(pos)] = remaining;
      atoms_.push_back(EmpiricalDistribution{current, n_});
      return;
    }
    for (int c = remaining; c >= 0; --c) {
      current[static_cast<std::size_t>(pos)] = c;
      self(self, pos + 1, remaining - c);
    }
  };
  recurse(recurse, 0, n);

  pmfs_.reserve(atoms_.size());
  for (int i = 0; i < size(); ++i) {
    index_.emplace(atoms_[static_cast<std::size_t>(i)].counts, i);
    pmfs_.push_back(atoms_[static_cast<std::size_t>(i)].pmf());
  }
}

int EmpiricalSpace::index_of(const EmpiricalDistribution& m) const {
  if (m.n != n_) throw ConfigError("population size mismatch");
  return index_of_counts(m.counts);
}

int EmpiricalSpace::index_of_counts(const std::vector<int>& counts) const {
  auto it = index_.find(counts);
  if (it == index_.end()) throw ConfigError("counts not in M(n)");
  return it->second;
}

int EmpiricalSpace::uniform_closest_atom() const {
  const double u = 1.0 / states_.size();
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < size(); ++i) {
    double d = (pmfs_[static_cast<std::size_t>(i)].array() - u).square().sum();
    if (d < best_d - 1e-15) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace netsched
