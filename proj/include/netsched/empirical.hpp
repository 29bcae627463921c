#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

namespace netsched {

// Finite set of real-valued node states. The label order is canonical: every
// count vector, kernel row and table column downstream is indexed by it.
class StateSpace {
 public:
  explicit StateSpace(std::vector<double> labels);

  static StateSpace integer_range(int lo, int hi);

  int size() const { return static_cast<int>(labels_.size()); }
  double label(int i) const { return labels_.at(static_cast<std::size_t>(i)); }
  const std::vector<double>& labels() const { return labels_; }

  // Exact-match lookup; throws if the value is not a member.
  int index_of(double label) const;
  bool contains(double label) const;

  Eigen::VectorXd labels_vector() const;

 private:
  std::vector<double> labels_;
  std::map<double, int> index_;
};

// Integer state counts over a StateSpace, for a population of n nodes.
struct EmpiricalDistribution {
  std::vector<int> counts;
  int n = 0;

  Eigen::VectorXd pmf() const;
  bool operator==(const EmpiricalDistribution& other) const = default;
};

// The enumerated set M(n) of empirical distributions, in canonical order:
// lexicographically decreasing count vectors. For n=1 this makes atom i the
// point mass on state i, so the M(1) <-> S identification is the identity.
class EmpiricalSpace {
 public:
  EmpiricalSpace(StateSpace states, int n,
                 std::int64_t cap = 10'000'000);

  // C(n+|S|-1, |S|-1); returns -1 on overflow.
  static std::int64_t count_atoms(int n, int num_states);

  const StateSpace& states() const { return states_; }
  int population() const { return n_; }
  int size() const { return static_cast<int>(atoms_.size()); }

  const EmpiricalDistribution& at(int index) const {
    return atoms_.at(static_cast<std::size_t>(index));
  }
  const Eigen::VectorXd& pmf(int index) const {
    return pmfs_.at(static_cast<std::size_t>(index));
  }
  int index_of(const EmpiricalDistribution& m) const;
  int index_of_counts(const std::vector<int>& counts) const;

  // Atom minimizing the Euclidean distance to the uniform pmf; ties resolve
  // to the lowest canonical index.
  int uniform_closest_atom() const;

 private:
  StateSpace states_;
  int n_;
  std::vector<EmpiricalDistribution> atoms_;
  std::vector<Eigen::VectorXd> pmfs_;
  std::map<std::vector<int>, int> index_;
};

}  // namespace netsched
