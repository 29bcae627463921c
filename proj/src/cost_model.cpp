#include "netsched/cost_model.hpp"

#include <cmath>
#include <map>
#include <memory>

#include "netsched/errors.hpp"

namespace netsched {

CostModel::CostModel(std::string name, Fn fn, double c_max)
    : name_(std::move(name)), fn_(std::move(fn)), c_max_(c_max) {
  if (!(c_max_ >= 0.0)) throw ConfigError("c_max must be nonnegative");
}

double compute_c_max(const CostModel::Fn& fn, const EmpiricalSpace& space) {
  double best = 0.0;
  for (int m = 0; m < space.size(); ++m)
    for (int mh = 0; mh < space.size(); ++mh)
      for (int a = 0; a < 2; ++a)
        best = std::max(best, fn(space.pmf(m), space.pmf(mh), a));
  return best;
}

CostModel CostModel::weighted_abs(const StateSpace& states, double fee) {
  Eigen::VectorXd labels = states.labels_vector();
  Fn fn = [labels, fee](const Eigen::VectorXd& m, const Eigen::VectorXd& mhat,
                        int a) {
    double s = labels.dot(m);
    double shat = labels.dot(mhat);
    return std::abs(s) * std::abs(s - shat) + fee * a;
  };
  // Max over label pairs: |s| |s - s'| is extremal at point masses.
  double cmax = fee;
  for (int i = 0; i < states.size(); ++i)
    for (int j = 0; j < states.size(); ++j)
      cmax = std::max(cmax, std::abs(states.label(i)) *
                                std::abs(states.label(i) - states.label(j)) +
                                fee);
  return CostModel("weighted_abs", std::move(fn), cmax);
}

CostModel CostModel::kl_plus_fee(const EmpiricalSpace& space, double fee) {
  const double floor = 1.0 / (10.0 * space.population());
  Fn fn = [floor, fee](const Eigen::VectorXd& m, const Eigen::VectorXd& mhat,
                       int a) {
    Eigen::VectorXd mh = mhat;
    bool floored = false;
    for (int s = 0; s < m.size(); ++s)
      if (m[s] > 0.0 && mh[s] <= 0.0) {
        mh[s] = floor;
        floored = true;
      }
    if (floored) mh /= mh.sum();
    double kl = 0.0;
    for (int s = 0; s < m.size(); ++s)
      if (m[s] > 0.0) kl += m[s] * std::log(m[s] / mh[s]);
    return kl + fee * a;
  };
  double cmax = compute_c_max(fn, space);
  return CostModel("kl_plus_fee", std::move(fn), cmax);
}

CostModel CostModel::quadratic_fee(double fee) {
  Fn fn = [fee](const Eigen::VectorXd& m, const Eigen::VectorXd& mhat, int a) {
    return (m - mhat).squaredNorm() + fee * a;
  };
  // Squared distance between simplex points is at most 2.
  return CostModel("quadratic_fee", std::move(fn), 2.0 + fee);
}

CostModel CostModel::from_table(const EmpiricalSpace& space,
                                std::vector<double> table) {
  const std::size_t expected =
      static_cast<std::size_t>(space.size()) * space.size() * 2;
  if (table.size() != expected)
    throw ConfigError("cost table size must be |M|*|M|*2");
  double cmax = 0.0;
  for (double v : table) {
    if (v < 0.0) throw ConfigError("cost table entries must be nonnegative");
    cmax = std::max(cmax, v);
  }
  // Own a counts -> atom index map so the cost outlives the space object.
  auto index = std::make_shared<std::map<std::vector<int>, int>>();
  for (int i = 0; i < space.size(); ++i) index->emplace(space.at(i).counts, i);
  const int num = space.size();
  const int population = space.population();
  auto find_atom = [index, population](const Eigen::VectorXd& pmf) {
    std::vector<int> counts(static_cast<std::size_t>(pmf.size()));
    for (int s = 0; s < pmf.size(); ++s)
      counts[static_cast<std::size_t>(s)] =
          static_cast<int>(std::lround(pmf[s] * population));
    auto it = index->find(counts);
    if (it == index->end())
      throw ConfigError("table cost requires atom-valued estimates");
    return it->second;
  };
  Fn fn = [table = std::move(table), find_atom, num](
              const Eigen::VectorXd& m, const Eigen::VectorXd& mhat, int a) {
    int mi = find_atom(m);
    int mhi = find_atom(mhat);
    return table[(static_cast<std::size_t>(mi) * num + mhi) * 2 + a];
  };
  return CostModel("custom-table", std::move(fn), cmax);
}

double CostModel::table_lookup(const EmpiricalSpace& space, int m, int mhat,
                               int a) const {
  return fn_(space.pmf(m), space.pmf(mhat), a);
}

}  // namespace netsched
