#include "netsched/estimators.hpp"

#include "netsched/errors.hpp"

namespace netsched {

int map_estimate(const Eigen::VectorXd& row) {
  int best = 0;
  double best_p = row[0];
  for (int i = 1; i < row.size(); ++i) {
    if (row[i] > best_p) {
      best_p = row[i];
      best = i;
    }
  }
  return best;
}

namespace {

class MapEstimator final : public Estimator {
 public:
  explicit MapEstimator(const EmpiricalSpace& space) : space_(space) {}
  Estimate estimate(const Eigen::VectorXd& row, int, int) const override {
    int atom = map_estimate(row);
    return {atom, space_.pmf(atom)};
  }
  std::string name() const override { return "map"; }

 private:
  const EmpiricalSpace& space_;
};

class MeanEstimator final : public Estimator {
 public:
  explicit MeanEstimator(const EmpiricalSpace& space) : space_(space) {}
  Estimate estimate(const Eigen::VectorXd& row, int, int) const override {
    Eigen::VectorXd mean =
        Eigen::VectorXd::Zero(space_.states().size());
    for (int m = 0; m < row.size(); ++m)
      if (row[m] > 0.0) mean += row[m] * space_.pmf(m);
    return {-1, std::move(mean)};
  }
  std::string name() const override { return "mean"; }

 private:
  const EmpiricalSpace& space_;
};

// Hold the last credible data: the estimate is x itself, for any y.
class IdentityEstimator final : public Estimator {
 public:
  explicit IdentityEstimator(const EmpiricalSpace& space) : space_(space) {}
  Estimate estimate(const Eigen::VectorXd&, int x, int) const override {
    return {x, space_.pmf(x)};
  }
  std::string name() const override { return "identity"; }

 private:
  const EmpiricalSpace& space_;
};

class InfinitePopulationEstimator final : public Estimator {
 public:
  InfinitePopulationEstimator(const EmpiricalSpace& space,
                              MeanFieldOperator op)
      : space_(space), op_(std::move(op)) {}
  Estimate estimate(const Eigen::VectorXd&, int x, int y) const override {
    // y mean-field steps from the last credible data.
    return {-1, infinite_population_estimate(space_.pmf(x), y + 1, op_)};
  }
  std::string name() const override { return "infinite_population"; }

 private:
  const EmpiricalSpace& space_;
  MeanFieldOperator op_;
};

}  // namespace

std::unique_ptr<Estimator> make_map_estimator(const EmpiricalSpace& space) {
  return std::make_unique<MapEstimator>(space);
}
std::unique_ptr<Estimator> make_mean_estimator(const EmpiricalSpace& space) {
  return std::make_unique<MeanEstimator>(space);
}
std::unique_ptr<Estimator> make_identity_estimator(
    const EmpiricalSpace& space) {
  return std::make_unique<IdentityEstimator>(space);
}
std::unique_ptr<Estimator> make_infinite_population_estimator(
    const EmpiricalSpace& space, MeanFieldOperator op) {
  return std::make_unique<InfinitePopulationEstimator>(space, std::move(op));
}

std::unique_ptr<Estimator> make_estimator(const std::string& name,
                                          const EmpiricalSpace& space,
                                          const LocalKernel* local) {
  if (name == "map") return make_map_estimator(space);
  if (name == "mean") return make_mean_estimator(space);
  if (name == "identity") return make_identity_estimator(space);
  if (name == "infinite_population") {
    if (!local)
      throw ConfigError("infinite_population estimator needs the local kernel");
    if (!local->is_decoupled())
      throw ConfigError(
          "infinite_population estimator supports decoupled dynamics only");
    return make_infinite_population_estimator(
        space, MeanFieldOperator::decoupled(local->matrix()));
  }
  throw ConfigError("unknown estimator: " + name);
}

}  // namespace netsched
