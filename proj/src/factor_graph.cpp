#include "legfg/factor_graph.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseQR>

namespace legfg {

namespace {

const char* kindName(VariableKind kind) {
  switch (kind) {
    case VariableKind::BasePose: return "pose";
    case VariableKind::BaseVelocity: return "velocity";
    case VariableKind::Bias: return "bias";
    case VariableKind::LinkPose: return "link";
    case VariableKind::ContactPoint: return "landmark";
  }
  return "?";
}

// Below this many scalar unknowns the step is computed by dense QR.
constexpr int kDenseThreshold = 500;
constexpr double kRankTolerance = 1e-10;

}  // namespace

std::string toString(const Key& key) {
  std::ostringstream os;
  os << kindName(key.kind) << "(" << key.time;
  if (key.kind == VariableKind::LinkPose) os << ",leg=" << key.leg << ",depth=" << key.depth;
  os << ")";
  return os.str();
}

int tangentDimension(const Variable& v) {
  return std::visit(
      [](const auto& x) -> int {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Pose>) {
          return 6;
        } else {
          return static_cast<int>(T::RowsAtCompileTime);
        }
      },
      v);
}

Variable retractVariable(const Variable& v, const Eigen::Ref<const Eigen::VectorXd>& delta) {
  return std::visit(
      [&delta](const auto& x) -> Variable {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Pose>) {
          return x.retract(delta.head<6>());
        } else {
          return T(x + delta);
        }
      },
      v);
}

// ---------------------------------------------------------------------------
// Values

void Values::insert(const Key& key, Variable value) {
  if (!map_.emplace(key, std::move(value)).second) {
    throw ValidationError("duplicate variable key " + toString(key));
  }
}

void Values::update(const Key& key, Variable value) {
  auto it = map_.find(key);
  if (it == map_.end()) throw ValidationError("update of missing key " + toString(key));
  it->second = std::move(value);
}

const Variable& Values::at(const Key& key) const {
  auto it = map_.find(key);
  if (it == map_.end()) throw ValidationError("missing variable " + toString(key));
  return it->second;
}

const Pose& Values::pose(const Key& key) const {
  const auto* p = std::get_if<Pose>(&at(key));
  if (!p) throw ValidationError("variable " + toString(key) + " is not a pose");
  return *p;
}

const Vector3& Values::vector3(const Key& key) const {
  const auto* p = std::get_if<Vector3>(&at(key));
  if (!p) throw ValidationError("variable " + toString(key) + " is not a 3-vector");
  return *p;
}

const Vector6& Values::vector6(const Key& key) const {
  const auto* p = std::get_if<Vector6>(&at(key));
  if (!p) throw ValidationError("variable " + toString(key) + " is not a 6-vector");
  return *p;
}

int Values::dimension() const {
  int n = 0;
  for (const auto& [key, v] : map_) n += tangentDimension(v);
  return n;
}

// ---------------------------------------------------------------------------
// Ordering

Ordering::Ordering(const Values& values) {
  keys_.reserve(values.size());
  for (const auto& [key, v] : values) {
    const int d = tangentDimension(v);
    slots_.emplace(key, std::make_pair(total_, d));
    keys_.push_back(key);
    total_ += d;
  }
}

int Ordering::offset(const Key& key) const {
  auto it = slots_.find(key);
  if (it == slots_.end()) throw ValidationError("key not in ordering: " + toString(key));
  return it->second.first;
}

int Ordering::dimension(const Key& key) const {
  auto it = slots_.find(key);
  if (it == slots_.end()) throw ValidationError("key not in ordering: " + toString(key));
  return it->second.second;
}

Values Ordering::retract(const Values& values, const Eigen::VectorXd& delta) const {
  Values out;
  for (const auto& [key, v] : values) {
    const auto& [off, dim] = slots_.at(key);
    out.insert(key, retractVariable(v, delta.segment(off, dim)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Noise

GaussianNoise GaussianNoise::FromCovariance(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
    throw ValidationError("covariance must be a non-empty square matrix");
  }
  const double asym = (covariance - covariance.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-9 * std::max(1.0, covariance.cwiseAbs().maxCoeff()))) {
    throw ValidationError("covariance is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (covariance + covariance.transpose()));
  if (llt.info() != Eigen::Success) {
    throw ValidationError("covariance is not positive definite");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  if ((L.diagonal().array() <= 0.0).any()) {
    throw ValidationError("covariance is not positive definite");
  }
  GaussianNoise n;
  n.sqrt_information_ = L.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(L.rows(), L.cols()));
  return n;
}

GaussianNoise GaussianNoise::FromSigmas(const Eigen::VectorXd& sigmas) {
  if (sigmas.size() == 0 || (sigmas.array() <= 0.0).any() || !sigmas.allFinite()) {
    throw ValidationError("noise sigmas must be positive and finite");
  }
  GaussianNoise n;
  n.sqrt_information_ = sigmas.cwiseInverse().asDiagonal();
  return n;
}

GaussianNoise GaussianNoise::Isotropic(int dim, double sigma) {
  return FromSigmas(Eigen::VectorXd::Constant(dim, sigma));
}

Eigen::MatrixXd GaussianNoise::covariance() const {
  const Eigen::MatrixXd info = sqrt_information_.transpose() * sqrt_information_;
  return info.inverse();
}

// ---------------------------------------------------------------------------
// Factor

Factor::Factor(std::vector<Key> keys, GaussianNoise noise)
    : keys_(std::move(keys)), noise_(std::move(noise)) {}

std::vector<Eigen::MatrixXd> Factor::jacobians(const Values& values) const {
  return numericalJacobians(values, kNumericalJacobianStep);
}

std::vector<Eigen::MatrixXd> Factor::numericalJacobians(const Values& values, double step) const {
  std::vector<Eigen::MatrixXd> H;
  H.reserve(keys_.size());
  Values work = values;
  for (const Key& key : keys_) {
    const Variable base = values.at(key);
    const int d = tangentDimension(base);
    Eigen::MatrixXd J(dim(), d);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(d);
    for (int c = 0; c < d; ++c) {
      delta(c) = step;
      work.update(key, retractVariable(base, delta));
      const Eigen::VectorXd plus = error(work);
      delta(c) = -step;
      work.update(key, retractVariable(base, delta));
      const Eigen::VectorXd minus = error(work);
      delta(c) = 0.0;
      J.col(c) = (plus - minus) / (2.0 * step);
    }
    work.update(key, base);
    H.push_back(std::move(J));
  }
  return H;
}

double Factor::squaredMahalanobis(const Values& values) const {
  return noise_.whiten(error(values)).squaredNorm();
}

// ---------------------------------------------------------------------------
// Graph

void FactorGraph::add(FactorPtr factor) {
  if (!factor) throw ValidationError("null factor");
  factors_.push_back(std::move(factor));
}

double FactorGraph::objective(const Values& values) const {
  double total = 0.0;
  for (const auto& f : factors_) total += f->squaredMahalanobis(values);
  return total;
}

void FactorGraph::checkKeys(const Values& values) const {
  for (const auto& f : factors_) {
    for (const Key& k : f->keys()) {
      if (!values.contains(k)) {
        throw ValidationError(f->name() + " references missing variable " + toString(k));
      }
    }
  }
}

LinearSystem linearize(const FactorGraph& graph, const Values& values) {
  graph.checkKeys(values);
  LinearSystem sys{Ordering(values), {}, {}, {}};
  int rows = 0;
  sys.block_rows.reserve(graph.size());
  for (const auto& f : graph) {
    sys.block_rows.push_back(rows);
    rows += f->dim();
  }
  sys.residual.resize(rows);

  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const Factor& f = *graph[i];
    const int r0 = sys.block_rows[i];
    const auto& W = f.noise().sqrtInformation();
    sys.residual.segment(r0, f.dim()) = W * f.error(values);
    const auto H = f.jacobians(values);
    for (std::size_t k = 0; k < f.keys().size(); ++k) {
      const int c0 = sys.ordering.offset(f.keys()[k]);
      const Eigen::MatrixXd WH = W * H[k];
      for (int c = 0; c < WH.cols(); ++c) {
        for (int r = 0; r < WH.rows(); ++r) {
          if (WH(r, c) != 0.0) triplets.emplace_back(r0 + r, c0 + c, WH(r, c));
        }
      }
    }
  }
  sys.jacobian.resize(rows, sys.ordering.totalDimension());
  sys.jacobian.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

Eigen::VectorXd solveNormalEquations(const LinearSystem& system, double lambda) {
  if (!(lambda >= 0.0)) throw ValidationError("damping must be non-negative");
  const int n = system.ordering.totalDimension();
  if (n == 0) return Eigen::VectorXd();
  const Eigen::SparseMatrix<double>& J = system.jacobian;

  if (n <= kDenseThreshold) {
    const Eigen::MatrixXd Jd = Eigen::MatrixXd(J);
    const int m = static_cast<int>(Jd.rows());
    Eigen::MatrixXd A(m + (lambda > 0.0 ? n : 0), n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(A.rows());
    A.topRows(m) = Jd;
    b.head(m) = -system.residual;
    if (lambda > 0.0) {
      const Eigen::VectorXd d = Jd.colwise().squaredNorm().transpose();
      A.bottomRows(n) = (lambda * d).cwiseSqrt().asDiagonal();
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(kRankTolerance);
    if (qr.rank() < n) {
      const int nullity = n - static_cast<int>(qr.rank());
      throw GaugeDeficiencyError(nullity, "linear system is rank deficient (nullspace dimension " +
                                              std::to_string(nullity) + ")");
    }
    return qr.solve(b);
  }

  Eigen::SparseMatrix<double> H = J.transpose() * J;
  const Eigen::VectorXd g = J.transpose() * system.residual;
  if (lambda > 0.0) {
    for (int i = 0; i < n; ++i) H.coeffRef(i, i) *= (1.0 + lambda);
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
  bool deficient = ldlt.info() != Eigen::Success;
  if (!deficient) {
    const Eigen::VectorXd D = ldlt.vectorD();
    const double dmax = D.cwiseAbs().maxCoeff();
    for (int i = 0; i < D.size() && !deficient; ++i) deficient = !(D(i) > kRankTolerance * dmax);
  }
  if (deficient) {
    // Pivots alone do not give the nullity reliably; a rank-revealing QR of the
    // damped Jacobian does.
    Eigen::SparseMatrix<double> A = J;
    if (lambda > 0.0) {
      Eigen::SparseMatrix<double> damping(n, n);
      std::vector<Eigen::Triplet<double>> diag;
      for (int i = 0; i < n; ++i) diag.emplace_back(i, i, std::sqrt(lambda * H.coeff(i, i) / (1.0 + lambda)));
      damping.setFromTriplets(diag.begin(), diag.end());
      Eigen::SparseMatrix<double> stacked(J.rows() + n, n);
      stacked.reserve(J.nonZeros() + n);
      std::vector<Eigen::Triplet<double>> trips;
      for (int c = 0; c < J.outerSize(); ++c) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(J, c); it; ++it) trips.emplace_back(it.row(), c, it.value());
      }
      for (const auto& t : diag) trips.emplace_back(J.rows() + t.row(), t.col(), t.value());
      stacked.setFromTriplets(trips.begin(), trips.end());
      A = stacked;
    }
    A.makeCompressed();
    Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> qr;
    qr.setPivotThreshold(kRankTolerance * std::sqrt(H.diagonal().maxCoeff()));
    qr.compute(A);
    const int nullity = n - static_cast<int>(qr.rank());
    throw GaugeDeficiencyError(nullity, "linear system is rank deficient (nullspace dimension " +
                                            std::to_string(nullity) + ")");
  }
  Eigen::VectorXd delta = ldlt.solve(-g);
  if (!delta.allFinite()) throw SolverError("non-finite solver step");
  return delta;
}

Eigen::VectorXd jacobianSingularValues(const LinearSystem& system) {
  const Eigen::MatrixXd Jd = Eigen::MatrixXd(system.jacobian);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Jd);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(Jd.cols());
  s.head(svd.singularValues().size()) = svd.singularValues();
  return s;
}

int numericalNullspaceDimension(const LinearSystem& system, double rel_tol) {
  const Eigen::VectorXd s = jacobianSingularValues(system);
  if (s.size() == 0) return 0;
  const double smax = s.maxCoeff();
  int count = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) < rel_tol * smax) ++count;
  }
  return count;
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt

std::string toString(LmStatus status) {
  switch (status) {
    case LmStatus::Converged: return "converged";
    case LmStatus::MaxIterations: return "max_iterations";
    case LmStatus::Diverged: return "diverged";
  }
  return "?";
}

std::string ConvergenceReport::toText() const {
  std::ostringstream os;
  os.precision(17);
  for (const auto& it : history) {
    os << it.iteration << ' ' << it.lambda << ' ' << it.objective << ' ' << (it.accepted ? 1 : 0)
       << '\n';
  }
  return os.str();
}

LmResult optimize(const FactorGraph& graph, const Values& initial, const LmConfig& config) {
  LmResult result{initial, {}};
  ConvergenceReport& report = result.report;

  LinearSystem sys = linearize(graph, result.values);
  double objective = sys.objective();
  report.initial_objective = objective;
  report.final_objective = objective;
  double lambda = config.lambda_initial;

  if (objective == 0.0) {
    report.status = LmStatus::Converged;
    return result;
  }

  report.status = LmStatus::MaxIterations;
  while (report.iterations < config.max_iterations) {
    ++report.iterations;
    Eigen::VectorXd delta;
    bool solved = true;
    try {
      delta = solveNormalEquations(sys, lambda);
    } catch (const SolverError&) {
      solved = false;
    }

    if (solved && delta.norm() < config.xtol) {
      report.history.push_back({report.iterations, lambda, objective, false});
      report.status = LmStatus::Converged;
      break;
    }

    double trial = std::numeric_limits<double>::infinity();
    Values candidate;
    if (solved) {
      candidate = sys.ordering.retract(result.values, delta);
      trial = graph.objective(candidate);
    }

    if (std::isfinite(trial) && trial <= objective) {
      report.history.push_back({report.iterations, lambda, trial, true});
      ++report.accepted_steps;
      const double decrease = objective - trial;
      result.values = std::move(candidate);
      objective = trial;
      lambda = std::max(lambda / config.lambda_factor, 1e-20);
      if (objective == 0.0 || decrease < config.rtol * (objective + decrease)) {
        report.status = LmStatus::Converged;
        break;
      }
      sys = linearize(graph, result.values);
    } else {
      report.history.push_back({report.iterations, lambda, trial, false});
      lambda *= config.lambda_factor;
      if (lambda > config.lambda_max) {
        report.status = LmStatus::Diverged;
        break;
      }
    }
  }
  report.final_objective = objective;
  return result;
}

}  // namespace legfg
