#pragma once

#include <compare>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "legfg/errors.hpp"
#include "legfg/lie.hpp"

namespace legfg {

enum class VariableKind : std::uint8_t {
  BasePose = 0,
  BaseVelocity = 1,
  Bias = 2,
  LinkPose = 3,
  ContactPoint = 4,
};

/// Identifies one estimation variable. The defaulted ordering (kind, time,
/// leg, depth) fixes the column layout of every linear system.
struct Key {
  VariableKind kind = VariableKind::BasePose;
  int time = 0;
  int leg = 0;
  int depth = 0;

  auto operator<=>(const Key&) const = default;
};

inline Key basePoseKey(int k) { return {VariableKind::BasePose, k, 0, 0}; }
inline Key velocityKey(int k) { return {VariableKind::BaseVelocity, k, 0, 0}; }
inline Key biasKey(int k = 0) { return {VariableKind::Bias, k, 0, 0}; }
/// Child link of the depth-th joint (1-based) of leg `leg` at keyframe k.
inline Key linkKey(int k, int leg, int depth) { return {VariableKind::LinkPose, k, leg, depth}; }
inline Key landmarkKey(int m) { return {VariableKind::ContactPoint, m, 0, 0}; }

std::string toString(const Key& key);

/// Manifold element stored for a key: a pose, a 3-vector (velocity, point
/// landmark) or a 6-vector (gyro bias, accel bias).
using Variable = std::variant<Pose, Vector3, Vector6>;

int tangentDimension(const Variable& v);
Variable retractVariable(const Variable& v, const Eigen::Ref<const Eigen::VectorXd>& delta);

class Values {
 public:
  using Map = std::map<Key, Variable>;

  /// Throws ValidationError on duplicate keys.
  void insert(const Key& key, Variable value);
  void update(const Key& key, Variable value);
  void insertOrAssign(const Key& key, Variable value) { map_.insert_or_assign(key, std::move(value)); }

  bool contains(const Key& key) const { return map_.count(key) != 0; }
  const Variable& at(const Key& key) const;
  const Pose& pose(const Key& key) const;
  const Vector3& vector3(const Key& key) const;
  const Vector6& vector6(const Key& key) const;

  std::size_t size() const { return map_.size(); }
  Map::const_iterator begin() const { return map_.begin(); }
  Map::const_iterator end() const { return map_.end(); }

  /// Total tangent dimension.
  int dimension() const;

 private:
  Map map_;
};

/// Column layout: every key of a Values, in key order, with its offset.
class Ordering {
 public:
  explicit Ordering(const Values& values);

  int offset(const Key& key) const;
  int dimension(const Key& key) const;
  int totalDimension() const { return total_; }
  const std::vector<Key>& keys() const { return keys_; }

  Values retract(const Values& values, const Eigen::VectorXd& delta) const;

 private:
  std::map<Key, std::pair<int, int>> slots_;
  std::vector<Key> keys_;
  int total_ = 0;
};

/// Zero-mean Gaussian noise model stored as the inverse Cholesky factor of Σ.
class GaussianNoise {
 public:
  /// Throws ValidationError unless Σ is symmetric positive definite.
  static GaussianNoise FromCovariance(const Eigen::MatrixXd& covariance);
  static GaussianNoise FromSigmas(const Eigen::VectorXd& sigmas);
  static GaussianNoise Isotropic(int dim, double sigma);

  int dim() const { return static_cast<int>(sqrt_information_.rows()); }
  const Eigen::MatrixXd& sqrtInformation() const { return sqrt_information_; }
  Eigen::MatrixXd covariance() const;

  Eigen::VectorXd whiten(const Eigen::VectorXd& r) const { return sqrt_information_ * r; }
  Eigen::MatrixXd whiten(const Eigen::MatrixXd& H) const { return sqrt_information_ * H; }

 private:
  Eigen::MatrixXd sqrt_information_;
};

/// A probabilistic constraint over a fixed, ordered list of variables.
class Factor {
 public:
  Factor(std::vector<Key> keys, GaussianNoise noise);
  virtual ~Factor() = default;

  const std::vector<Key>& keys() const { return keys_; }
  const GaussianNoise& noise() const { return noise_; }
  int dim() const { return noise_.dim(); }

  /// Unwhitened residual.
  virtual Eigen::VectorXd error(const Values& values) const = 0;

  /// Unwhitened Jacobians, one block per key (rows = dim(), cols = tangent
  /// dimension of that key). The default implementation uses central
  /// differences on the tangent space.
  virtual std::vector<Eigen::MatrixXd> jacobians(const Values& values) const;
  virtual bool hasAnalyticJacobians() const { return false; }

  std::vector<Eigen::MatrixXd> numericalJacobians(const Values& values, double step) const;

  /// ‖r‖²_Σ.
  double squaredMahalanobis(const Values& values) const;

  virtual std::string name() const = 0;

 private:
  std::vector<Key> keys_;
  GaussianNoise noise_;
};

inline constexpr double kNumericalJacobianStep = 1e-7;

using FactorPtr = std::shared_ptr<const Factor>;

class FactorGraph {
 public:
  void add(FactorPtr factor);
  template <typename F, typename... Args>
  void emplace(Args&&... args) {
    add(std::make_shared<F>(std::forward<Args>(args)...));
  }

  std::size_t size() const { return factors_.size(); }
  const FactorPtr& operator[](std::size_t i) const { return factors_[i]; }
  std::vector<FactorPtr>::const_iterator begin() const { return factors_.begin(); }
  std::vector<FactorPtr>::const_iterator end() const { return factors_.end(); }

  /// Σ ‖r_i‖²_{Σ_i}.
  double objective(const Values& values) const;
  /// Throws ValidationError naming the first key that is referenced but absent.
  void checkKeys(const Values& values) const;

 private:
  std::vector<FactorPtr> factors_;
};

/// Whitened linearization of a graph about a Values.
struct LinearSystem {
  Ordering ordering;
  Eigen::SparseMatrix<double> jacobian;
  Eigen::VectorXd residual;
  std::vector<int> block_rows;  ///< first residual row of each factor

  double objective() const { return residual.squaredNorm(); }
  int blockCount() const { return static_cast<int>(block_rows.size()); }
};

LinearSystem linearize(const FactorGraph& graph, const Values& values);

/// Solves (JᵀJ + λ diag(JᵀJ)) δ = -Jᵀr. With λ = 0 a rank-deficient system
/// throws GaugeDeficiencyError carrying the numerical nullspace dimension.
Eigen::VectorXd solveNormalEquations(const LinearSystem& system, double lambda);

/// Singular values of the whitened Jacobian (dense SVD), descending.
Eigen::VectorXd jacobianSingularValues(const LinearSystem& system);
/// Count of singular values below rel_tol × the largest.
int numericalNullspaceDimension(const LinearSystem& system, double rel_tol);

struct LmConfig {
  double lambda_initial = 1e-4;
  double lambda_factor = 10.0;
  double lambda_max = 1e8;
  double rtol = 1e-9;
  double xtol = 1e-10;
  int max_iterations = 100;
};

enum class LmStatus { Converged, MaxIterations, Diverged };
std::string toString(LmStatus status);

struct LmIteration {
  int iteration = 0;
  double lambda = 0.0;
  double objective = 0.0;  ///< objective of the trial point
  bool accepted = false;
};

struct ConvergenceReport {
  LmStatus status = LmStatus::Converged;
  int iterations = 0;
  int accepted_steps = 0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  std::vector<LmIteration> history;

  /// One "iteration lambda objective accepted" line per trial step.
  std::string toText() const;
};

struct LmResult {
  Values values;
  ConvergenceReport report;
};

/// Levenberg-Marquardt with Marquardt diagonal scaling. Accepted steps never
/// increase the objective; on divergence the last accepted values are returned.
LmResult optimize(const FactorGraph& graph, const Values& initial, const LmConfig& config = {});

}  // namespace legfg
