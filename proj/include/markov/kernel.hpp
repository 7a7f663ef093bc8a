#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "markov/errors.hpp"
#include "markov/graph.hpp"

namespace markov {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Validation tolerance for mass balance of inputs (row sums, vector sums).
inline constexpr double kStochasticTol = 1e-12;
/// Tolerance for derived quantities (stationarity residuals, marginals).
inline constexpr double kDerivedTol = 1e-10;

/// A finite, ordered set of labelled states.  Shared immutably between
/// distributions and kernels; equality is by label sequence.
class StateSpace {
 public:
  static std::shared_ptr<const StateSpace> make(std::vector<std::string> labels) {
    if (labels.empty()) throw ValidationError("state space must be nonempty");
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (std::size_t j = i + 1; j < labels.size(); ++j)
        if (labels[i] == labels[j])
          throw ValidationError("duplicate state label: " + labels[i]);
    return std::shared_ptr<const StateSpace>(new StateSpace(std::move(labels)));
  }

  /// n anonymous states labelled s0, s1, ...
  static std::shared_ptr<const StateSpace> indexed(int n) {
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels.push_back("s" + std::to_string(i));
    return make(std::move(labels));
  }

  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(int i) const { return labels_.at(static_cast<std::size_t>(i)); }

  /// Index of a label, or -1 if absent.
  int index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] == label) return static_cast<int>(i);
    return -1;
  }

  bool operator==(const StateSpace& other) const { return labels_ == other.labels_; }

 private:
  explicit StateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {}
  std::vector<std::string> labels_;
};

using SpacePtr = std::shared_ptr<const StateSpace>;

inline bool same_space(const SpacePtr& a, const SpacePtr& b) {
  return a == b || (a && b && *a == *b);
}

inline void require_same_space(const SpacePtr& a, const SpacePtr& b,
                               const char* what) {
  if (!same_space(a, b))
    throw SpaceMismatch(std::string(what) + ": objects live on different state spaces");
}

/// A probability distribution over a state space.  Entries are nonnegative
/// and sum to one within kStochasticTol; inputs violating this are rejected,
/// never renormalized.
class Dist {
 public:
  Dist(SpacePtr space, Vec p) : space_(std::move(space)), p_(std::move(p)) {
    if (!space_) throw ValidationError("Dist: null state space");
    if (p_.size() != space_->size())
      throw ValidationError("Dist: length does not match state space size");
    for (int i = 0; i < p_.size(); ++i)
      if (!(p_(i) >= 0.0))
        throw ValidationError("Dist: negative or non-finite mass at state " +
                              space_->label(i));
    if (std::abs(p_.sum() - 1.0) > kStochasticTol) {
      std::ostringstream os;
      os << "Dist: mass sums to " << p_.sum() << ", not 1";
      throw ValidationError(os.str());
    }
  }

  /// Point mass at state x.
  static Dist point(SpacePtr space, int x) {
    Vec p = Vec::Zero(space->size());
    p(x) = 1.0;
    return Dist(std::move(space), std::move(p));
  }

  static Dist uniform(SpacePtr space) {
    const int n = space->size();
    return Dist(std::move(space), Vec::Constant(n, 1.0 / n));
  }

  const SpacePtr& space() const { return space_; }
  const Vec& p() const { return p_; }
  int size() const { return static_cast<int>(p_.size()); }
  double operator()(int i) const { return p_(i); }

 private:
  SpacePtr space_;
  Vec p_;
};

/// A Markov transition on a finite state space: a row-stochastic matrix,
/// row i being the next-state distribution out of state i.
class Kernel {
 public:
  Kernel(SpacePtr space, Mat T, double tol = kStochasticTol)
      : space_(std::move(space)), T_(std::move(T)) {
    if (!space_) throw ValidationError("Kernel: null state space");
    const int n = space_->size();
    if (T_.rows() != n || T_.cols() != n)
      throw ValidationError("Kernel: matrix shape does not match state space");
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        if (!(T_(i, j) >= 0.0))
          throw ValidationError("Kernel: negative or non-finite entry in row " +
                                space_->label(i));
      if (std::abs(T_.row(i).sum() - 1.0) > tol) {
        std::ostringstream os;
        os << "Kernel: row " << space_->label(i) << " sums to " << T_.row(i).sum()
           << ", not 1";
        throw ValidationError(os.str());
      }
    }
  }

  const SpacePtr& space() const { return space_; }
  const Mat& T() const { return T_; }
  int size() const { return space_->size(); }

  /// Next-state distribution out of state x (row x as a Dist; the row is
  /// renormalized by its own sum to absorb input tolerance).
  Dist row_dist(int x) const {
    Vec r = T_.row(x).transpose();
    r /= r.sum();
    return Dist(space_, std::move(r));
  }

 private:
  SpacePtr space_;
  Mat T_;
};

/// One application of the transition: p'_j = sum_i p_i T_ij.
inline Dist step(const Kernel& k, const Dist& rho) {
  require_same_space(k.space(), rho.space(), "step");
  Vec p = (rho.p().transpose() * k.T()).transpose();
  // Mass is preserved up to rounding; rescale by the total to keep repeated
  // application within validation tolerance.
  p /= p.sum();
  return Dist(k.space(), std::move(p));
}

/// N repeated applications; N = 0 returns rho unchanged.
inline Dist n_step(const Kernel& k, const Dist& rho, long n) {
  require_same_space(k.space(), rho.space(), "n_step");
  if (n < 0) throw ValidationError("n_step: negative step count");
  Vec p = rho.p();
  for (long i = 0; i < n; ++i) {
    p = (p.transpose() * k.T()).transpose();
    p /= p.sum();
  }
  return Dist(k.space(), std::move(p));
}

namespace detail {

/// Inverse-CDF draw from a probability row given u in [0, 1).
template <typename Row>
inline int sample_index(const Row& row, double u) {
  const int n = static_cast<int>(row.size());
  double c = 0.0;
  int last_pos = 0;
  for (int j = 0; j < n; ++j) {
    const double w = row(j);
    if (w > 0.0) last_pos = j;
    c += w;
    if (u < c) return j;
  }
  return last_pos;  // u fell into the rounding slack at the top
}

/// Stationary vector of an irreducible class, solved as the least-squares
/// solution of the full rank-(m) system [(T_C^t - I); 1^t] x = [0; 1].
inline Vec class_stationary(const Mat& T, const std::vector<int>& members) {
  const int m = static_cast<int>(members.size());
  Mat sub(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) sub(a, b) = T(members[a], members[b]);
  Mat A(m + 1, m);
  A.topRows(m) = sub.transpose() - Mat::Identity(m, m);
  A.bottomRows(1).setOnes();
  Vec rhs = Vec::Zero(m + 1);
  rhs(m) = 1.0;
  Vec x = A.colPivHouseholderQr().solve(rhs);
  for (int a = 0; a < m; ++a) {
    if (x(a) < -kDerivedTol) throw Error("stationary solve produced negative mass");
    if (x(a) < 0.0) x(a) = 0.0;
  }
  x /= x.sum();
  return x;
}

}  // namespace detail

/// Result of the invariant-distribution solve.  `unique` holds exactly when
/// the support digraph has a single closed communicating class; otherwise
/// `basis` carries one stationary distribution per closed class (the extreme
/// points of the invariant simplex) and `dist` is empty.
struct StationaryResult {
  bool unique = false;
  std::vector<Dist> basis;  // size 1 when unique
  const Dist& dist() const { return basis.front(); }
};

inline StationaryResult solve_stationary(const Kernel& k) {
  const auto adj = graph::support_digraph(k.T());
  const auto classes = graph::closed_classes(adj);
  StationaryResult out;
  out.unique = classes.size() == 1;
  const int n = k.size();
  for (const auto& members : classes) {
    Vec local = detail::class_stationary(k.T(), members);
    Vec full = Vec::Zero(n);
    for (std::size_t a = 0; a < members.size(); ++a)
      full(members[a]) = local(static_cast<int>(a));
    Dist pi(k.space(), std::move(full));
    double resid = (step(k, pi).p() - pi.p()).lpNorm<1>();
    if (resid > kDerivedTol) throw Error("stationary solve residual too large");
    out.basis.push_back(std::move(pi));
  }
  return out;
}

/// The unique invariant distribution.  Throws NotUnique (carrying the basis
/// of the invariant simplex) when the kernel has several.
inline Dist stationary(const Kernel& k) {
  StationaryResult r = solve_stationary(k);
  if (!r.unique) {
    std::vector<std::vector<double>> basis;
    for (const auto& d : r.basis)
      basis.emplace_back(d.p().data(), d.p().data() + d.p().size());
    throw NotUnique("invariant distribution is not unique (" +
                        std::to_string(r.basis.size()) + " closed classes)",
                    std::move(basis));
  }
  return r.basis.front();
}

/// Per-row split of a kernel into a diagonal "stay" part and an off-diagonal
/// part, T_i = lam_i * continuous_i + (1 - lam_i) * delta_i with
/// lam_i = 1 - T_ii.  Rows with T_ii = 1 use lam_i = 1 and continuous row
/// delta_i so the reconstruction still holds.
struct MixtureDecomposition {
  SpacePtr space;
  Vec lam;             // per-state weight of the off-diagonal part, in (0, 1]
  Mat continuous_part; // sub-stochastic, zero diagonal except degenerate rows
  Mat singular_part;   // identity rows
};

inline MixtureDecomposition decompose_mixture(const Kernel& k) {
  const int n = k.size();
  MixtureDecomposition d;
  d.space = k.space();
  d.lam = Vec::Zero(n);
  d.continuous_part = Mat::Zero(n, n);
  d.singular_part = Mat::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    const double diag = k.T()(i, i);
    if (diag >= 1.0) {
      d.lam(i) = 1.0;
      d.continuous_part(i, i) = 1.0;
      continue;
    }
    d.lam(i) = 1.0 - diag;
    for (int j = 0; j < n; ++j)
      if (j != i) d.continuous_part(i, j) = k.T()(i, j) / (1.0 - diag);
  }
  return d;
}

}  // namespace markov
