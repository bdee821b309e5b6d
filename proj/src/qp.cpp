#include "mfgs/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfgs::qp {

namespace {

constexpr double kCertTol = 1e-10;
constexpr double kDropTol = 1e-12;

// Affine minimizer over the points indexed by S: solve the bordered Gram
// system [Q_SS 1; 1^T 0] [u; mu] = [0; 1].
bool affine_minimizer(const MatX& Q, const std::vector<int>& S, VecX& u) {
  const long k = static_cast<long>(S.size());
  MatX B(k + 1, k + 1);
  for (long i = 0; i < k; ++i)
    for (long j = 0; j < k; ++j) B(i, j) = Q(S[static_cast<size_t>(i)], S[static_cast<size_t>(j)]);
  B.row(k).setOnes();
  B.col(k).setOnes();
  B(k, k) = 0.0;
  VecX rhs = VecX::Zero(k + 1);
  rhs[k] = 1.0;
  Eigen::FullPivLU<MatX> lu(B);
  VecX sol = lu.solve(rhs);
  if (!sol.allFinite()) return false;
  if ((B * sol - rhs).norm() > 1e-8 * (1.0 + rhs.norm() + B.norm())) return false;
  u = sol.head(k);
  return true;
}

}  // namespace

double HullProblem::certificate() const {
  double cert = std::numeric_limits<double>::infinity();
  const double g2 = g_star.squaredNorm();
  for (long j = 0; j < G.cols(); ++j) cert = std::min(cert, g_star.dot(G.col(j)) - g2);
  return cert;
}

HullProblem min_norm_hull(const std::vector<VecX>& columns) {
  if (columns.empty()) throw std::invalid_argument("min_norm_hull: needs at least one column");
  const long N = columns.front().size();
  for (const VecX& c : columns) {
    if (c.size() != N)
      throw std::invalid_argument("min_norm_hull: columns must share a common length");
    if (!c.allFinite()) throw std::invalid_argument("min_norm_hull: non-finite column entries");
  }

  const long m_all = static_cast<long>(columns.size());
  MatX G(N, m_all);
  for (long j = 0; j < m_all; ++j) G.col(j) = columns[static_cast<size_t>(j)];

  // dedupe to protect the affine-independence bookkeeping
  std::vector<int> uniq;  // original index of each distinct column
  for (long j = 0; j < m_all; ++j) {
    bool seen = false;
    for (int u : uniq) {
      if ((G.col(j) - G.col(u)).norm() <= 1e-14 * std::max(1.0, G.col(u).norm())) {
        seen = true;
        break;
      }
    }
    if (!seen) uniq.push_back(static_cast<int>(j));
  }
  const long m = static_cast<long>(uniq.size());

  MatX P(N, m);
  for (long j = 0; j < m; ++j) P.col(j) = G.col(uniq[static_cast<size_t>(j)]);
  const MatX Q = P.transpose() * P;

  // Wolfe: corral S of affinely independent points, weights w over S.
  long j0 = 0;
  for (long j = 1; j < m; ++j)
    if (Q(j, j) < Q(j0, j0)) j0 = j;
  std::vector<int> S{static_cast<int>(j0)};
  VecX w = VecX::Ones(1);
  VecX x = P.col(j0);

  const int max_major = 32 * static_cast<int>(m) + 64;
  for (int major = 0; major < max_major; ++major) {
    const double x2 = x.squaredNorm();
    // most-violating column
    long jstar = 0;
    double best = std::numeric_limits<double>::infinity();
    for (long j = 0; j < m; ++j) {
      const double d = x.dot(P.col(j));
      if (d < best) {
        best = d;
        jstar = j;
      }
    }
    if (best >= x2 - kCertTol * (1.0 + x2)) break;  // optimal
    if (std::find(S.begin(), S.end(), static_cast<int>(jstar)) != S.end()) break;

    S.push_back(static_cast<int>(jstar));
    VecX w_ext(S.size());
    w_ext.head(w.size()) = w;
    w_ext[static_cast<long>(S.size()) - 1] = 0.0;
    w = w_ext;

    // minor cycles: pull the weights to the affine minimizer, dropping
    // boundary points on the way
    for (int minor = 0; minor < 4 * static_cast<int>(m) + 16; ++minor) {
      VecX u;
      if (!affine_minimizer(Q, S, u)) {
        // degenerate corral: drop the most recent addition
        S.pop_back();
        w.conservativeResize(S.size());
        if (w.sum() > 0) w /= w.sum();
        break;
      }
      if ((u.array() > kDropTol).all()) {
        w = u;
        break;
      }
      double theta = 1.0;
      for (long i = 0; i < u.size(); ++i)
        if (u[i] <= kDropTol && w[i] > u[i]) theta = std::min(theta, w[i] / (w[i] - u[i]));
      theta = std::max(theta, 0.0);
      w = theta * u + (1.0 - theta) * w;
      // drop zeros
      std::vector<int> S_next;
      std::vector<double> w_next;
      for (long i = 0; i < w.size(); ++i) {
        if (w[i] > kDropTol) {
          S_next.push_back(S[static_cast<size_t>(i)]);
          w_next.push_back(w[i]);
        }
      }
      if (S_next.empty()) {  // keep the largest to stay nonempty
        long imax = 0;
        for (long i = 1; i < w.size(); ++i)
          if (w[i] > w[imax]) imax = i;
        S_next.push_back(S[static_cast<size_t>(imax)]);
        w_next.push_back(1.0);
      }
      S = std::move(S_next);
      w = Eigen::Map<VecX>(w_next.data(), static_cast<long>(w_next.size()));
    }
    const double ws = w.sum();
    if (ws > 0) w /= ws;
    x.setZero();
    for (long i = 0; i < w.size(); ++i) x += w[i] * P.col(S[static_cast<size_t>(i)]);
  }

  HullProblem out;
  out.G = std::move(G);
  out.weights = VecX::Zero(m_all);
  for (long i = 0; i < w.size(); ++i) {
    // weight lands on the first occurrence of the deduplicated column
    out.weights[uniq[static_cast<size_t>(S[static_cast<size_t>(i)])]] += w[i];
  }
  out.g_star = out.G * out.weights;
  return out;
}

}  // namespace mfgs::qp
