#include "lodcut/analysis.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

namespace lodcut {

namespace {

VecX lanczos_start(Eigen::Index n) {
  VecX v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = 1.0 + 0.5 * std::sin(0.7 * static_cast<double>(i) + 1.0);
  v /= v.norm();
  return v;
}

// Largest eigenvalue of a symmetric operator given by its action, via
// Lanczos with full reorthogonalization and a deterministic start.
double lanczos_largest(Eigen::Index n, const std::function<VecX(const VecX&)>& apply, int* iters) {
  std::vector<VecX> V;
  V.push_back(lanczos_start(n));
  std::vector<double> alpha, beta;
  double prev = 0;
  const int maxit = static_cast<int>(std::min<Eigen::Index>(n, 400));
  for (int k = 0; k < maxit; ++k) {
    VecX w = apply(V[static_cast<size_t>(k)]);
    if (k > 0) w -= beta[static_cast<size_t>(k - 1)] * V[static_cast<size_t>(k - 1)];
    alpha.push_back(V[static_cast<size_t>(k)].dot(w));
    for (int pass = 0; pass < 2; ++pass)
      for (const VecX& u : V) w -= u.dot(w) * u;
    const double b = w.norm();

    MatX T = MatX::Zero(k + 1, k + 1);
    for (int i = 0; i <= k; ++i) {
      T(i, i) = alpha[static_cast<size_t>(i)];
      if (i < k) T(i, i + 1) = T(i + 1, i) = beta[static_cast<size_t>(i)];
    }
    const Eigen::SelfAdjointEigenSolver<MatX> es(T);
    const double th = es.eigenvalues()(k);
    *iters = k + 1;
    if (k >= 2 && std::abs(th - prev) <= 1e-8 * std::max(1e-300, std::abs(th))) return th;
    prev = th;
    if (b <= 1e-13 * (std::abs(alpha[0]) + 1.0)) return th;  // invariant subspace
    beta.push_back(b);
    V.push_back(w / b);
  }
  return prev;
}

double bbox_diagonal(const std::vector<Vec2>& nodes) {
  if (nodes.empty()) throw DimensionMismatch("empty mesh");
  double x0 = nodes[0].x, x1 = nodes[0].x, y0 = nodes[0].y, y1 = nodes[0].y;
  for (const Vec2& p : nodes) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return std::hypot(x1 - x0, y1 - y0);
}

}  // namespace

ConditionReport condition_number(const SpMat& K) {
  if (K.rows() != K.cols() || K.rows() == 0)
    throw DimensionMismatch("condition_number: matrix is not square");
  {
    const SpMat D = SpMat(K.transpose()) - K;
    if (D.norm() > 1e-10 * std::max(1.0, K.norm()))
      throw SolverFailure("condition_number: matrix is not symmetric");
  }
  ConditionReport rep;
  const Eigen::Index n = K.rows();
  if (n <= 2000) {
    const Eigen::SelfAdjointEigenSolver<MatX> es{MatX(K)};
    if (es.info() != Eigen::Success) throw SolverFailure("condition_number: dense eigensolve failed");
    rep.lambda_min = es.eigenvalues()(0);
    rep.lambda_max = es.eigenvalues()(n - 1);
    rep.dense = true;
  } else {
    rep.dense = false;
    int it1 = 0, it2 = 0;
    rep.lambda_max = lanczos_largest(n, [&K](const VecX& v) { return VecX(K * v); }, &it1);
    Eigen::SimplicialLDLT<SpMat> ldlt(K);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
      throw SolverFailure("condition_number: matrix is not positive definite");
    const double inv_max =
        lanczos_largest(n, [&ldlt](const VecX& v) { return VecX(ldlt.solve(v)); }, &it2);
    if (inv_max <= 0) throw SolverFailure("condition_number: inverse iteration failed");
    rep.lambda_min = 1.0 / inv_max;
    rep.iterations = it1 + it2;
  }
  if (rep.lambda_min <= 0) throw SolverFailure("condition_number: matrix is not positive definite");
  rep.cond = rep.lambda_max / rep.lambda_min;
  return rep;
}

double condition_scaling(const std::vector<double>& H, const std::vector<double>& cond) {
  if (H.size() != cond.size() || H.size() < 3)
    throw DimensionMismatch("condition_scaling needs at least three matching points");
  std::vector<double> inv;
  inv.reserve(H.size());
  for (double v : H) inv.push_back(1.0 / v);
  return loglog_slope(inv, cond);
}

DecayReport measure_decay(const MeshHierarchy& hier, const SpMat& Kf, const SpMat& Pi,
                          const ClementOperator& clem, int free_index, int L_max) {
  if (L_max < 1) throw DimensionMismatch("measure_decay needs L_max >= 1");
  DecayReport rep;
  const CorrectorResult global = solve_corrector(hier, Kf, Pi, clem, free_index, -1);
  if (global.stats.skipped) {
    rep.resolved = true;
    return rep;
  }
  VecX qg = VecX::Zero(hier.n_fine_nodes());
  for (const auto& [f, v] : global.q) qg(f) = v;
  for (int L = 1; L <= L_max; ++L) {
    const CorrectorResult local = solve_corrector(hier, Kf, Pi, clem, free_index, L);
    VecX d = qg;
    for (const auto& [f, v] : local.q) d(f) -= v;
    rep.L.push_back(L);
    rep.err.push_back(std::sqrt(std::max(0.0, d.dot(Kf * d))));
  }
  std::vector<double> xs, ys;
  for (size_t i = 0; i < rep.err.size(); ++i) {
    if (rep.err[i] == 0.0) break;  // the patch already covers the zone
    xs.push_back(static_cast<double>(rep.L[i]));
    ys.push_back(std::log(rep.err[i]));
  }
  if (xs.size() < 2) {
    rep.resolved = true;
    return rep;
  }
  rep.slope = linear_fit(xs, ys).slope;
  rep.gamma = std::exp(3.0 * rep.slope);
  return rep;
}

PFPathBound pf_path_bound(const SimplicialMesh& mesh,
                          const std::vector<std::pair<int, int>>& gamma) {
  if (gamma.empty()) throw DimensionMismatch("pf_path_bound: empty gamma");
  const int nt = static_cast<int>(mesh.tris.size());
  std::map<std::pair<int, int>, std::vector<int>> edge_tris;
  for (int t = 0; t < nt; ++t)
    for (int e = 0; e < 3; ++e) {
      const int a = mesh.tris[static_cast<size_t>(t)][static_cast<size_t>(e)];
      const int b = mesh.tris[static_cast<size_t>(t)][static_cast<size_t>((e + 1) % 3)];
      edge_tris[{std::min(a, b), std::max(a, b)}].push_back(t);
    }

  PFPathBound rep;
  std::vector<char> source(static_cast<size_t>(nt), 0);
  for (auto [a, b] : gamma) {
    const auto it = edge_tris.find({std::min(a, b), std::max(a, b)});
    if (it == edge_tris.end()) throw DimensionMismatch("pf_path_bound: gamma edge not in mesh");
    const Vec2 pa = mesh.nodes[static_cast<size_t>(a)], pb = mesh.nodes[static_cast<size_t>(b)];
    rep.gamma_len += (pa - pb).norm();
    for (int t : it->second) source[static_cast<size_t>(t)] = 1;
  }

  // Shortest element paths from the gamma-touching set, which count as
  // length one themselves; ties broken by ascending element id.
  std::vector<int> dist(static_cast<size_t>(nt), -1), parent(static_cast<size_t>(nt), -1);
  std::queue<int> q;
  for (int t = 0; t < nt; ++t)
    if (source[static_cast<size_t>(t)]) {
      dist[static_cast<size_t>(t)] = 1;
      q.push(t);
    }
  if (q.empty()) throw DimensionMismatch("pf_path_bound: gamma touches no element");
  while (!q.empty()) {
    const int t = q.front();
    q.pop();
    for (int e = 0; e < 3; ++e) {
      const int a = mesh.tris[static_cast<size_t>(t)][static_cast<size_t>(e)];
      const int b = mesh.tris[static_cast<size_t>(t)][static_cast<size_t>((e + 1) % 3)];
      for (int s : edge_tris[{std::min(a, b), std::max(a, b)}])
        if (dist[static_cast<size_t>(s)] < 0) {
          dist[static_cast<size_t>(s)] = dist[static_cast<size_t>(t)] + 1;
          parent[static_cast<size_t>(s)] = t;
          q.push(s);
        }
    }
  }
  std::vector<int> order(static_cast<size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    if (dist[static_cast<size_t>(t)] < 0)
      throw SolverFailure("pf_path_bound: element not connected to gamma");
    order[static_cast<size_t>(t)] = t;
    rep.s_max = std::max(rep.s_max, dist[static_cast<size_t>(t)]);
  }
  std::sort(order.begin(), order.end(),
            [&dist](int a, int b) { return dist[static_cast<size_t>(a)] > dist[static_cast<size_t>(b)]; });
  std::vector<long long> paths(static_cast<size_t>(nt), 1);
  for (int t : order)
    if (parent[static_cast<size_t>(t)] >= 0)
      paths[static_cast<size_t>(parent[static_cast<size_t>(t)])] += paths[static_cast<size_t>(t)];
  rep.r_max = *std::max_element(paths.begin(), paths.end());

  for (const auto& tri : mesh.tris)
    for (int e = 0; e < 3; ++e) {
      const Vec2 pa = mesh.nodes[static_cast<size_t>(tri[static_cast<size_t>(e)])];
      const Vec2 pb = mesh.nodes[static_cast<size_t>(tri[static_cast<size_t>((e + 1) % 3)])];
      rep.eta = std::max(rep.eta, (pa - pb).norm());
    }
  rep.diam = bbox_diagonal(mesh.nodes);
  rep.bound = static_cast<double>(rep.s_max) * static_cast<double>(rep.r_max) *
              std::pow(rep.eta, 3) / (rep.gamma_len * rep.diam * rep.diam);
  return rep;
}

PFRayleigh pf_rayleigh(const SimplicialMesh& mesh,
                       const std::vector<std::pair<int, int>>& gamma) {
  if (gamma.empty()) throw DimensionMismatch("pf_rayleigh: empty gamma");
  const Eigen::Index n = static_cast<Eigen::Index>(mesh.nodes.size());
  SpMat K, M;
  assemble_p1(mesh, &K, &M);

  VecX g = VecX::Zero(n);
  double total = 0;
  for (auto [a, b] : gamma) {
    const double len =
        (mesh.nodes[static_cast<size_t>(a)] - mesh.nodes[static_cast<size_t>(b)]).norm();
    g(a) += 0.5 * len;
    g(b) += 0.5 * len;
    total += len;
  }
  g /= total;

  Eigen::Index pivot = 0;
  for (Eigen::Index i = 1; i < n; ++i)
    if (std::abs(g(i)) > std::abs(g(pivot))) pivot = i;
  if (g(pivot) == 0.0) throw SolverFailure("pf_rayleigh: zero gamma average weights");

  std::vector<Triplet> zt;
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i == pivot) continue;
    zt.emplace_back(static_cast<int>(i), static_cast<int>(col), 1.0);
    if (g(i) != 0.0)
      zt.emplace_back(static_cast<int>(pivot), static_cast<int>(col), -g(i) / g(pivot));
    ++col;
  }
  SpMat Z(n, n - 1);
  Z.setFromTriplets(zt.begin(), zt.end());
  const SpMat Kt = SpMat(Z.transpose() * K * Z);
  const SpMat Mt = SpMat(Z.transpose() * M * Z);

  PFRayleigh rep;
  if (n - 1 <= 600) {
    const Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es{MatX(Kt), MatX(Mt)};
    if (es.info() != Eigen::Success) throw SolverFailure("pf_rayleigh: dense eigensolve failed");
    rep.lambda_min = es.eigenvalues()(0);
    rep.dense = true;
  } else {
    rep.dense = false;
    Eigen::SimplicialLDLT<SpMat> ldlt(Kt);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
      throw SolverFailure("pf_rayleigh: constrained stiffness is not positive definite");
    VecX v = lanczos_start(n - 1);
    v /= std::sqrt(v.dot(Mt * v));
    double lam = v.dot(Kt * v);
    for (int it = 0; it < 1000; ++it) {
      VecX x = ldlt.solve(Mt * v);
      x /= std::sqrt(x.dot(Mt * x));
      const double lam_new = x.dot(Kt * x);
      v = x;
      rep.iterations = it + 1;
      if (std::abs(lam_new - lam) <= 1e-10 * std::max(1e-300, lam_new)) {
        lam = lam_new;
        break;
      }
      lam = lam_new;
      if (it == 999) throw SolverFailure("pf_rayleigh: inverse iteration did not converge");
    }
    rep.lambda_min = lam;
  }
  if (rep.lambda_min <= 0) throw SolverFailure("pf_rayleigh: nonpositive eigenvalue");
  rep.constant = 1.0 / (bbox_diagonal(mesh.nodes) * std::sqrt(rep.lambda_min));
  return rep;
}

PFEstimate pf_estimate(const SimplicialMesh& mesh,
                       const std::vector<std::pair<int, int>>& gamma) {
  return {pf_path_bound(mesh, gamma), pf_rayleigh(mesh, gamma)};
}

}  // namespace lodcut
