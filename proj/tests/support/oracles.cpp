#include "oracles.hpp"

#include "vecot/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vecot::testing {

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

LayeredMeasure random_measure(Index points, Index layers, Index dim, Rng& rng,
                              double w_lo, double w_hi) {
  Matrix x(points, dim);
  for (Index t = 0; t < points; ++t)
    for (Index k = 0; k < dim; ++k) x(t, k) = uniform(rng);
  Vector w(points);
  for (Index t = 0; t < points; ++t) w(t) = uniform(rng, w_lo, w_hi);
  Matrix z(points, layers);
  std::exponential_distribution<double> e(1.0);
  for (Index t = 0; t < points; ++t) {
    for (Index j = 0; j < layers; ++j) z(t, j) = e(rng) + 1e-3;
    z.row(t) /= z.row(t).sum();
  }
  return build_measure(std::move(x), std::move(w), std::move(z));
}

CostField random_costs(Index agents, Index points, Rng& rng, double lo, double hi) {
  Matrix c(agents, points);
  for (Index i = 0; i < agents; ++i)
    for (Index t = 0; t < points; ++t) c(i, t) = uniform(rng, lo, hi);
  return CostField(std::move(c));
}

DemandMatrix labelling_demand(const LayeredMeasure& m, const std::vector<int>& labels,
                              Index agents) {
  DemandMatrix d = DemandMatrix::Zero(agents, m.layers());
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] == 0) continue;
    for (Index j = 0; j < m.layers(); ++j)
      d(labels[t] - 1, j) += m.weights()(static_cast<Index>(t)) *
                             m.densities()(static_cast<Index>(t), j);
  }
  return d;
}

BruteForce brute_force(const LayeredMeasure& m, const DemandMatrix& target, double tol) {
  const Index n = target.rows();
  const std::size_t T = static_cast<std::size_t>(m.size());
  std::vector<int> labels(T, 0);
  BruteForce out;
  while (true) {
    const DemandMatrix d = labelling_demand(m, labels, n);
    if ((d - target).cwiseAbs().maxCoeff() <= tol) {
      if (!out.first) out.first = labels;
      ++out.count;
    }
    // odometer, last point fastest
    std::size_t k = T;
    while (k > 0) {
      --k;
      if (labels[k] < n) {
        ++labels[k];
        break;
      }
      labels[k] = 0;
      if (k == 0) return out;
    }
    if (T == 0) return out;
  }
}

double reference_dual(const LayeredMeasure& m, const CostField& c, const Matrix& p,
                      const DemandMatrix& target) {
  double v = 0.0;
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j) v += p(i, j) * target(i, j);
  for (Index t = 0; t < m.size(); ++t) {
    double best = 0.0;
    for (Index i = 0; i < p.rows(); ++i) {
      double income = -c(i, t);
      for (Index j = 0; j < p.cols(); ++j) income += p(i, j) * m.densities()(t, j);
      best = std::max(best, income);
    }
    v -= m.weights()(t) * best;
  }
  return v;
}

Matrix finite_difference(const LayeredMeasure& m, const CostField& c, const Matrix& p,
                         const DemandMatrix& target, double h) {
  Matrix g(p.rows(), p.cols());
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j) {
      Matrix up = p, down = p;
      up(i, j) += h;
      down(i, j) -= h;
      g(i, j) = (reference_dual(m, c, up, target) - reference_dual(m, c, down, target)) /
                (2.0 * h);
    }
  return g;
}

std::optional<double> vertex_minimum(const Matrix& a, const Vector& b, const Vector& c) {
  const Index nv = a.cols();
  // All constraints as G x <= h, including -x <= 0.
  Matrix g(a.rows() + nv, nv);
  Vector h(a.rows() + nv);
  g << a, -Matrix::Identity(nv, nv);
  h << b, Vector::Zero(nv);
  const Index rows = g.rows();
  std::optional<double> best;
  std::vector<int> pick(static_cast<std::size_t>(rows), 0);
  std::fill(pick.end() - nv, pick.end(), 1);
  do {
    Matrix s(nv, nv);
    Vector r(nv);
    Index k = 0;
    for (Index row = 0; row < rows; ++row)
      if (pick[static_cast<std::size_t>(row)]) {
        s.row(k) = g.row(row);
        r(k) = h(row);
        ++k;
      }
    Eigen::FullPivLU<Matrix> lu(s);
    if (lu.rank() < nv) continue;
    const Vector x = lu.solve(r);
    if (((g * x - h).array() > 1e-9).any()) continue;
    const double v = c.dot(x);
    if (!best || v < *best) best = v;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

Matrix random_kernel(Index tx, Index ty, Rng& rng) {
  Matrix k = Matrix::Zero(tx, ty);
  std::uniform_int_distribution<Index> col(0, ty - 1);
  std::uniform_int_distribution<int> count(1, 3);
  for (Index t = 0; t < tx; ++t) {
    const int nz = count(rng);
    for (int r = 0; r < nz; ++r) k(t, col(rng)) += uniform(rng, 0.1, 1.0);
    k.row(t) /= k.row(t).sum();
  }
  return k;
}

std::optional<double> transport_optimum(const LayeredMeasure& m, const CostField& c,
                                        const DemandMatrix& target) {
  const Index n = target.rows(), q = m.layers(), T = m.size();
  // variable index i * T + t
  lp::LinearProgram prog(n * T);
  for (Index i = 0; i < n; ++i)
    for (Index t = 0; t < T; ++t) prog.cost(i * T + t) = m.weights()(t) * c(i, t);
  for (Index t = 0; t < T; ++t) {
    RowVector row = RowVector::Zero(n * T);
    for (Index i = 0; i < n; ++i) row(i * T + t) = 1.0;
    prog.add_row(row, lp::Sense::LessEqual, 1.0);
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < q; ++j) {
      RowVector row = RowVector::Zero(n * T);
      for (Index t = 0; t < T; ++t) row(i * T + t) = m.weights()(t) * m.densities()(t, j);
      prog.add_row(row, lp::Sense::Equal, target(i, j));
    }
  const lp::Solution s = lp::solve(prog);
  if (s.status != lp::Status::Optimal) return std::nullopt;
  return s.objective;
}

std::pair<Vector, Matrix> feasible_dual_pair(const LayeredMeasure& mx,
                                             const LayeredMeasure& my,
                                             const Matrix& cost, Rng& rng) {
  Matrix psi(my.size(), mx.layers());
  for (Index s = 0; s < psi.rows(); ++s)
    for (Index j = 0; j < psi.cols(); ++j) psi(s, j) = uniform(rng, -2.0, 2.0);
  Vector phi(mx.size());
  for (Index t = 0; t < mx.size(); ++t) {
    double lo = std::numeric_limits<double>::infinity();
    for (Index s = 0; s < my.size(); ++s)
      lo = std::min(lo, cost(t, s) - mx.densities().row(t).dot(psi.row(s)));
    phi(t) = lo;
  }
  return {phi, psi};
}

}  // namespace vecot::testing
