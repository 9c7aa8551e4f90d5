#include "vecot/lp.hpp"

#include "vecot/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vecot::lp {

LinearProgram::LinearProgram(Index variables)
    : cost(Vector::Zero(variables)),
      constraints(0, variables),
      rhs(0),
      lower(Vector::Zero(variables)),
      upper(Vector::Constant(variables, kInfinity)) {}

Index LinearProgram::add_row(const Eigen::Ref<const RowVector>& coefficients,
                             Sense sense, double bound) {
  if (coefficients.size() != variables())
    throw Error(ErrorCode::SizeMismatch, "row length does not match variables");
  const Index r = rows();
  constraints.conservativeResize(r + 1, variables());
  constraints.row(r) = coefficients;
  rhs.conservativeResize(r + 1);
  rhs(r) = bound;
  senses.push_back(sense);
  return r;
}

void LinearProgram::validate() const {
  const Index n = variables();
  if (constraints.cols() != n || lower.size() != n || upper.size() != n)
    throw Error(ErrorCode::SizeMismatch, "LP column dimensions disagree");
  if (constraints.rows() != rhs.size() ||
      static_cast<Index>(senses.size()) != rhs.size())
    throw Error(ErrorCode::SizeMismatch, "LP row dimensions disagree");
  if (!cost.allFinite() || !constraints.allFinite() || !rhs.allFinite())
    throw Error(ErrorCode::InvalidArgument, "LP coefficients must be finite");
  for (Index j = 0; j < n; ++j) {
    if (std::isnan(lower(j)) || std::isnan(upper(j)) || lower(j) == kInfinity ||
        upper(j) == -kInfinity || lower(j) > upper(j))
      throw Error(ErrorCode::InvalidArgument,
                  "bad bounds on variable " + std::to_string(j),
                  static_cast<std::size_t>(j));
  }
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor>;

constexpr double kPivotTolerance = 1e-9;
constexpr double kOptimalityTolerance = 1e-10;
constexpr long kDegenerateStreakForBland = 50;

enum class ColumnKind { Shifted, Positive, Negative, Slack, Artificial };

struct Column {
  ColumnKind kind;
  Index source;  // original variable, or standard row for slack/artificial
};

/// The program rewritten as  A x = b, x >= 0, b >= 0  with every original
/// row (and every finite upper bound) as one standard row.
struct StandardForm {
  Matrix a;
  Vector b;
  Vector cost;  // phase-two cost (minimization)
  std::vector<Column> columns;
  std::vector<double> row_sign;     // +1 or -1 applied to the row
  std::vector<Index> identity_col;  // column holding +e_r for row r
  std::vector<Index> upper_row;     // standard row of x_j <= u_j, or -1
  Index original_rows = 0;
  Index first_artificial = 0;
  double cost_offset = 0.0;
};

StandardForm standardize(const LinearProgram& p) {
  const Index n = p.variables();
  const Index m = p.rows();
  const double dir = p.direction == Direction::Maximize ? -1.0 : 1.0;

  StandardForm s;
  s.original_rows = m;
  s.upper_row.assign(static_cast<std::size_t>(n), -1);

  std::vector<Sense> senses(p.senses);
  Index rows = m;
  for (Index j = 0; j < n; ++j) {
    if (std::isfinite(p.upper(j))) {
      s.upper_row[static_cast<std::size_t>(j)] = rows++;
      senses.push_back(Sense::LessEqual);
    }
  }

  // Structural columns.
  for (Index j = 0; j < n; ++j) {
    if (std::isfinite(p.lower(j))) {
      s.columns.push_back({ColumnKind::Shifted, j});
    } else {
      s.columns.push_back({ColumnKind::Positive, j});
      s.columns.push_back({ColumnKind::Negative, j});
    }
  }
  const Index structural = static_cast<Index>(s.columns.size());
  Index slacks = 0;
  for (Index r = 0; r < rows; ++r) {
    if (senses[static_cast<std::size_t>(r)] != Sense::Equal) {
      s.columns.push_back({ColumnKind::Slack, r});
      ++slacks;
    }
  }

  Matrix a = Matrix::Zero(rows, structural + slacks);
  Vector b(rows);
  Vector cost = Vector::Zero(structural + slacks);
  for (Index r = 0; r < m; ++r) b(r) = p.rhs(r);
  for (Index j = 0; j < n; ++j) {
    const Index ur = s.upper_row[static_cast<std::size_t>(j)];
    if (ur >= 0) b(ur) = p.upper(j);
  }

  for (Index col = 0; col < structural; ++col) {
    const Column& c = s.columns[static_cast<std::size_t>(col)];
    const double sign = c.kind == ColumnKind::Negative ? -1.0 : 1.0;
    a.block(0, col, m, 1) = sign * p.constraints.col(c.source);
    const Index ur = s.upper_row[static_cast<std::size_t>(c.source)];
    if (ur >= 0) a(ur, col) = sign;
    cost(col) = dir * sign * p.cost(c.source);
  }
  for (Index j = 0; j < n; ++j) {
    if (std::isfinite(p.lower(j)) && p.lower(j) != 0.0) {
      b.head(m) -= p.constraints.col(j) * p.lower(j);
      const Index ur = s.upper_row[static_cast<std::size_t>(j)];
      if (ur >= 0) b(ur) -= p.lower(j);
      s.cost_offset += p.cost(j) * p.lower(j);
    }
  }
  for (Index col = structural; col < structural + slacks; ++col) {
    const Index r = s.columns[static_cast<std::size_t>(col)].source;
    a(r, col) = senses[static_cast<std::size_t>(r)] == Sense::LessEqual ? 1.0
                                                                         : -1.0;
  }

  s.row_sign.assign(static_cast<std::size_t>(rows), 1.0);
  s.identity_col.assign(static_cast<std::size_t>(rows), -1);
  for (Index r = 0; r < rows; ++r) {
    if (b(r) < 0.0) {
      a.row(r) *= -1.0;
      b(r) = -b(r);
      s.row_sign[static_cast<std::size_t>(r)] = -1.0;
    }
  }
  for (Index col = structural; col < structural + slacks; ++col) {
    const Index r = s.columns[static_cast<std::size_t>(col)].source;
    if (a(r, col) > 0.0) s.identity_col[static_cast<std::size_t>(r)] = col;
  }

  // Artificial columns for rows without a usable slack.
  s.first_artificial = structural + slacks;
  Index artificials = 0;
  for (Index r = 0; r < rows; ++r)
    if (s.identity_col[static_cast<std::size_t>(r)] < 0) ++artificials;
  a.conservativeResize(rows, structural + slacks + artificials);
  a.rightCols(artificials).setZero();
  cost.conservativeResize(structural + slacks + artificials);
  cost.tail(artificials).setZero();
  Index next = s.first_artificial;
  for (Index r = 0; r < rows; ++r) {
    if (s.identity_col[static_cast<std::size_t>(r)] < 0) {
      s.columns.push_back({ColumnKind::Artificial, r});
      a(r, next) = 1.0;
      s.identity_col[static_cast<std::size_t>(r)] = next++;
    }
  }

  s.a = std::move(a);
  s.b = std::move(b);
  s.cost = std::move(cost);
  return s;
}

/// Full dense tableau over the standard form.
class Tableau {
 public:
  explicit Tableau(const StandardForm& s)
      : form_(s),
        tab_(s.a.rows(), s.a.cols() + 1),
        obj_(s.a.cols() + 1),
        active_row_(static_cast<std::size_t>(s.a.rows()), true) {
    tab_.leftCols(s.a.cols()) = s.a;
    tab_.col(s.a.cols()) = s.b;
    for (Index r = 0; r < s.a.rows(); ++r)
      basis_.push_back(s.identity_col[static_cast<std::size_t>(r)]);
    scale_ = s.b.size() == 0 ? 1.0 : std::max(1.0, s.b.cwiseAbs().maxCoeff());
  }

  Index cols() const { return form_.a.cols(); }
  Index rhs_col() const { return form_.a.cols(); }
  long pivots() const { return pivots_; }

  void set_costs(const Vector& cost) {
    cost_ = cost;
    obj_.head(cols()) = cost;
    obj_(rhs_col()) = 0.0;
    for (Index r = 0; r < tab_.rows(); ++r) {
      const double cb = cost(basis_[static_cast<std::size_t>(r)]);
      if (cb != 0.0) obj_ -= cb * tab_.row(r).transpose();
    }
  }

  double objective() const { return -obj_(rhs_col()); }

  /// Runs primal simplex over columns where `allowed(col)` holds. Returns
  /// false when the objective is unbounded below.
  template <typename Allowed>
  bool optimize(Allowed allowed) {
    bool bland = false;
    long streak = 0;
    const long limit = 200L * (tab_.rows() + cols()) + 20000L;
    for (long iter = 0;; ++iter) {
      if (iter > limit)
        throw Error(ErrorCode::NumericalBreakdown,
                    "simplex exceeded its pivot budget; rescale the instance");
      Index enter = -1;
      double best = -kOptimalityTolerance;
      for (Index j = 0; j < cols(); ++j) {
        if (!allowed(j) || is_basic(j)) continue;
        if (obj_(j) < best) {
          enter = j;
          if (bland) break;
          best = obj_(j);
        }
      }
      if (enter < 0) return true;

      Index leave = -1;
      double ratio = 0.0;
      for (Index r = 0; r < tab_.rows(); ++r) {
        const double coef = tab_(r, enter);
        if (coef <= kPivotTolerance) continue;
        const double q = std::max(0.0, tab_(r, rhs_col())) / coef;
        if (leave < 0 || q < ratio - 1e-12 * (1.0 + ratio)) {
          leave = r;
          ratio = q;
        } else if (q <= ratio + 1e-12 * (1.0 + ratio)) {
          const bool take =
              bland ? basis_[static_cast<std::size_t>(r)] <
                          basis_[static_cast<std::size_t>(leave)]
                    : coef > tab_(leave, enter);
          if (take) {
            leave = r;
            ratio = std::min(ratio, q);
          }
        }
      }
      if (leave < 0) return false;

      if (ratio <= 1e-12 * scale_) {
        if (++streak > kDegenerateStreakForBland) bland = true;
      } else {
        streak = 0;
        bland = false;
      }
      pivot(leave, enter);
    }
  }

  void pivot(Index r, Index c) {
    ++pivots_;
    tab_.row(r) /= tab_(r, c);
    for (Index i = 0; i < tab_.rows(); ++i) {
      if (i == r) continue;
      const double f = tab_(i, c);
      if (f != 0.0) tab_.row(i) -= f * tab_.row(r);
      tab_(i, c) = 0.0;
    }
    const double f = obj_(c);
    if (f != 0.0) obj_ -= f * tab_.row(r).transpose();
    obj_(c) = 0.0;
    basis_[static_cast<std::size_t>(r)] = c;
  }

  /// After phase one: pivots zero-level artificials out of the basis and
  /// drops rows that turn out to be linear combinations of others.
  void expel_artificials() {
    for (Index r = 0; r < tab_.rows();) {
      const Index b = basis_[static_cast<std::size_t>(r)];
      if (b < form_.first_artificial) {
        ++r;
        continue;
      }
      Index col = -1;
      double mag = kPivotTolerance;
      for (Index j = 0; j < form_.first_artificial; ++j) {
        if (std::abs(tab_(r, j)) > mag) {
          mag = std::abs(tab_(r, j));
          col = j;
        }
      }
      if (col >= 0) {
        pivot(r, col);
        ++r;
      } else {
        const Index source = form_.columns[static_cast<std::size_t>(b)].source;
        active_row_[static_cast<std::size_t>(source)] = false;
        remove_row(r);
      }
    }
  }

  bool is_basic(Index col) const {
    return std::find(basis_.begin(), basis_.end(), col) != basis_.end();
  }

  const std::vector<Index>& basis() const { return basis_; }
  const std::vector<bool>& active_rows() const { return active_row_; }
  double rhs(Index r) const { return tab_(r, rhs_col()); }
  double scale() const { return scale_; }

 private:
  void remove_row(Index r) {
    const Index last = tab_.rows() - 1;
    if (r < last) {
      tab_.block(r, 0, last - r, tab_.cols()) =
          tab_.block(r + 1, 0, last - r, tab_.cols()).eval();
    }
    tab_.conservativeResize(last, Eigen::NoChange);
    basis_.erase(basis_.begin() + r);
  }

  const StandardForm& form_;
  RowMajor tab_;
  Vector obj_;
  Vector cost_;
  std::vector<Index> basis_;
  std::vector<bool> active_row_;
  long pivots_ = 0;
  double scale_ = 1.0;
};

/// Standard-form primal and row duals recomputed from the final basis.
struct BasisSolution {
  Vector x;  // standard columns
  Vector y;  // standard rows, 0 on dropped rows
};

BasisSolution resolve_basis(const StandardForm& s, const Tableau& t,
                            const Vector& cost) {
  std::vector<Index> rows;
  for (Index r = 0; r < s.a.rows(); ++r)
    if (t.active_rows()[static_cast<std::size_t>(r)]) rows.push_back(r);
  const auto& basis = t.basis();
  const Index m = static_cast<Index>(rows.size());

  BasisSolution out{Vector::Zero(s.a.cols()), Vector::Zero(s.a.rows())};
  if (m == 0) return out;
  Matrix bmat(m, m);
  Vector rhs(m), cb(m);
  for (Index i = 0; i < m; ++i) {
    rhs(i) = s.b(rows[static_cast<std::size_t>(i)]);
    for (Index k = 0; k < m; ++k)
      bmat(i, k) = s.a(rows[static_cast<std::size_t>(i)],
                       basis[static_cast<std::size_t>(k)]);
  }
  for (Index k = 0; k < m; ++k) cb(k) = cost(basis[static_cast<std::size_t>(k)]);

  Eigen::PartialPivLU<Matrix> lu(bmat);
  Vector xb = lu.solve(rhs);
  Vector y = lu.transpose().solve(cb);
  const bool ok = xb.allFinite() && y.allFinite() &&
                  (bmat * xb - rhs).cwiseAbs().maxCoeff() <=
                      1e-7 * (1.0 + rhs.cwiseAbs().maxCoeff());
  if (!ok) {
    // Fall back on the tableau values.
    for (Index k = 0; k < m; ++k) xb(k) = t.rhs(k);
  }
  for (Index k = 0; k < m; ++k) {
    out.x(basis[static_cast<std::size_t>(k)]) = std::max(0.0, xb(k));
  }
  if (ok) {
    for (Index i = 0; i < m; ++i) out.y(rows[static_cast<std::size_t>(i)]) = y(i);
  }
  return out;
}

Vector original_primal(const LinearProgram& p, const StandardForm& s,
                       const Vector& xs) {
  Vector x = Vector::Zero(p.variables());
  for (Index j = 0; j < p.variables(); ++j)
    if (std::isfinite(p.lower(j))) x(j) = p.lower(j);
  for (std::size_t col = 0; col < s.columns.size(); ++col) {
    const Column& c = s.columns[col];
    const double v = xs(static_cast<Index>(col));
    switch (c.kind) {
      case ColumnKind::Shifted:
      case ColumnKind::Positive: x(c.source) += v; break;
      case ColumnKind::Negative: x(c.source) -= v; break;
      default: break;
    }
  }
  return x;
}

struct PhaseOne {
  StandardForm form;
  Tableau tableau;
  bool feasible;
  double infeasibility;

  explicit PhaseOne(const LinearProgram& p)
      : form(standardize(p)), tableau(form), feasible(true), infeasibility(0) {
    Vector c1 = Vector::Zero(form.a.cols());
    c1.tail(form.a.cols() - form.first_artificial).setOnes();
    tableau.set_costs(c1);
    tableau.optimize([](Index) { return true; });
    infeasibility = tableau.objective();
    feasible = infeasibility <= kFeasibilityTolerance * tableau.scale();
    if (!feasible) {
      BasisSolution bs = resolve_basis(form, tableau, c1);
      phase_one_duals = bs.y;
    }
  }

  Vector phase_one_duals;
};

FarkasCertificate certificate_from(const LinearProgram& p, const StandardForm& s,
                                   const Vector& y_std) {
  FarkasCertificate cert{Vector::Zero(p.rows()), Vector::Zero(p.variables())};
  for (Index r = 0; r < p.rows(); ++r)
    cert.rows(r) = s.row_sign[static_cast<std::size_t>(r)] * y_std(r);
  for (Index j = 0; j < p.variables(); ++j) {
    const Index ur = s.upper_row[static_cast<std::size_t>(j)];
    if (ur >= 0) cert.upper(j) = s.row_sign[static_cast<std::size_t>(ur)] * y_std(ur);
  }
  return cert;
}

}  // namespace

Solution solve(const LinearProgram& program) {
  program.validate();
  PhaseOne one(program);
  Solution sol;
  if (!one.feasible) {
    sol.status = Status::Infeasible;
    sol.pivots = one.tableau.pivots();
    return sol;
  }
  StandardForm& s = one.form;
  Tableau& t = one.tableau;
  t.expel_artificials();
  t.set_costs(s.cost);
  const Index first_art = s.first_artificial;
  const bool bounded = t.optimize([first_art](Index j) { return j < first_art; });
  sol.pivots = t.pivots();
  if (!bounded) {
    sol.status = Status::Unbounded;
    return sol;
  }

  BasisSolution bs = resolve_basis(s, t, s.cost);
  sol.status = Status::Optimal;
  sol.primal = original_primal(program, s, bs.x);

  const double dir = program.direction == Direction::Maximize ? -1.0 : 1.0;
  sol.duals = Vector::Zero(program.rows());
  sol.upper_duals = Vector::Zero(program.variables());
  for (Index r = 0; r < program.rows(); ++r)
    sol.duals(r) = dir * s.row_sign[static_cast<std::size_t>(r)] * bs.y(r);
  for (Index j = 0; j < program.variables(); ++j) {
    const Index ur = s.upper_row[static_cast<std::size_t>(j)];
    if (ur >= 0)
      sol.upper_duals(j) =
          dir * s.row_sign[static_cast<std::size_t>(ur)] * bs.y(ur);
  }
  sol.reduced_costs = program.cost -
                      program.constraints.transpose() * sol.duals -
                      sol.upper_duals;
  sol.objective = program.cost.dot(sol.primal);
  return sol;
}

Feasibility feasibility(const LinearProgram& program) {
  program.validate();
  PhaseOne one(program);
  Feasibility out;
  out.feasible = one.feasible;
  if (one.feasible) {
    Vector c1 = Vector::Zero(one.form.a.cols());
    c1.tail(one.form.a.cols() - one.form.first_artificial).setOnes();
    one.tableau.expel_artificials();
    BasisSolution bs = resolve_basis(one.form, one.tableau, c1);
    out.point = original_primal(program, one.form, bs.x);
  } else {
    out.certificate = certificate_from(program, one.form, one.phase_one_duals);
  }
  return out;
}

double dual_objective(const LinearProgram& p, const Solution& sol) {
  double value = p.rhs.dot(sol.duals);
  for (Index j = 0; j < p.variables(); ++j) {
    if (std::isfinite(p.upper(j))) value += p.upper(j) * sol.upper_duals(j);
    if (std::isfinite(p.lower(j))) value += p.lower(j) * sol.reduced_costs(j);
  }
  return value;
}

double primal_residual(const LinearProgram& p, const Vector& x) {
  double worst = 0.0;
  const Vector ax = p.constraints * x;
  for (Index r = 0; r < p.rows(); ++r) {
    const double d = ax(r) - p.rhs(r);
    switch (p.senses[static_cast<std::size_t>(r)]) {
      case Sense::LessEqual: worst = std::max(worst, d); break;
      case Sense::GreaterEqual: worst = std::max(worst, -d); break;
      case Sense::Equal: worst = std::max(worst, std::abs(d)); break;
    }
  }
  for (Index j = 0; j < p.variables(); ++j) {
    if (std::isfinite(p.lower(j))) worst = std::max(worst, p.lower(j) - x(j));
    if (std::isfinite(p.upper(j))) worst = std::max(worst, x(j) - p.upper(j));
  }
  return worst;
}

double complementarity_residual(const LinearProgram& p, const Solution& sol) {
  const double dir = p.direction == Direction::Maximize ? -1.0 : 1.0;
  double worst = 0.0;
  const Vector ax = p.constraints * sol.primal;
  for (Index r = 0; r < p.rows(); ++r) {
    const double y = dir * sol.duals(r);
    const auto sense = p.senses[static_cast<std::size_t>(r)];
    if (sense == Sense::LessEqual) worst = std::max(worst, y);
    if (sense == Sense::GreaterEqual) worst = std::max(worst, -y);
    worst = std::max(worst, std::abs(sol.duals(r) * (ax(r) - p.rhs(r))));
  }
  for (Index j = 0; j < p.variables(); ++j) {
    const double z = dir * sol.upper_duals(j);
    const double rc = dir * sol.reduced_costs(j);
    if (std::isfinite(p.upper(j))) {
      worst = std::max(worst, z);
      worst = std::max(worst, std::abs(z * (sol.primal(j) - p.upper(j))));
    }
    if (std::isfinite(p.lower(j))) {
      worst = std::max(worst, -rc);
      worst = std::max(worst, std::abs(rc * (sol.primal(j) - p.lower(j))));
    } else {
      worst = std::max(worst, std::abs(rc));
    }
  }
  return worst;
}

double farkas_margin(const LinearProgram& p, const FarkasCertificate& cert,
                     double tolerance) {
  if (cert.rows.size() != p.rows() || cert.upper.size() != p.variables())
    return -1.0;
  for (Index r = 0; r < p.rows(); ++r) {
    const auto sense = p.senses[static_cast<std::size_t>(r)];
    if (sense == Sense::LessEqual && cert.rows(r) > tolerance) return -1.0;
    if (sense == Sense::GreaterEqual && cert.rows(r) < -tolerance) return -1.0;
  }
  double margin = p.rhs.dot(cert.rows);
  const Vector g = p.constraints.transpose() * cert.rows + cert.upper;
  for (Index j = 0; j < p.variables(); ++j) {
    if (std::isfinite(p.upper(j))) {
      if (cert.upper(j) > tolerance) return -1.0;
      margin += p.upper(j) * cert.upper(j);
    } else if (cert.upper(j) != 0.0) {
      return -1.0;
    }
    if (std::isfinite(p.lower(j))) {
      if (g(j) > tolerance) return -1.0;
      margin -= p.lower(j) * g(j);
    } else if (std::abs(g(j)) > tolerance) {
      return -1.0;
    }
  }
  return margin;
}

}  // namespace vecot::lp
