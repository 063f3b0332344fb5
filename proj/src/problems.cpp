#include "stochsqp/problems.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <utility>

#include "stochsqp/errors.hpp"

namespace stochsqp {

Vector Problem::x0() const { return Vector::Ones(n()); }

namespace {

Matrix random_matrix(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) M(i, j) = gauss(rng);
  return M;
}

Vector random_vector(Rng& rng, Index size) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(size);
  for (Index i = 0; i < size; ++i) v(i) = gauss(rng);
  return v;
}

double min_singular_value(const Matrix& M) {
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues().minCoeff();
}

Matrix random_full_rank(Rng& rng, Index m, Index n) {
  while (true) {
    Matrix A = random_matrix(rng, m, n);
    if (min_singular_value(A) > 1e-8) return A;
  }
}

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void validate_labels(const Dataset& ds) {
  if (ds.y.size() != ds.X.cols()) {
    throw ContractViolation("Dataset: label count must match the sample count");
  }
  for (Index i = 0; i < ds.y.size(); ++i) {
    if (ds.y(i) != 1.0 && ds.y(i) != -1.0) {
      throw ContractViolation("Dataset: labels must be exactly +1 or -1");
    }
  }
}

// ---------------------------------------------------------------------------

class LogisticConstrainedProblem final : public Problem {
 public:
  LogisticConstrainedProblem(std::string name, Dataset ds, Index m_lin, std::uint64_t seed,
                             double b2)
      : name_(std::move(name)), ds_(std::move(ds)), b2_(b2) {
    const Index nn = ds_.n();
    if (m_lin < 0 || m_lin + 1 > nn) {
      throw ContractViolation("build_logistic_problem: m_lin + 1 must not exceed n");
    }
    if (ds_.N() < 1) throw ContractViolation("build_logistic_problem: dataset is empty");
    validate_labels(ds_);

    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    A_ = Matrix(m_lin, nn);
    for (Index i = 0; i < m_lin; ++i)
      for (Index j = 0; j < nn; ++j) A_(i, j) = gauss(rng);
    b1_ = Vector(m_lin);
    for (Index i = 0; i < m_lin; ++i) b1_(i) = gauss(rng);

    if (min_singular_value(jac(x0())) <= 1e-8) {
      std::cerr << "warning: problem " << name_
                << ": constraint Jacobian is rank deficient at the initial point\n";
    }
  }

  const std::string& name() const override { return name_; }
  Index n() const override { return ds_.n(); }
  Index m() const override { return A_.rows() + 1; }
  std::optional<long> sample_count() const override { return static_cast<long>(ds_.N()); }

  double f_true(const Vector& x) const override {
    double total = 0.0;
    for (Index i = 0; i < ds_.N(); ++i) {
      const double t = ds_.y(i) * ds_.X.col(i).dot(x);
      // log(1 + e^-t) without overflow on either side
      total += t > 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
    }
    return total / static_cast<double>(ds_.N());
  }

  Vector g_true(const Vector& x) const override {
    Vector sum = Vector::Zero(n());
    for (Index i = 0; i < ds_.N(); ++i) sum += logistic_sample_gradient(ds_, x, i);
    return sum / static_cast<double>(ds_.N());
  }

  Vector g_sample(const Vector& x, long i, Rng&) const override {
    return logistic_sample_gradient(ds_, x, i);
  }

  Vector c(const Vector& x) const override {
    Vector out(m());
    out.head(A_.rows()) = A_ * x - b1_;
    out(A_.rows()) = x.squaredNorm() - b2_;
    return out;
  }

  Matrix jac(const Vector& x) const override {
    Matrix J(m(), n());
    J.topRows(A_.rows()) = A_;
    J.bottomRows(1) = 2.0 * x.transpose();
    return J;
  }

 private:
  std::string name_;
  Dataset ds_;
  Matrix A_;
  Vector b1_;
  double b2_;
};

// ---------------------------------------------------------------------------

class AdditiveNoiseProblem final : public Problem {
 public:
  AdditiveNoiseProblem(ProblemPtr inner, double eps)
      : inner_(std::move(inner)), eps_(eps), name_(inner_->name() + "+noise" + format_g(eps)) {
    if (!(eps_ >= 0.0)) throw ContractViolation("with_additive_noise: eps must be nonnegative");
  }

  const std::string& name() const override { return name_; }
  Index n() const override { return inner_->n(); }
  Index m() const override { return inner_->m(); }
  std::optional<long> sample_count() const override { return std::nullopt; }

  double f_true(const Vector& x) const override { return inner_->f_true(x); }
  Vector g_true(const Vector& x) const override { return inner_->g_true(x); }

  Vector g_sample(const Vector& x, long, Rng& rng) const override {
    Vector g = inner_->g_true(x);
    if (eps_ > 0.0) {
      std::normal_distribution<double> gauss(0.0, std::sqrt(eps_));
      for (Index i = 0; i < g.size(); ++i) g(i) += gauss(rng);
    }
    return g;
  }

  Vector c(const Vector& x) const override { return inner_->c(x); }
  Matrix jac(const Vector& x) const override { return inner_->jac(x); }
  Vector x0() const override { return inner_->x0(); }
  std::optional<Vector> reference_solution() const override {
    return inner_->reference_solution();
  }

 private:
  ProblemPtr inner_;
  double eps_;
  std::string name_;
};

// ---------------------------------------------------------------------------

class EqualityQp final : public Problem {
 public:
  EqualityQp(std::string name, Matrix Q, Vector q, Matrix A, Vector b)
      : name_(std::move(name)),
        Q_(std::move(Q)),
        q_(std::move(q)),
        A_(std::move(A)),
        b_(std::move(b)) {
    const Index nn = Q_.rows();
    const Index mm = A_.rows();
    Matrix K(nn + mm, nn + mm);
    K.topLeftCorner(nn, nn) = Q_;
    K.topRightCorner(nn, mm) = A_.transpose();
    K.bottomLeftCorner(mm, nn) = A_;
    K.bottomRightCorner(mm, mm).setZero();
    Vector rhs(nn + mm);
    rhs << -q_, b_;
    Eigen::FullPivLU<Matrix> lu(K);
    if (lu.isInvertible()) ref_ = Vector(lu.solve(rhs).head(nn));
  }

  const std::string& name() const override { return name_; }
  Index n() const override { return Q_.rows(); }
  Index m() const override { return A_.rows(); }
  std::optional<long> sample_count() const override { return 1; }

  double f_true(const Vector& x) const override {
    return 0.5 * x.dot(Q_ * x) + q_.dot(x);
  }
  Vector g_true(const Vector& x) const override { return Q_ * x + q_; }
  Vector g_sample(const Vector& x, long, Rng&) const override { return g_true(x); }
  Vector c(const Vector& x) const override { return A_ * x - b_; }
  Matrix jac(const Vector&) const override { return A_; }
  std::optional<Vector> reference_solution() const override { return ref_; }

 private:
  std::string name_;
  Matrix Q_;
  Vector q_;
  Matrix A_;
  Vector b_;
  std::optional<Vector> ref_;
};

class RosenbrockLinear final : public Problem {
 public:
  RosenbrockLinear(std::string name, Matrix A, Vector b)
      : name_(std::move(name)), A_(std::move(A)), b_(std::move(b)) {}

  const std::string& name() const override { return name_; }
  Index n() const override { return A_.cols(); }
  Index m() const override { return A_.rows(); }
  std::optional<long> sample_count() const override { return 1; }

  double f_true(const Vector& x) const override {
    double total = 0.0;
    for (Index i = 0; i + 1 < x.size(); ++i) {
      const double a = x(i + 1) - x(i) * x(i);
      const double bterm = 1.0 - x(i);
      total += 100.0 * a * a + bterm * bterm;
    }
    return total;
  }

  Vector g_true(const Vector& x) const override {
    Vector g = Vector::Zero(x.size());
    for (Index i = 0; i + 1 < x.size(); ++i) {
      const double a = x(i + 1) - x(i) * x(i);
      g(i) += -400.0 * x(i) * a - 2.0 * (1.0 - x(i));
      g(i + 1) += 200.0 * a;
    }
    return g;
  }

  Vector g_sample(const Vector& x, long, Rng&) const override { return g_true(x); }
  Vector c(const Vector& x) const override { return A_ * x - b_; }
  Matrix jac(const Vector&) const override { return A_; }

 private:
  std::string name_;
  Matrix A_;
  Vector b_;
};

class SphereQuadratic final : public Problem {
 public:
  SphereQuadratic(std::string name, Matrix Q, Vector q)
      : name_(std::move(name)), Q_(std::move(Q)), q_(std::move(q)) {}

  const std::string& name() const override { return name_; }
  Index n() const override { return Q_.rows(); }
  Index m() const override { return 1; }
  std::optional<long> sample_count() const override { return 1; }

  double f_true(const Vector& x) const override {
    return 0.5 * x.dot(Q_ * x) + q_.dot(x);
  }
  Vector g_true(const Vector& x) const override { return Q_ * x + q_; }
  Vector g_sample(const Vector& x, long, Rng&) const override { return g_true(x); }

  Vector c(const Vector& x) const override {
    Vector out(1);
    out(0) = x.squaredNorm() - 1.0;
    return out;
  }
  Matrix jac(const Vector& x) const override { return 2.0 * x.transpose(); }

 private:
  std::string name_;
  Matrix Q_;
  Vector q_;
};

Matrix random_spd(Rng& rng, Index n) {
  Matrix M = random_matrix(rng, n, n);
  return (M * M.transpose()) / static_cast<double>(n) + Matrix::Identity(n, n);
}

}  // namespace

// ---------------------------------------------------------------------------

Dataset load_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_libsvm: cannot open " + path);

  struct Row {
    double label;
    std::vector<std::pair<Index, double>> feats;
    std::size_t line;
  };
  std::vector<Row> rows;
  Index max_index = 0;
  bool saw_zero_label = false;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank or comment-only line

    char* end = nullptr;
    const long lab = std::strtol(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0' || (lab != 1 && lab != -1 && lab != 0)) {
      throw ParseError("invalid label '" + tok + "'", lineno);
    }
    if (lab == 0) saw_zero_label = true;

    Row row{static_cast<double>(lab), {}, lineno};
    Index prev_index = 0;
    while (ls >> tok) {
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size()) {
        throw ParseError("malformed feature '" + tok + "'", lineno);
      }
      const std::string idx_str = tok.substr(0, colon);
      const std::string val_str = tok.substr(colon + 1);
      const long idx = std::strtol(idx_str.c_str(), &end, 10);
      if (end == idx_str.c_str() || *end != '\0' || idx < 1) {
        throw ParseError("invalid feature index '" + idx_str + "'", lineno);
      }
      if (idx <= prev_index) {
        throw ParseError("feature indices must be strictly ascending", lineno);
      }
      const double val = std::strtod(val_str.c_str(), &end);
      if (end == val_str.c_str() || *end != '\0' || !std::isfinite(val)) {
        throw ParseError("invalid feature value '" + val_str + "'", lineno);
      }
      prev_index = idx;
      row.feats.emplace_back(static_cast<Index>(idx - 1), val);
    }
    max_index = std::max(max_index, prev_index ? static_cast<Index>(prev_index) : Index{0});
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("file contains no samples", lineno);

  Dataset ds;
  ds.X = Matrix::Zero(max_index, static_cast<Index>(rows.size()));
  ds.y = Vector(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double lab = rows[i].label;
    if (saw_zero_label) {
      if (lab == -1.0) throw ParseError("labels mix 0/1 and -1/+1 conventions", rows[i].line);
      lab = lab == 0.0 ? -1.0 : 1.0;
    }
    ds.y(static_cast<Index>(i)) = lab;
    for (const auto& [idx, val] : rows[i].feats) ds.X(idx, static_cast<Index>(i)) = val;
  }
  return ds;
}

void write_libsvm(const std::string& path, const Dataset& ds) {
  if (ds.n() < 1 || ds.N() < 1) {
    throw ContractViolation("write_libsvm: dataset must have at least one feature and sample");
  }
  validate_labels(ds);
  std::ofstream out(path);
  if (!out) throw IoError("write_libsvm: cannot open " + path + " for writing");
  char buf[64];
  for (Index i = 0; i < ds.N(); ++i) {
    out << (ds.y(i) > 0 ? "+1" : "-1");
    for (Index j = 0; j < ds.n(); ++j) {
      if (ds.X(j, i) != 0.0) {
        std::snprintf(buf, sizeof(buf), "%.17g", ds.X(j, i));
        out << ' ' << (j + 1) << ':' << buf;
      }
    }
    // Keep the dimension observable even when trailing features are zero.
    if (i == 0 && ds.X(ds.n() - 1, 0) == 0.0) out << ' ' << ds.n() << ":0";
    out << '\n';
  }
  if (!out) throw IoError("write_libsvm: write failed for " + path);
}

Vector logistic_sample_gradient(const Dataset& ds, const Vector& x, long i) {
  if (i < 0 || i >= ds.N()) {
    throw ContractViolation("logistic_sample_gradient: sample index out of range");
  }
  const Index col = static_cast<Index>(i);
  const double t = ds.y(col) * ds.X.col(col).dot(x);
  const double tc = std::clamp(t, -30.0, 30.0);
  return (-ds.y(col) / (1.0 + std::exp(tc))) * ds.X.col(col);
}

ProblemPtr build_logistic_problem(std::string name, Dataset ds, Index m_lin, std::uint64_t seed,
                                  double b2) {
  return std::make_shared<LogisticConstrainedProblem>(std::move(name), std::move(ds), m_lin,
                                                      seed, b2);
}

Dataset synthetic_logistic_dataset(Index N, Index n, std::uint64_t seed) {
  if (N < 1 || n < 1) throw ContractViolation("synthetic_logistic_dataset: N and n must be >= 1");
  Rng rng(seed);
  Dataset ds;
  ds.X = random_matrix(rng, n, N);
  Vector w = random_vector(rng, n);
  ds.y = Vector(N);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index i = 0; i < N; ++i) {
    const double margin = ds.X.col(i).dot(w) + 0.3 * gauss(rng);
    ds.y(i) = margin >= 0.0 ? 1.0 : -1.0;
  }
  return ds;
}

ProblemPtr with_additive_noise(ProblemPtr inner, double eps) {
  if (!inner) throw ContractViolation("with_additive_noise: inner problem is null");
  return std::make_shared<AdditiveNoiseProblem>(std::move(inner), eps);
}

std::vector<ProblemPtr> synthetic_suite(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ProblemPtr> suite;
  for (Index n : {Index{10}, Index{50}, Index{100}}) {
    const std::string tag = std::to_string(n);
    {
      const Index m = std::max<Index>(1, n / 5);
      Matrix Q = random_spd(rng, n);
      Vector q = random_vector(rng, n);
      Matrix A = random_full_rank(rng, m, n);
      Vector b = random_vector(rng, m);
      suite.push_back(std::make_shared<EqualityQp>("qp" + tag, std::move(Q), std::move(q),
                                                   std::move(A), std::move(b)));
    }
    {
      const Index m = std::max<Index>(1, n / 10);
      Matrix A = random_full_rank(rng, m, n);
      Vector b = random_vector(rng, m);
      suite.push_back(
          std::make_shared<RosenbrockLinear>("rosen" + tag, std::move(A), std::move(b)));
    }
    {
      Matrix Q = random_spd(rng, n);
      Vector q = random_vector(rng, n);
      suite.push_back(
          std::make_shared<SphereQuadratic>("sphere" + tag, std::move(Q), std::move(q)));
    }
  }
  for (const auto& p : suite) {
    if (min_singular_value(p->jac(p->x0())) <= 1e-8) {
      std::cerr << "warning: suite problem " << p->name()
                << " fails the rank filter at the initial point\n";
    }
  }
  return suite;
}

ProblemPtr make_equality_qp(std::string name, Matrix Q, Vector q, Matrix A, Vector b) {
  if (Q.rows() < 1 || Q.rows() != Q.cols()) {
    throw ContractViolation("make_equality_qp: Q must be square and nonempty");
  }
  if (q.size() != Q.rows()) throw ContractViolation("make_equality_qp: q length must match Q");
  if (A.rows() < 1 || A.cols() != Q.rows()) {
    throw ContractViolation("make_equality_qp: A must be m x n with m >= 1");
  }
  if (b.size() != A.rows()) throw ContractViolation("make_equality_qp: b length must match A");
  return std::make_shared<EqualityQp>(std::move(name), std::move(Q), std::move(q), std::move(A),
                                      std::move(b));
}

ProblemPtr make_identity_qp(Index n, Index m, std::uint64_t seed) {
  if (n < 1 || m < 1 || m > n) throw ContractViolation("make_identity_qp: need 1 <= m <= n");
  Rng rng(seed);
  Vector q = random_vector(rng, n);
  Matrix A = random_full_rank(rng, m, n);
  Vector b = random_vector(rng, m);
  const std::string name =
      "idqp" + std::to_string(n) + "m" + std::to_string(m) + "s" + std::to_string(seed);
  return std::make_shared<EqualityQp>(name, Matrix::Identity(n, n), std::move(q), std::move(A),
                                      std::move(b));
}

}  // namespace stochsqp
