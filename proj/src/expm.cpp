#include "osmose/expm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace osmose {

namespace {

double vec_norm_inf(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// One pass of the truncated-Taylor sub-stepping at a fixed sub-step count.
// Returns false if any sub-step fails to converge below the degree cap.
bool taylor_substeps(const SparseOperator& a, std::vector<double>& u, double tau, double tol,
                     double mu, long s) {
  constexpr int kDegreeCap = 150;
  const double alpha = tau / static_cast<double>(s);
  const double eta = std::exp(alpha * mu);
  const int n = a.size();
  std::vector<double> term = u, tmp(n);

  for (long step = 0; step < s; ++step) {
    term = u;
    std::vector<double>& w = u;  // partial sum accumulates in place
    int consecutive_small = 0;
    bool converged = false;
    for (int k = 1; k <= kDegreeCap; ++k) {
      double term_norm = 0.0, sum_norm = 0.0;
      a.taylor_update(term.data(), tmp.data(), w.data(), alpha / k, mu, term_norm, sum_norm);
      term.swap(tmp);
      if (!std::isfinite(term_norm)) return false;
      if (term_norm <= tol * sum_norm) {
        if (++consecutive_small >= 2) {
          converged = true;
          break;
        }
      } else {
        consecutive_small = 0;
      }
    }
    if (!converged) return false;
    for (int r = 0; r < n; ++r) w[r] *= eta;
  }
  return true;
}

}  // namespace

std::vector<double> expm_action(const SparseOperator& a, const std::vector<double>& b, double tau,
                                double tol, bool shift) {
  if (static_cast<int>(b.size()) != a.size()) throw std::invalid_argument("expm_action: size mismatch");
  if (!(tau > 0.0)) throw std::invalid_argument("expm_action: tau must be > 0");
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("expm_action: tol must be in (0,1)");
  if (!all_finite(b)) throw std::invalid_argument("expm_action: non-finite input");

  const double mu = shift ? a.trace() / a.size() : 0.0;
  const double norm = tau * a.shifted_norm1(mu);
  long s = std::max(1L, static_cast<long>(std::ceil(norm)));

  for (int attempt = 0; attempt <= 6; ++attempt) {
    std::vector<double> u = b;
    if (taylor_substeps(a, u, tau, tol, mu, s)) return u;
    s *= 2;
  }
  throw std::runtime_error("expm_action: Taylor series failed to converge (pathological operator)");
}

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_operator(const SparseOperator& op, double scale) {
  DenseMatrix m(op.size());
  for (int r = 0; r < op.size(); ++r)
    for (int k = op.row_ptr()[r]; k < op.row_ptr()[r + 1]; ++k)
      m.at(r, op.col_idx()[k]) += scale * op.values()[k];
  return m;
}

DenseMatrix DenseMatrix::multiply(const DenseMatrix& other) const {
  DenseMatrix out(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const double aik = at(i, k);
      if (aik == 0.0) continue;
      const double* brow = &other.a[static_cast<size_t>(k) * n];
      double* orow = &out.a[static_cast<size_t>(i) * n];
      for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

std::vector<double> DenseMatrix::apply(const std::vector<double>& x) const {
  std::vector<double> y(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += at(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

double DenseMatrix::norm1() const {
  double m = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::abs(at(i, j));
    m = std::max(m, s);
  }
  return m;
}

DenseMatrix dense_expm_reference(const DenseMatrix& m) {
  if (m.n > 400) throw std::invalid_argument("dense_expm_reference: dimension capped at 400");
  for (double v : m.a)
    if (!std::isfinite(v)) throw std::invalid_argument("dense_expm_reference: non-finite entry");

  // Shift by the smallest diagonal entry. For generators this makes the
  // scaled matrix entrywise nonnegative, so the Taylor core and the squarings
  // involve no cancellation; the scalar factor is folded into each squaring
  // level to keep every intermediate at unit scale.
  double alpha = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m.n; ++i) alpha = std::min(alpha, m.at(i, i));
  if (!std::isfinite(alpha)) alpha = 0.0;

  DenseMatrix b = m;
  for (int i = 0; i < m.n; ++i) b.at(i, i) -= alpha;

  int squarings = 0;
  double norm = b.norm1();
  while (norm > 0.5) {
    norm *= 0.5;
    ++squarings;
  }
  const double scale = std::ldexp(1.0, -squarings);
  for (double& v : b.a) v *= scale;

  DenseMatrix p = DenseMatrix::identity(m.n);
  DenseMatrix term = DenseMatrix::identity(m.n);
  for (int k = 1; k <= 30; ++k) {
    term = b.multiply(term);
    const double inv = 1.0 / k;
    for (double& v : term.a) v *= inv;
    for (size_t idx = 0; idx < p.a.size(); ++idx) p.a[idx] += term.a[idx];
  }

  const double eta = std::exp(alpha * scale);
  for (double& v : p.a) v *= eta;
  for (int j = 0; j < squarings; ++j) p = p.multiply(p);
  return p;
}

std::pair<std::vector<double>, EvolutionTrace> evolve(const SparseOperator& a,
                                                      const std::vector<double>& f,
                                                      const StepperConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw std::invalid_argument("evolve: tau must be > 0");
  if (cfg.max_steps < 1) throw std::invalid_argument("evolve: max_steps must be >= 1");
  if (cfg.steady_tol < 0.0) throw std::invalid_argument("evolve: steady_tol must be >= 0");
  if (static_cast<int>(f.size()) != a.size()) throw std::invalid_argument("evolve: size mismatch");

  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto min_of = [](const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); };

  std::vector<double> u = f;
  EvolutionTrace trace;
  trace.mean.push_back(mean_of(u));
  trace.min_value.push_back(min_of(u));

  for (int k = 0; k < cfg.max_steps; ++k) {
    std::vector<double> next = expm_action(a, u, cfg.tau, cfg.tol);
    const double denom = vec_norm_inf(u);
    double diff = 0.0;
    for (size_t r = 0; r < u.size(); ++r) diff = std::max(diff, std::abs(next[r] - u[r]));
    const double residual = denom > 0.0 ? diff / denom : diff;

    u = std::move(next);
    trace.mean.push_back(mean_of(u));
    trace.min_value.push_back(min_of(u));
    trace.residual.push_back(residual);
    trace.steps = k + 1;
    if (residual < cfg.steady_tol) break;
  }
  return {std::move(u), std::move(trace)};
}

void write_trace_csv(const EvolutionTrace& trace, std::ostream& out) {
  out << "step,mean,min,residual\n";
  for (size_t k = 0; k < trace.mean.size(); ++k) {
    out << k << ',' << trace.mean[k] << ',' << trace.min_value[k] << ',';
    if (k == 0)
      out << 0.0;
    else
      out << trace.residual[k - 1];
    out << '\n';
  }
}

}  // namespace osmose
