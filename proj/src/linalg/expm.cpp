#include "pdae/linalg/expm.hpp"

#include <array>
#include <cmath>
#include <span>

#include "pdae/error.hpp"
#include "pdae/linalg/lu.hpp"

namespace pdae {

namespace {

// Padé coefficients b_0..b_m of the [m/m] approximant to exp.
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                          25200.0,    1512.0,    56.0,      1.0};
constexpr std::array<double, 10> kPade9 = {17643225600.0, 8821612800.0, 2075673600.0,
                                           302702400.0,   30270240.0,   2162160.0,
                                           110880.0,      3960.0,       90.0,
                                           1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

// Largest 1-norms for which degree m reaches unit roundoff (Higham 2005).
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

struct PadeChoice {
  int degree;
  int squarings;
};

PadeChoice choose_pade(double norm) {
  if (norm <= kTheta3) return {3, 0};
  if (norm <= kTheta5) return {5, 0};
  if (norm <= kTheta7) return {7, 0};
  if (norm <= kTheta9) return {9, 0};
  int s = 0;
  if (norm > kTheta13) s = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
  return {13, s};
}

// The odd part of the numerator is U = X * Ut; V is the even part.
struct PadeTerms {
  DenseMatrix u_tilde;
  DenseMatrix u;
  DenseMatrix v;
};

void add_scaled(DenseMatrix& acc, double s, const DenseMatrix& x) {
  double* a = acc.data();
  const double* b = x.data();
  const std::size_t len = acc.rows() * acc.cols();
  for (std::size_t i = 0; i < len; ++i) a[i] += s * b[i];
}

void add_identity(DenseMatrix& acc, double s) {
  for (std::size_t i = 0; i < acc.rows(); ++i) acc(i, i) += s;
}

PadeTerms pade_terms(const DenseMatrix& x, int degree) {
  const std::size_t n = x.rows();
  const DenseMatrix x2 = x * x;
  PadeTerms t{DenseMatrix(n, n), DenseMatrix(n, n), DenseMatrix(n, n)};

  if (degree == 13) {
    const auto& b = kPade13;
    const DenseMatrix x4 = x2 * x2;
    const DenseMatrix x6 = x4 * x2;

    DenseMatrix inner(n, n);
    add_scaled(inner, b[13], x6);
    add_scaled(inner, b[11], x4);
    add_scaled(inner, b[9], x2);
    t.u_tilde = x6 * inner;
    add_scaled(t.u_tilde, b[7], x6);
    add_scaled(t.u_tilde, b[5], x4);
    add_scaled(t.u_tilde, b[3], x2);
    add_identity(t.u_tilde, b[1]);

    inner = DenseMatrix(n, n);
    add_scaled(inner, b[12], x6);
    add_scaled(inner, b[10], x4);
    add_scaled(inner, b[8], x2);
    t.v = x6 * inner;
    add_scaled(t.v, b[6], x6);
    add_scaled(t.v, b[4], x4);
    add_scaled(t.v, b[2], x2);
    add_identity(t.v, b[0]);
  } else {
    std::span<const double> b;
    switch (degree) {
      case 3: b = kPade3; break;
      case 5: b = kPade5; break;
      case 7: b = kPade7; break;
      case 9: b = kPade9; break;
      default: throw Error(ErrorCode::domain, "unsupported Padé degree");
    }
    // Even powers X^0, X^2, ..., X^{degree-1}.
    DenseMatrix power = DenseMatrix::identity(n);
    for (int k = 0; k <= degree; k += 2) {
      if (k > 0) power = power * x2;
      add_scaled(t.v, b[k], power);
      add_scaled(t.u_tilde, b[k + 1], power);
    }
  }
  t.u = x * t.u_tilde;
  return t;
}

void check_square(const DenseMatrix& a, const char* what) {
  require(a.square(), ErrorCode::dimension, std::string(what) + ": matrix is not square");
  require(all_finite(a.entries()), ErrorCode::domain,
          std::string(what) + ": matrix has non-finite entries");
}

}  // namespace

DenseMatrix expm(const DenseMatrix& a) {
  check_square(a, "expm");
  const std::size_t n = a.rows();
  if (n == 0) return {};

  const auto [degree, squarings] = choose_pade(norm_1(a));
  DenseMatrix x = a;
  if (squarings > 0) x *= std::ldexp(1.0, -squarings);

  const PadeTerms t = pade_terms(x, degree);
  const LuFactorization denom(t.v - t.u);
  DenseMatrix r = denom.solve(t.v + t.u);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

ExpPhi1 expm_phi1(const DenseMatrix& m, double tau) {
  check_square(m, "expm_phi1");
  require(tau >= 0.0 && std::isfinite(tau), ErrorCode::domain, "expm_phi1: tau must be >= 0");
  const std::size_t n = m.rows();
  if (tau == 0.0) return {DenseMatrix::identity(n), DenseMatrix(n, n)};

  // ||[[tau M, tau I], [0, 0]]||_1 = max(||tau M||_1, tau)
  const double norm = std::max(tau * norm_1(m), tau);
  const auto [degree, squarings] = choose_pade(norm);
  const double scale = std::ldexp(tau, -squarings);
  const DenseMatrix x = scale * m;

  const PadeTerms t = pade_terms(x, degree);
  const LuFactorization denom(t.v - t.u);
  ExpPhi1 out{denom.solve(t.v + t.u), denom.solve(t.u_tilde)};
  out.psi *= 2.0 * scale;

  // [[E, Psi], [0, I]]^2 = [[E^2, (E + I) Psi], [0, I]]
  for (int i = 0; i < squarings; ++i) {
    DenseMatrix next_psi = out.exp * out.psi;
    next_psi += out.psi;
    out.psi = std::move(next_psi);
    out.exp = out.exp * out.exp;
  }
  return out;
}

DenseVector affine_exp_integral(const DenseMatrix& m, double tau, const DenseVector& b0,
                                const DenseVector& b1) {
  check_square(m, "affine_exp_integral");
  require(tau >= 0.0 && std::isfinite(tau), ErrorCode::domain,
          "affine_exp_integral: tau must be >= 0");
  const std::size_t n = m.rows();
  require(b0.size() == n && b1.size() == n, ErrorCode::dimension,
          "affine_exp_integral: vector sizes do not match the matrix");
  if (tau == 0.0) return DenseVector(n);

  DenseMatrix w(n + 2, n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) w(i, j) = tau * m(i, j);
    w(i, n) = tau * b1[i];
    w(i, n + 1) = tau * b0[i];
  }
  w(n, n + 1) = tau;

  const DenseMatrix e = expm(w);
  DenseVector out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = e(i, n + 1);
  return out;
}

}  // namespace pdae
