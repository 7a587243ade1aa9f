#include "osearch/poly.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace osearch {

int SymLaurentPoly::degree(double tol) const {
  for (int j = n() - 1; j >= 1; --j)
    if (std::abs(c[j]) > tol) return j;
  return 0;
}

// Clenshaw for c_0 + 2 sum_{j>=1} c_j cos(j theta): run the Chebyshev
// recurrence on the cosine argument x = cos theta with b_j = 2 c_j, then
// subtract the double-counted constant.
double SymLaurentPoly::eval(double theta) const {
  if (c.empty()) return 0.0;
  const double x = std::cos(theta);
  double u1 = 0.0, u2 = 0.0;
  for (int j = n() - 1; j >= 1; --j) {
    double u0 = 2.0 * c[j] + 2.0 * x * u1 - u2;
    u2 = u1;
    u1 = u0;
  }
  return c[0] + x * u1 - u2;
}

double SymLaurentPoly::eval_extended(double theta) const {
  if (c.empty()) return 0.0;
  const long double x = std::cos(static_cast<long double>(theta));
  long double u1 = 0.0L, u2 = 0.0L;
  for (int j = n() - 1; j >= 1; --j) {
    long double u0 = 2.0L * static_cast<long double>(c[j]) + 2.0L * x * u1 - u2;
    u2 = u1;
    u1 = u0;
  }
  return static_cast<double>(static_cast<long double>(c[0]) + x * u1 - u2);
}

double ChebForm::eval(double x) const {
  if (b.empty()) return 0.0;
  double u1 = 0.0, u2 = 0.0;
  for (int j = size() - 1; j >= 1; --j) {
    double u0 = b[j] + 2.0 * x * u1 - u2;
    u2 = u1;
    u1 = u0;
  }
  return b[0] + x * u1 - u2;
}

long double ChebForm::eval_extended(long double x) const {
  if (b.empty()) return 0.0L;
  long double u1 = 0.0L, u2 = 0.0L;
  for (int j = size() - 1; j >= 1; --j) {
    long double u0 = static_cast<long double>(b[j]) + 2.0L * x * u1 - u2;
    u2 = u1;
    u1 = u0;
  }
  return static_cast<long double>(b[0]) + x * u1 - u2;
}

// d/dx sum b_j T_j = sum b'_j T_j with the standard backward recurrence
// b'_{j-1} = b'_{j+1} + 2 j b_j (and the j = 1 term halved).
ChebForm ChebForm::derivative() const {
  const int m = size();
  if (m <= 1) return ChebForm{{0.0}};
  std::vector<double> d(static_cast<size_t>(m - 1), 0.0);
  double next2 = 0.0, next1 = 0.0;  // b'_{j+2}, b'_{j+1} while descending
  for (int j = m - 1; j >= 1; --j) {
    double cur = next2 + 2.0 * j * b[j];
    d[static_cast<size_t>(j - 1)] = cur;
    next2 = next1;
    next1 = cur;
  }
  d[0] *= 0.5;
  return ChebForm{std::move(d)};
}

ChebForm to_cheb(const SymLaurentPoly& p) {
  ChebForm q;
  q.b.resize(p.c.size());
  for (size_t j = 0; j < p.c.size(); ++j) q.b[j] = (j == 0) ? p.c[0] : 2.0 * p.c[j];
  return q;
}

SymLaurentPoly from_cheb(const ChebForm& q) {
  SymLaurentPoly p;
  p.c.resize(q.b.size());
  for (size_t j = 0; j < q.b.size(); ++j) p.c[j] = (j == 0) ? q.b[0] : 0.5 * q.b[j];
  return p;
}

SymLaurentPoly fejer_kernel(int n) {
  require(n >= 1, "fejer_kernel: n must be positive");
  SymLaurentPoly p;
  p.c.resize(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) p.c[static_cast<size_t>(j)] = static_cast<double>(n - j) / n;
  return p;
}

double fejer_eval(int n, double theta) {
  require(n >= 1, "fejer_eval: n must be positive");
  const double s = std::sin(theta / 2.0);
  // Near theta = 0 (mod 2 pi) the ratio tends to n; switch to the limit
  // before the division degrades.
  if (std::abs(s) < 1e-12) return static_cast<double>(n);
  const double r = std::sin(n * theta / 2.0) / s;
  return r * r / n;
}

cd generalized_trace(const Eigen::MatrixXcd& A, int j) {
  const int n = static_cast<int>(A.rows());
  require(A.cols() == n, "generalized_trace: matrix must be square");
  if (std::abs(j) >= n) return cd(0.0, 0.0);
  cd s(0.0, 0.0);
  if (j >= 0) {
    for (int i = 0; i + j < n; ++i) s += A(i, i + j);
  } else {
    for (int i = 0; i - j < n; ++i) s += A(i - j, i);
  }
  return s;
}

cd cyclic_trace(const Eigen::MatrixXcd& A, int j) {
  const int n = static_cast<int>(A.rows());
  require(A.cols() == n, "cyclic_trace: matrix must be square");
  require(std::abs(j) < n, "cyclic_trace: |j| must be below the dimension");
  return generalized_trace(A, j) + generalized_trace(A, j >= 0 ? j - n : j + n);
}

SymLaurentPoly gram_to_poly(const Eigen::MatrixXcd& A, double* imag_residual) {
  const int n = static_cast<int>(A.rows());
  require(A.cols() == n, "gram_to_poly: matrix must be square");
  SymLaurentPoly p;
  p.c.resize(static_cast<size_t>(n));
  double worst = 0.0;
  for (int j = 0; j < n; ++j) {
    const cd t = generalized_trace(A, j);
    p.c[static_cast<size_t>(j)] = t.real();
    worst = std::max(worst, std::abs(t.imag()));
  }
  if (imag_residual) *imag_residual = worst;
  return p;
}

namespace {

// Shortest decimal digits that round trip a double.
std::string round_trip(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  require(ec == std::errc(), "round_trip: to_chars failed");
  return std::string(buf, ptr);
}

}  // namespace

void save_csv(const SymLaurentPoly& p, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), fmt::format("save_csv: cannot open '{}'", path));
  out << "j,c\n";
  for (int j = 0; j < p.n(); ++j)
    out << j << ',' << round_trip(p.c[static_cast<size_t>(j)]) << '\n';
  out.close();
  require(out.good(), fmt::format("save_csv: write to '{}' failed", path));
}

SymLaurentPoly load_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), fmt::format("load_csv: cannot open '{}'", path));
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "load_csv: empty file");
  // Tolerate trailing carriage returns and whitespace in the header.
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  require(line == "j,c", fmt::format("load_csv: bad header '{}'", line));
  SymLaurentPoly p;
  int expect = 0;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, fmt::format("load_csv: bad row '{}'", line));
    int j = -1;
    auto r1 = std::from_chars(line.data(), line.data() + comma, j);
    require(r1.ec == std::errc() && r1.ptr == line.data() + comma,
            fmt::format("load_csv: bad index in '{}'", line));
    require(j == expect, fmt::format("load_csv: expected index {}, got {}", expect, j));
    double v = 0.0;
    const char* vb = line.data() + comma + 1;
    const char* ve = line.data() + line.size();
    auto r2 = std::from_chars(vb, ve, v);
    require(r2.ec == std::errc() && r2.ptr == ve,
            fmt::format("load_csv: bad value in '{}'", line));
    p.c.push_back(v);
    ++expect;
  }
  require(!p.c.empty(), "load_csv: no coefficient rows");
  return p;
}

}  // namespace osearch
