#include "lipkey/recognize.hpp"

#include <algorithm>
#include <cmath>

#include "lipkey/error.hpp"

namespace lipkey {

Matrix bernstein_matrix(int n) {
  if (n < 2) throw SizeError("Bernstein matrix needs n >= 2");
  Matrix m{n, n, std::vector<double>(static_cast<std::size_t>(n) * n, 0.0)};
  const int degree = n - 1;
  // Log-space binomials: C(degree, j) overflows doubles past ~1000 points.
  std::vector<double> log_binom(n);
  for (int j = 0; j < n; ++j) {
    log_binom[j] = std::lgamma(degree + 1.0) - std::lgamma(j + 1.0) - std::lgamma(degree - j + 1.0);
  }
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / degree;
    if (i == 0) {
      m.at(i, 0) = 1.0;
      continue;
    }
    if (i == degree) {
      m.at(i, degree) = 1.0;
      continue;
    }
    const double lt = std::log(t);
    const double l1t = std::log1p(-t);
    for (int j = 0; j < n; ++j) {
      m.at(i, j) = std::exp(log_binom[j] + j * lt + (degree - j) * l1t);
    }
  }
  return m;
}

CurvatureTest algo1_test(std::span<const Point2D> points, double epsilon_y) {
  if (points.size() < 3) throw SizeError("curvature test needs at least three points");
  std::vector<Point2D> ctrl(points.begin(), points.end());
  std::stable_sort(ctrl.begin(), ctrl.end(), [](const Point2D& a, const Point2D& b) { return a.x < b.x; });
  const int n = static_cast<int>(ctrl.size());
  const Matrix basis = bernstein_matrix(n);
  double interior = 0.0;
  for (int i = 1; i + 1 < n; ++i) {
    double y = 0.0;
    for (int j = 0; j < n; ++j) y += basis.at(i, j) * ctrl[j].y;
    interior += y;
  }
  interior /= static_cast<double>(n - 2);
  const double endpoints = 0.5 * (ctrl.front().y + ctrl.back().y);
  CurvatureTest out;
  out.margin = interior - endpoints;
  out.smile = out.margin > epsilon_y;
  return out;
}

bool algo1_classify(std::span<const Point2D> points, double epsilon_y) {
  return algo1_test(points, epsilon_y).smile;
}

std::vector<Point2D> spline_resample(std::span<const Point2D> points, int count) {
  if (count < 2) throw ParamError("spline sample count must be >= 2");
  std::vector<Point2D> sorted(points.begin(), points.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const Point2D& a, const Point2D& b) { return a.x < b.x; });
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < sorted.size() && sorted[j].x == sorted[i].x) sum += sorted[j++].y;
    xs.push_back(sorted[i].x);
    ys.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  const std::size_t n = xs.size();
  if (n < 3) throw SizeError("spline needs at least three distinct x values");

  // Natural boundary: second derivatives vanish at both ends. Tridiagonal
  // system for the interior second derivatives, solved by the Thomas sweep.
  std::vector<double> m(n, 0.0);
  std::vector<double> diag(n), upper(n), rhs(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = xs[i] - xs[i - 1];
    const double h1 = xs[i + 1] - xs[i];
    diag[i] = 2.0 * (h0 + h1);
    upper[i] = h1;
    rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
  }
  for (std::size_t i = 2; i + 1 < n; ++i) {
    const double lower = xs[i] - xs[i - 1];
    const double f = lower / diag[i - 1];
    diag[i] -= f * upper[i - 1];
    rhs[i] -= f * rhs[i - 1];
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m[i] = (rhs[i] - (i + 2 < n ? upper[i] * m[i + 1] : 0.0)) / diag[i];
    if (i == 1) break;
  }

  auto eval = [&](double x) {
    std::size_t k = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
    k = std::clamp<std::size_t>(k, 1, n - 1) - 1;
    const double h = xs[k + 1] - xs[k];
    const double a = (xs[k + 1] - x) / h;
    const double b = (x - xs[k]) / h;
    return a * ys[k] + b * ys[k + 1] +
           ((a * a * a - a) * m[k] + (b * b * b - b) * m[k + 1]) * h * h / 6.0;
  };
  std::vector<Point2D> out;
  out.reserve(static_cast<std::size_t>(count));
  const double x0 = xs.front();
  const double x1 = xs.back();
  for (int i = 0; i < count; ++i) {
    const double x = i + 1 == count ? x1 : x0 + (x1 - x0) * i / (count - 1);
    out.push_back({x, eval(x)});
  }
  return out;
}

Quadratic fit_quadratic(std::span<const Point2D> points) {
  if (points.size() < 3) throw FitError("quadratic fit needs at least three points");
  std::vector<double> distinct;
  for (const auto& p : points) distinct.push_back(p.x);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw FitError("quadratic fit needs three distinct x values");

  double mean = 0.0;
  for (const auto& p : points) mean += p.x;
  mean /= static_cast<double>(points.size());
  double spread = 0.0;
  for (const auto& p : points) spread = std::max(spread, std::abs(p.x - mean));

  // Normal equations in u = (x - mean) / spread.
  double s[5] = {};
  double t[3] = {};
  for (const auto& p : points) {
    const double u = (p.x - mean) / spread;
    double pw = 1.0;
    for (int k = 0; k < 5; ++k) {
      s[k] += pw;
      if (k < 3) t[k] += pw * p.y;
      pw *= u;
    }
  }
  double a[3][4] = {
      {s[0], s[1], s[2], t[0]},
      {s[1], s[2], s[3], t[1]},
      {s[2], s[3], s[4], t[2]},
  };
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-14 * s[0]) throw FitError("rank-deficient quadratic fit");
    std::swap(a[col], a[pivot]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
    }
  }
  double coef[3];
  for (int r = 2; r >= 0; --r) {
    double v = a[r][3];
    for (int c = r + 1; c < 3; ++c) v -= a[r][c] * coef[c];
    coef[r] = v / a[r][r];
  }
  // y = c0 + c1 u + c2 u^2 back in x.
  const double c0 = coef[0];
  const double c1 = coef[1] / spread;
  const double c2 = coef[2] / (spread * spread);
  return {c2, c1 - 2.0 * c2 * mean, c0 - c1 * mean + c2 * mean * mean};
}

Vertex vertex(const Quadratic& q) {
  if (!(std::abs(q.a) > 1e-12)) throw DegenerateError("quadratic has no vertex (a ~ 0)");
  Vertex v;
  v.discriminant = q.b * q.b - 4.0 * q.a * q.c;
  v.x = -q.b / (2.0 * q.a);
  v.y = -v.discriminant / (4.0 * q.a);
  return v;
}

double vertex_distance(const Vertex& a, const Vertex& b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::string_view to_string(State s) {
  switch (s) {
    case State::State1: return "state1";
    case State::State2: return "state2";
    case State::State3: return "state3";
    case State::State4: return "state4";
    case State::Unrecognized: return "unrecognized";
  }
  return "unrecognized";
}

std::string_view to_string(Expression e) {
  switch (e) {
    case Expression::Neutral: return "neutral";
    case Expression::Smile: return "smile";
    case Expression::Laugh: return "laugh";
    case Expression::Unrecognized: return "unrecognized";
  }
  return "unrecognized";
}

Expression parse_expression(std::string_view s) {
  for (auto e : {Expression::Neutral, Expression::Smile, Expression::Laugh, Expression::Unrecognized}) {
    if (s == to_string(e)) return e;
  }
  throw ParamError("unknown expression '" + std::string(s) + "'");
}

State parse_state(std::string_view s) {
  for (auto st : {State::State1, State::State2, State::State3, State::State4, State::Unrecognized}) {
    if (s == to_string(st)) return st;
  }
  throw ParamError("unknown state '" + std::string(s) + "'");
}

void Thresholds::validate() const {
  for (double d : {d1, d2, d3, d4_low, d4_high}) {
    if (!(d > 0.0) || !std::isfinite(d)) throw ParamError("distance thresholds must be positive");
  }
  if (d4_low > d4_high) throw ParamError("d4_low must not exceed d4_high");
}

State table2_classify(double a1, double a2, double dist, const Thresholds& th) {
  const bool neg1 = a1 < 0.0;
  const bool neg2 = a2 < 0.0;
  if (!neg1 && !neg2) return dist > th.d1 ? State::State1 : State::Unrecognized;
  if (!neg1 && neg2) return dist > th.d2 ? State::State2 : State::Unrecognized;
  if (neg1 && !neg2) return dist > th.d3 ? State::State3 : State::Unrecognized;
  return (dist < th.d4_low || dist > th.d4_high) ? State::State4 : State::Unrecognized;
}

State table2_classify(const Quadratic& q1, const Vertex& v1, const Quadratic& q2,
                      const Vertex& v2, const Thresholds& th, double v_max) {
  if (std::hypot(v1.x, v1.y) > v_max || std::hypot(v2.x, v2.y) > v_max) return State::Unrecognized;
  return table2_classify(q1.a, q2.a, vertex_distance(v1, v2), th);
}

StateMap::StateMap()
    : map_{{State::State1, Expression::Smile},
           {State::State2, Expression::Smile},
           {State::State3, Expression::Laugh},
           {State::State4, Expression::Laugh},
           {State::Unrecognized, Expression::Unrecognized}} {}

StateMap StateMap::parse(std::string_view spec) {
  StateMap m;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const std::size_t comma = std::min(spec.find(',', pos), spec.size());
    std::string_view item = spec.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      const auto colon = item.find(':');
      if (colon == std::string_view::npos) throw ParamError("state map entry needs state:label");
      m.set(parse_state(item.substr(0, colon)), parse_expression(item.substr(colon + 1)));
    }
    pos = comma + 1;
  }
  return m;
}

std::string StateMap::format() const {
  std::string out;
  for (const auto& [s, e] : map_) {
    if (!out.empty()) out += ',';
    out += std::string(to_string(s)) + ":" + std::string(to_string(e));
  }
  return out;
}

}  // namespace lipkey
