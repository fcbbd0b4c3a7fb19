#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lipkey/image.hpp"

namespace lipkey {

// Dense row-major matrix, only as much as the Bezier evaluation needs.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// Row i holds the degree n-1 Bernstein basis evaluated at t_i = i / (n - 1).
Matrix bernstein_matrix(int n);

struct CurvatureTest {
  bool smile = false;
  // Interior curve mean y minus endpoint mean y (positive: interior lower
  // in the image than the corners).
  double margin = 0.0;
};

// Bezier shape test over points used as a control polygon (sorted by x
// with a stable sort). Smile when the interior of the curve sags more than
// epsilon_y pixels below the endpoint mean (image y grows downward).
CurvatureTest algo1_test(std::span<const Point2D> points, double epsilon_y = 2.0);
bool algo1_classify(std::span<const Point2D> points, double epsilon_y = 2.0);

// Natural cubic spline through the points (sorted by x, equal x values
// averaged), sampled at `count` evenly spaced x positions, endpoints included.
std::vector<Point2D> spline_resample(std::span<const Point2D> points, int count = 50);

// y = a x^2 + b x + c
struct Quadratic {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double operator()(double x) const { return (a * x + b) * x + c; }
};

// Least squares via the normal equations. x is standardized internally so
// the 3x3 system stays well conditioned for pixel-scale inputs.
Quadratic fit_quadratic(std::span<const Point2D> points);

struct Vertex {
  double x = 0.0;
  double y = 0.0;
  double discriminant = 0.0;
};

// (-b / 2a, -(b^2 - 4ac) / 4a). Throws DegenerateError for |a| <= 1e-12.
Vertex vertex(const Quadratic& q);
double vertex_distance(const Vertex& a, const Vertex& b);

enum class State { State1, State2, State3, State4, Unrecognized };
enum class Expression { Neutral, Smile, Laugh, Unrecognized };

std::string_view to_string(State s);
std::string_view to_string(Expression e);
Expression parse_expression(std::string_view s);
State parse_state(std::string_view s);

// Distance limits of the vertex-distance decision table.
struct Thresholds {
  double d1 = 2500.0;
  double d2 = 3000.0;
  double d3 = 2000.0;
  double d4_low = 5000.0;
  double d4_high = 7000.0;

  void validate() const;
};

// Row lookup on (a1 < 0, a2 < 0) with strict distance comparisons.
State table2_classify(double a1, double a2, double dist, const Thresholds& th);
// Same, but either vertex farther than v_max from the origin is unrecognized.
State table2_classify(const Quadratic& q1, const Vertex& v1, const Quadratic& q2,
                      const Vertex& v2, const Thresholds& th, double v_max);

// State -> expression lookup. Defaults: states 1-2 smile, states 3-4 laugh,
// unrecognized stays unrecognized.
class StateMap {
 public:
  StateMap();
  // "state1:smile,state2:smile,..." Entries not listed keep their default.
  static StateMap parse(std::string_view spec);
  std::string format() const;

  Expression operator()(State s) const { return map_.at(s); }
  void set(State s, Expression e) { map_[s] = e; }

 private:
  std::map<State, Expression> map_;
};

}  // namespace lipkey
