#include "doctest.h"

#include <cmath>
#include <sstream>

#include "pinnopt/error.hpp"
#include "pinnopt/nn_core.hpp"
#include "pinnopt/pwl_approx.hpp"
#include "pinnopt/random.hpp"

using namespace pinnopt;

namespace {

NetworkParams random_net(rng::Engine& e, std::size_t n_in, std::size_t n_hidden, std::size_t n_out,
                         Activation hidden = Activation::tanh(), Activation output = Activation::tanh()) {
  NetworkParams p = NetworkParams::zeros(n_in, n_hidden, n_out, hidden, output);
  for (double& v : p.A.flat()) v = rng::uniform(e, -1, 1);
  for (double& v : p.B.flat()) v = rng::uniform(e, -1, 1);
  for (double& v : p.C) v = rng::uniform(e, -1, 1);
  for (double& v : p.D) v = rng::uniform(e, -1, 1);
  return p;
}

/// Textbook evaluation with explicit loops and std::tanh / max.
std::vector<double> naive_forward(const NetworkParams& p, const std::vector<double>& u,
                                  double (*hidden)(double), double (*output)(double)) {
  std::vector<double> h(p.n_hidden());
  for (std::size_t j = 0; j < h.size(); ++j) {
    double z = p.C[j];
    for (std::size_t k = 0; k < u.size(); ++k) z += p.B(j, k) * u[k];
    h[j] = hidden(z);
  }
  std::vector<double> y(p.n_out());
  for (std::size_t i = 0; i < y.size(); ++i) {
    double z = p.D[i];
    for (std::size_t j = 0; j < h.size(); ++j) z += p.A(i, j) * h[j];
    y[i] = output(z);
  }
  return y;
}

double tanh_fn(double x) { return std::tanh(x); }
double relu_fn(double x) { return x > 0 ? x : 0.0; }
double identity_fn(double x) { return x; }

}  // namespace

TEST_CASE("activations") {
  CHECK(activation_eval(Activation::tanh(), 0.5) == doctest::Approx(std::tanh(0.5)));
  CHECK(activation_eval(Activation::relu(), -2.0) == 0.0);
  CHECK(activation_eval(Activation::relu(), 2.0) == 2.0);
  CHECK(activation_eval(Activation::identity(), -3.0) == -3.0);
  CHECK(activation_eval(Activation::pwl_tanh(3), 0.5) == doctest::Approx(0.38));
  CHECK(activation_derivative(Activation::relu(), 0.0) == 0.0);
  CHECK(activation_derivative(Activation::relu(), 1.0) == 1.0);
  CHECK(activation_derivative(Activation::pwl_tanh(3), 1.0) == doctest::Approx(0.08));
  for (double x : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
    const double h = 1e-6;
    const double fd = (std::tanh(x + h) - std::tanh(x - h)) / (2 * h);
    CHECK(activation_derivative(Activation::tanh(), x) == doctest::Approx(fd).epsilon(1e-8));
  }
  for (const char* name : {"tanh", "relu", "identity", "pwl_tanh3", "pwl_tanh5"})
    CHECK(Activation::parse(name).name() == name);
  CHECK_THROWS(Activation::parse("sigmoid"));
  CHECK_THROWS_AS(Activation::pwl_tanh(4), ContractError);
}

TEST_CASE("forward pass matches a naive evaluation") {
  rng::Engine e(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n_in = 1 + rng::index(e, 6), n_h = 1 + rng::index(e, 10), n_out = 1 + rng::index(e, 4);
    std::vector<double> u(n_in);
    for (double& v : u) v = rng::uniform(e, -1, 1);
    const NetworkParams t = random_net(e, n_in, n_h, n_out);
    const auto y = forward(t, u);
    const auto ref = naive_forward(t, u, tanh_fn, tanh_fn);
    for (std::size_t i = 0; i < n_out; ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-13));
    const NetworkParams r = random_net(e, n_in, n_h, n_out, Activation::relu(), Activation::identity());
    const auto yr = forward(r, u);
    const auto refr = naive_forward(r, u, relu_fn, identity_fn);
    for (std::size_t i = 0; i < n_out; ++i) CHECK(yr[i] == doctest::Approx(refr[i]).epsilon(1e-13));
  }
}

TEST_CASE("forward with substituted activations and the trace agree") {
  rng::Engine e(5);
  const NetworkParams p = random_net(e, 3, 4, 2);
  const std::vector<double> u{0.1, -0.4, 0.9};
  const auto pwl = forward(p, u, Activation::pwl_tanh(5), Activation::pwl_tanh(5));
  const PwlFunction& f = tanh_pwl_ref(5);
  std::vector<double> h(4);
  for (std::size_t j = 0; j < 4; ++j) {
    double z = p.C[j];
    for (std::size_t k = 0; k < 3; ++k) z += p.B(j, k) * u[k];
    h[j] = f(z);
  }
  for (std::size_t i = 0; i < 2; ++i) {
    double z = p.D[i];
    for (std::size_t j = 0; j < 4; ++j) z += p.A(i, j) * h[j];
    CHECK(pwl[i] == doctest::Approx(f(z)).epsilon(1e-13));
  }
  ForwardTrace tr;
  forward_trace(p, u, tr);
  CHECK(tr.output == forward(p, u));
  CHECK(tr.hidden_pre.size() == 4);
  for (std::size_t j = 0; j < 4; ++j) CHECK(tr.hidden_post[j] == doctest::Approx(std::tanh(tr.hidden_pre[j])));
  CHECK_THROWS_AS(forward(p, std::vector<double>{1.0}), ContractError);
}

TEST_CASE("parameter validation") {
  NetworkParams p = NetworkParams::zeros(2, 3, 1);
  CHECK_NOTHROW(p.validate());
  CHECK(p.size() == 3 * 2 + 3 + 1 * 3 + 1);
  p.C.push_back(0.0);
  CHECK_THROWS_AS(p.validate(), ContractError);
  p = NetworkParams::zeros(2, 3, 1);
  p.A(0, 0) = NAN;
  CHECK_THROWS_AS(p.validate(), ContractError);
}

TEST_CASE("scaler maps the data range onto [-1, 1] and back") {
  Matrix raw(3, 2);
  raw(0, 0) = 2; raw(1, 0) = 4; raw(2, 0) = 6;
  raw(0, 1) = -1; raw(1, 1) = 1; raw(2, 1) = 0;
  const Scaler s = Scaler::fit(raw);
  CHECK(s.raw_min()[0] == 2);
  CHECK(s.raw_max()[1] == 1);
  CHECK(s.to_normalized(0, 2) == -1.0);
  CHECK(s.to_normalized(0, 6) == 1.0);
  CHECK(s.to_normalized(0, 4) == 0.0);
  CHECK(s.to_raw(1, 0.5) == 0.5);
  CHECK(s.raw_per_unit(0) == 2.0);
  rng::Engine e(2);
  for (int i = 0; i < 200; ++i) {
    const double v = rng::uniform(e, -50, 50);
    CHECK(s.to_raw(0, s.to_normalized(0, v)) == doctest::Approx(v).epsilon(1e-14));
  }
  const auto n = s.apply(std::vector<double>{6, -1}, Scaler::Direction::ToNormalized);
  CHECK(n == std::vector<double>{1, -1});
  CHECK(scale(s, n, Scaler::Direction::ToRaw) == std::vector<double>{6, -1});
  CHECK_THROWS_AS(Scaler({1.0}, {1.0}), ContractError);
  CHECK_THROWS_AS(s.apply(std::vector<double>{1.0}, Scaler::Direction::ToRaw), ContractError);
}

TEST_CASE("parameter text round trip is exact") {
  rng::Engine e(9);
  const NetworkParams p = random_net(e, 4, 5, 2, Activation::tanh(), Activation::identity());
  std::stringstream s;
  write_params(p, s);
  CHECK(read_params(s) == p);
  std::istringstream truncated("4 5 2 tanh tanh\n\n1 2\n");
  CHECK_THROWS_AS(read_params(truncated), ParseError);
}

TEST_CASE("dataset CSV round trip") {
  Dataset d;
  d.inputs = Matrix(4, 2);
  d.outputs = Matrix(4, 1);
  rng::Engine e(4);
  for (double& v : d.inputs.flat()) v = rng::uniform(e, -1, 1);
  for (double& v : d.outputs.flat()) v = rng::uniform(e, -1, 1);
  d.input_scaler = Scaler({0, 10}, {1, 20});
  d.output_scaler = Scaler({-5}, {5});
  d.train = {0, 2, 3};
  d.test = {1};
  d.input_names = {"a", "b"};
  d.output_names = {"y"};
  CHECK_NOTHROW(d.validate());
  std::stringstream rows, scaler;
  write_dataset_csv(d, rows, scaler);
  CHECK(rows.str().rfind("split,a,b,y\n", 0) == 0);
  const Dataset r = read_dataset_csv(rows, scaler);
  CHECK(r.train == d.train);
  CHECK(r.test == d.test);
  CHECK(r.input_names == d.input_names);
  CHECK(r.input_scaler == d.input_scaler);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t k = 0; k < 2; ++k) CHECK(r.inputs(i, k) == doctest::Approx(d.inputs(i, k)).epsilon(1e-14));
    CHECK(r.outputs(i, 0) == doctest::Approx(d.outputs(i, 0)).epsilon(1e-14));
  }
  Dataset bad = d;
  bad.test = {1, 2};
  CHECK_THROWS_AS(bad.validate(), ContractError);
}
