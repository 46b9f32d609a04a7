#include "doctest.h"

#include <cmath>

#include "fedheal/fael.hpp"
#include "fedheal/rng.hpp"
#include "fedheal/simplex.hpp"

using namespace fedheal;

namespace {

// Direct evaluation: U = sum p_m w_m, d_m = |U - w_m|^2, population variance.
double reference_variance(const std::vector<double>& p, const std::vector<ParamVector>& models) {
  const std::size_t g = models.front().size();
  std::vector<double> u(g, 0.0);
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (std::size_t i = 0; i < g; ++i) {
      u[i] += p[m] * models[m][i];
    }
  }
  std::vector<double> d(models.size(), 0.0);
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (std::size_t i = 0; i < g; ++i) {
      d[m] += (u[i] - models[m][i]) * (u[i] - models[m][i]);
    }
  }
  double mean = 0.0;
  for (const double v : d) {
    mean += v;
  }
  mean /= static_cast<double>(d.size());
  double var = 0.0;
  for (const double v : d) {
    var += (v - mean) * (v - mean);
  }
  return var / static_cast<double>(d.size());
}

std::vector<ParamVector> random_models(CounterRng& rng, std::size_t m, std::size_t g) {
  std::vector<ParamVector> models(m, ParamVector(g));
  for (auto& w : models) {
    for (auto& v : w) {
      v = rng.gaussian();
    }
  }
  return models;
}

// Flat Dirichlet draw via normalized exponentials.
std::vector<double> dirichlet_point(CounterRng& rng, std::size_t m) {
  std::vector<double> p(m);
  double total = 0.0;
  for (auto& v : p) {
    v = -std::log(1.0 - rng.uniform());
    total += v;
  }
  for (auto& v : p) {
    v /= total;
  }
  return p;
}

}  // namespace

TEST_CASE("masked update distance") {
  const std::vector<double> dw{3.0, 4.0};
  const std::vector<std::uint8_t> all{1, 1};
  const std::vector<std::uint8_t> first{1, 0};
  const std::vector<std::uint8_t> none{0, 0};
  CHECK(masked_update_distance(dw, all) == 25.0);
  CHECK(masked_update_distance(dw, first) == 9.0);
  CHECK(masked_update_distance(dw, none) == 0.0);
  CHECK_THROWS_AS(masked_update_distance(dw, std::vector<std::uint8_t>{1}), DimensionError);
}

TEST_CASE("weight update: beta 1 from uniform") {
  const auto state = make_aggregation_state(std::vector<double>{0.5, 0.5}, 1.0);
  const auto next = update_client_weights(state, std::vector<double>{1.0, 3.0});
  CHECK(next.delta_p[0] == doctest::Approx(0.25));
  CHECK(next.delta_p[1] == doctest::Approx(0.75));
  CHECK(next.p[0] == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(next.p[1] == doctest::Approx(0.625).epsilon(1e-15));
}

TEST_CASE("weight update: equal distances keep symmetry") {
  auto state = make_aggregation_state(std::vector<double>{0.4, 0.4}, 0.5);
  CHECK(state.p == std::vector<double>{0.5, 0.5});
  state.delta_p = {0.1, 0.1};
  const auto next = update_client_weights(state, std::vector<double>{2.0, 2.0});
  CHECK(next.delta_p[0] == doctest::Approx(0.3));
  CHECK(next.delta_p[1] == doctest::Approx(0.3));
  CHECK(next.p[0] == doctest::Approx(0.5));
  CHECK(next.p[1] == doctest::Approx(0.5));
}

TEST_CASE("beta 0 keeps the initial weights bit for bit") {
  CounterRng rng(31);
  const std::vector<double> initial{0.1, 0.2, 0.3, 0.4};
  auto state = make_aggregation_state(initial, 0.0);
  const auto start = state.p;
  for (int r = 0; r < 50; ++r) {
    std::vector<double> d(4);
    for (auto& v : d) {
      v = rng.uniform() * 10.0;
    }
    state = update_client_weights(state, d);
    CHECK(state.p == start);
    CHECK(state.delta_p == std::vector<double>(4, 0.0));
  }
}

TEST_CASE("all-zero distances skip the update") {
  auto state = make_aggregation_state(std::vector<double>{0.25, 0.75}, 0.4);
  state.delta_p = {0.2, 0.1};
  CHECK(update_client_weights(state, std::vector<double>{0.0, 0.0}) == state);
  CHECK_THROWS(update_client_weights(state, std::vector<double>{-1.0, 2.0}));
  CHECK_THROWS_AS(update_client_weights(state, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("beta outside [0, 1] is rejected") {
  CHECK_THROWS_AS(make_aggregation_state(std::vector<double>{0.5, 0.5}, 1.5), ConfigError);
  CHECK_THROWS_AS(make_aggregation_state(std::vector<double>{0.5, 0.5}, -0.1), ConfigError);
}

TEST_CASE("weight updates stay on the simplex and respond monotonically") {
  CounterRng rng(32);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 2 + rng.below(6);
    auto state = make_aggregation_state(dirichlet_point(rng, m), rng.uniform());
    for (int r = 0; r < 5; ++r) {
      std::vector<double> d(m);
      for (auto& v : d) {
        v = rng.uniform() * 5.0;
      }
      state = update_client_weights(state, d);
      CHECK(is_on_simplex(state.p));
      for (const double v : state.delta_p) {
        CHECK(v >= 0.0);
      }
    }

    // Equal prior p and delta_p: the larger distance wins the larger weight.
    auto equal = make_aggregation_state(std::vector<double>(m, 1.0), 0.05 + 0.95 * rng.uniform());
    const double shared = rng.uniform() * 0.3;
    equal.delta_p.assign(m, shared);
    std::vector<double> d(m);
    for (auto& v : d) {
      v = rng.uniform();
    }
    const auto next = update_client_weights(equal, d);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        if (d[a] > d[b]) {
          CHECK(next.p[a] > next.p[b]);
        }
      }
    }
  }
}

TEST_CASE("distance variance examples") {
  const std::vector<ParamVector> one{{1.0, 2.0}};
  CHECK(distance_variance(std::vector<double>{1.0}, one) == 0.0);

  const std::vector<ParamVector> pair{{1.0, 0.0}, {-1.0, 0.0}};
  CHECK(distance_variance(std::vector<double>{0.5, 0.5}, pair) == 0.0);
  CHECK(distance_variance(std::vector<double>{1.0, 0.0}, pair) == doctest::Approx(4.0));

  CounterRng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const auto models = random_models(rng, 2 + rng.below(4), 1 + rng.below(6));
    const auto p = dirichlet_point(rng, models.size());
    CHECK(distance_variance(p, models) == doctest::Approx(reference_variance(p, models)).epsilon(1e-10));
  }
}

TEST_CASE("variance oracle: trivial cases") {
  const std::vector<ParamVector> single{{3.0, -1.0}};
  const auto one = variance_oracle(single, 100, 0.0);
  CHECK(one.weights == std::vector<double>{1.0});

  const std::vector<ParamVector> pair{{1.0, 0.0}, {-1.0, 0.0}};
  const auto sym = variance_oracle(pair, 500, 0.0);
  CHECK(sym.weights[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(sym.variance == doctest::Approx(0.0));
}

TEST_CASE("variance oracle matches a grid search for two clients") {
  CounterRng rng(34);
  for (int trial = 0; trial < 30; ++trial) {
    const auto models = random_models(rng, 2, 1 + rng.below(8));
    double best_p = 0.0;
    double best_v = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 1000; ++k) {
      const double a = k / 1000.0;
      const double v = reference_variance({a, 1.0 - a}, models);
      if (v < best_v) {
        best_v = v;
        best_p = a;
      }
    }
    const auto result = variance_oracle(models, 2000, 0.0);
    CHECK(std::abs(result.weights[0] - best_p) <= 0.01);
    CHECK(result.variance <= best_v + 1e-9);
  }
}

TEST_CASE("variance oracle beats random simplex points") {
  CounterRng rng(35);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 2 + rng.below(4);
    const auto models = random_models(rng, m, 1 + rng.below(8));
    const auto result = variance_oracle(models, 3000, 0.0);
    CHECK(is_on_simplex(result.weights));
    CHECK(result.variance <= reference_variance(std::vector<double>(m, 1.0 / m), models) + 1e-9);
    for (int k = 0; k < 100; ++k) {
      CHECK(result.variance <= reference_variance(dirichlet_point(rng, m), models) + 1e-9);
    }
  }
}
