#include "doctest.h"

#include "fedheal/orchestrator.hpp"
#include "fedheal/rng.hpp"
#include "fedheal/simplex.hpp"
#include "support.hpp"

using namespace fedheal;
using fedheal::testing::small_config;

namespace {

std::vector<std::uint64_t> digests(const ExperimentReport& report) {
  std::vector<std::uint64_t> out;
  for (const auto& r : report.rounds) {
    out.push_back(r.model_digest);
  }
  return out;
}

Matrix broadcast(const std::vector<double>& p, std::size_t g) {
  Matrix q(p.size(), g);
  for (std::size_t m = 0; m < p.size(); ++m) {
    for (std::size_t i = 0; i < g; ++i) {
      q(m, i) = p[m];
    }
  }
  return q;
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_method("fedavg") == Method::kFedAvgProportional);
  CHECK(parse_method("fedavg-proportional") == Method::kFedAvgProportional);
  CHECK(parse_method("fedavg-uniform") == Method::kFedAvgUniform);
  CHECK(parse_method("fphl-only") == Method::kFphlOnly);
  CHECK(parse_method("fael-only") == Method::kFaelOnly);
  CHECK(parse_method("fedheal") == Method::kFedHeal);
  CHECK_THROWS_AS(parse_method("fedprox"), ConfigError);
  for (const auto m : {Method::kFedAvgProportional, Method::kFedAvgUniform, Method::kFphlOnly, Method::kFaelOnly,
                       Method::kFedHeal}) {
    CHECK(parse_method(to_string(m)) == m);
  }
}

TEST_CASE("sample-proportional weights") {
  CHECK(fedavg_weights(std::vector<std::size_t>{10, 30}) == std::vector<double>{0.25, 0.75});
  CHECK(fedavg_weights(std::vector<std::size_t>{7}) == std::vector<double>{1.0});
  const auto uniform = fedavg_weights(std::vector<std::size_t>(20, 40));
  for (const double v : uniform) {
    CHECK(v == 0.05);
  }
  CHECK_THROWS(fedavg_weights(std::vector<std::size_t>{}));
  CHECK_THROWS(fedavg_weights(std::vector<std::size_t>{3, 0}));
}

TEST_CASE("aggregate examples") {
  const ParamVector global{0.0, 0.0};
  const std::vector<ParamVector> updates{{1.0, 0.0}, {0.0, 1.0}};
  Matrix q(2, 2);
  q(0, 0) = 0.6;
  q(1, 0) = 0.4;
  q(0, 1) = 0.5;
  q(1, 1) = 0.5;
  const auto out = aggregate(global, updates, q);
  CHECK(out[0] == doctest::Approx(0.6));
  CHECK(out[1] == doctest::Approx(0.5));

  Matrix frozen(2, 2);
  frozen(0, 0) = 0.3;
  frozen(1, 0) = 0.7;
  const ParamVector start{2.0, -3.0};
  const auto kept = aggregate(start, updates, frozen);
  CHECK(kept[1] == -3.0);

  CHECK_THROWS_AS(aggregate(global, updates, Matrix(3, 2)), DimensionError);
  CHECK_THROWS_AS(aggregate(ParamVector{0.0}, updates, q), DimensionError);
}

TEST_CASE("aggregate: identical updates and the weighted-sum identity") {
  CounterRng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + rng.below(5);
    const std::size_t g = 1 + rng.below(10);
    std::vector<double> p(m);
    for (auto& v : p) {
      v = rng.uniform() + 0.01;
    }
    p = normalize_simplex(p);
    ParamVector global(g);
    for (auto& v : global) {
      v = rng.gaussian();
    }
    std::vector<ParamVector> updates(m, ParamVector(g));
    for (auto& u : updates) {
      for (auto& v : u) {
        v = rng.gaussian();
      }
    }
    const auto out = aggregate(global, updates, broadcast(p, g));
    for (std::size_t i = 0; i < g; ++i) {
      double direct = global[i];
      for (std::size_t c = 0; c < m; ++c) {
        direct += p[c] * updates[c][i];
      }
      CHECK(out[i] == doctest::Approx(direct).epsilon(1e-12));
    }

    const std::vector<ParamVector> same(m, updates[0]);
    const auto moved = aggregate(global, same, broadcast(p, g));
    for (std::size_t i = 0; i < g; ++i) {
      CHECK(moved[i] == doctest::Approx(global[i] + updates[0][i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("config validation names the field") {
  auto config = small_config(Method::kFedHeal, 1);
  config.tau = 1.5;
  try {
    validate(config);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "tau");
    CHECK(std::string(e.what()).find("tau ∈ [0,1]") != std::string::npos);
  }
  config = small_config(Method::kFedHeal, 1);
  config.beta = -0.5;
  CHECK_THROWS_AS(validate(config), ConfigError);
  config = small_config(Method::kFedHeal, 1);
  config.eval_every = 0;
  CHECK_THROWS_AS(run_experiment(config), ConfigError);
}

TEST_CASE("degenerate settings reproduce the simpler methods bit for bit") {
  const std::uint64_t seed = 5;
  const auto run = [&](Method method, double tau, double beta) {
    auto config = small_config(method, seed);
    config.tau = tau;
    config.beta = beta;
    return digests(run_experiment(config, RunOptions{1, {}}));
  };
  CHECK(run(Method::kFedHeal, 0.0, 0.0) == run(Method::kFedAvgProportional, 0.3, 0.4));
  CHECK(run(Method::kFedHeal, 0.0, 0.4) == run(Method::kFaelOnly, 0.3, 0.4));
  CHECK(run(Method::kFedHeal, 0.3, 0.0) == run(Method::kFphlOnly, 0.3, 0.4));
  // The default arm is not itself degenerate.
  CHECK(run(Method::kFedHeal, 0.3, 0.4) != run(Method::kFedAvgProportional, 0.3, 0.4));
}

TEST_CASE("round 1 keeps every update and averages with the new weights") {
  auto config = small_config(Method::kFedHeal, 6);
  config.rounds = 1;
  bool seen = false;
  RunOptions options;
  options.workers = 1;
  options.observer = [&](const RoundTrace& trace) {
    seen = true;
    REQUIRE(trace.mask != nullptr);
    REQUIRE(trace.weights != nullptr);
    CHECK(trace.mask->discarded_fraction() == 0.0);
    const auto expected = aggregate(trace.global_before, trace.updates,
                                    broadcast(trace.weights->p, trace.global_before.size()));
    CHECK(std::vector<double>(trace.global_after.begin(), trace.global_after.end()) == expected);
  };
  const auto report = run_experiment(config, options);
  CHECK(seen);
  CHECK(report.rounds.at(1).discarded_fraction == 0.0);
}

TEST_CASE("fedavg arms keep q equal to p") {
  for (const auto method : {Method::kFedAvgProportional, Method::kFedAvgUniform}) {
    auto config = small_config(method, 7);
    RunOptions options;
    options.workers = 1;
    std::vector<double> first_p;
    options.observer = [&](const RoundTrace& trace) {
      REQUIRE(trace.mask != nullptr);
      CHECK(trace.mask->discarded_fraction() == 0.0);
      REQUIRE(trace.q != nullptr);
      if (first_p.empty()) {
        first_p = trace.weights->p;
      }
      CHECK(trace.weights->p == first_p);
      for (std::size_t m = 0; m < trace.q->rows(); ++m) {
        for (const double v : trace.q->row(m)) {
          CHECK(v == first_p[m]);
        }
      }
    };
    run_experiment(config, options);
  }
}

TEST_CASE("weight system invariants along a run") {
  auto config = small_config(Method::kFedHeal, 8);
  config.rounds = 15;
  RunOptions options;
  options.workers = 1;
  options.observer = [&](const RoundTrace& trace) {
    const auto& p = trace.weights->p;
    CHECK(is_on_simplex(p));
    for (const double v : trace.weights->delta_p) {
      CHECK(v >= 0.0);
    }
    const auto& q = *trace.q;
    const auto& mask = *trace.mask;
    for (std::size_t i = 0; i < q.cols(); ++i) {
      double sum = 0.0;
      bool survivor = false;
      for (std::size_t m = 0; m < q.rows(); ++m) {
        sum += q(m, i);
        if (mask(m, i) == 1) {
          survivor = true;
          CHECK(q(m, i) >= p[m] - 1e-15);
        } else {
          CHECK(q(m, i) == 0.0);
        }
      }
      if (survivor) {
        CHECK(std::abs(sum - 1.0) <= 1e-9);
      }
    }
  };
  run_experiment(config, options);
}

TEST_CASE("zero rounds yields only the initial evaluation") {
  auto config = small_config(Method::kFedHeal, 9);
  config.rounds = 0;
  const auto report = run_experiment(config);
  REQUIRE(report.rounds.size() == 1);
  CHECK(report.rounds[0].round == 0);
  CHECK(report.rounds[0].evaluated);
  CHECK(!report.final_metrics.has_value());
}

TEST_CASE("records follow the evaluation cadence") {
  auto config = small_config(Method::kFedHeal, 10);
  config.rounds = 7;
  config.eval_every = 3;
  const auto report = run_experiment(config);
  REQUIRE(report.rounds.size() == 8);
  std::vector<std::size_t> evaluated;
  for (const auto& r : report.rounds) {
    if (r.evaluated) {
      evaluated.push_back(r.round);
      CHECK(r.per_domain_accuracy.size() == 2);
      for (const double a : r.per_domain_accuracy) {
        CHECK(a >= 0.0);
        CHECK(a <= 1.0);
      }
    } else {
      CHECK(r.per_domain_accuracy.empty());
    }
  }
  CHECK(evaluated == std::vector<std::size_t>{0, 3, 6, 7});
  CHECK(report.weight_trajectory().size() == 8);
}

TEST_CASE("results do not depend on the worker count") {
  const auto config = small_config(Method::kFedHeal, 11);
  const auto serial = run_experiment(config, RunOptions{1, {}});
  const auto threaded = run_experiment(config, RunOptions{4, {}});
  CHECK(serial.rounds == threaded.rounds);
  CHECK(serial.final_metrics == threaded.final_metrics);
  CHECK(run_experiment(config, RunOptions{1, {}}).rounds == serial.rounds);
}

TEST_CASE("server exposes its state between rounds") {
  const auto config = small_config(Method::kFedHeal, 12);
  Server server(config, make_federation(config.federation), RunOptions{1, {}});
  CHECK(server.round() == 0);
  CHECK(server.table().round_count() == 0);
  const auto before = server.global();
  const auto record = server.run_round();
  CHECK(record.round == 1);
  CHECK(server.round() == 1);
  CHECK(server.table().round_count() == 1);
  CHECK(server.global() != before);
  CHECK(model_digest(server.global()) == record.model_digest);
}

TEST_CASE("reweighted clients spread their distances less than FedAvg weights in most rounds") {
  const auto report = run_experiment(default_experiment_config(1));
  std::size_t better = 0;
  for (std::size_t r = 1; r < report.rounds.size(); ++r) {
    const auto& rec = report.rounds[r];
    better += rec.distance_variance <= rec.baseline_distance_variance ? 1 : 0;
  }
  CHECK(2 * better > report.rounds.size() - 1);
}
