#include "esgnn/embedding.hpp"

#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "esgnn/errors.hpp"
#include "testutil.hpp"

using namespace esgnn;

namespace {

EsgnnConfig small_config(int h, int steps = 4) {
  EsgnnConfig cfg;
  cfg.hidden_dim = h;
  cfg.steps = steps;
  return cfg;
}

}  // namespace

TEST_CASE("config invariants") {
  EsgnnConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.leak = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.leak = 0.2;
  cfg.alpha_recursive = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("echo-state check fires at construction") {
  // rho(0.6 * G) for a 50x50 array around 2.5 uS mean cell is far above 1
  ModelFactory f;
  f.config = small_config(50);
  f.config.alpha_recursive = 0.6;
  f.device = test::test_device_model();
  f.feature_dim = 2;
  CHECK_THROWS_AS(f.make(1), ConfigError);
  f.allow_unstable = true;
  const EsgnnModel m = f.make(1);
  CHECK(m.recursive_spectral_radius() > 1.0);
}

TEST_CASE("input projection basics") {
  const auto model = test::make_test_model(8, 3, 11);

  SUBCASE("zero features give zero projection") {
    GraphData g = test::make_graph(2, {{0, 1}}, 3);
    g.features.setZero();
    EmbedOptions eo;
    eo.noise = false;
    CHECK(input_projection(model, g, eo).isZero(0.0));
  }

  SUBCASE("identical features give identical rows with noise off") {
    GraphData g = test::make_graph(3, {{0, 1}, {1, 2}}, 3);
    g.features.row(0) << 0.25, 0.5, 1.0;
    g.features.row(1) << 0.25, 0.5, 1.0;
    g.features.row(2) << 0.75, 0.0, 1.0;
    EmbedOptions eo;
    eo.noise = false;
    const Eigen::MatrixXd u = input_projection(model, g, eo);
    CHECK(u.row(0) == u.row(1));
    CHECK(u.row(0) != u.row(2));
  }

  SUBCASE("shape mismatch throws") {
    GraphData g = test::make_graph(2, {{0, 1}}, 5);
    CHECK_THROWS_AS(input_projection(model, g), ShapeError);
  }
}

TEST_CASE("input projection hand-computed 2x2 example") {
  Eigen::MatrixXd gi(2, 2);
  gi << 100.0, 0.0, 0.0, 100.0;
  EsgnnConfig cfg = small_config(2);
  cfg.alpha_input = 0.01;
  cfg.alpha_recursive = 1e-4;
  EsgnnModel model(CrossbarArray(gi),
                   CrossbarArray(Eigen::MatrixXd::Constant(2, 2, 1.0)), cfg,
                   0.0);
  GraphData g = test::make_graph(1, {}, 2);  // features (1, 1)
  EmbedOptions eo;
  eo.noise = false;
  const Eigen::MatrixXd u = input_projection(model, g, eo);
  CHECK(u(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(u(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("step semantics on isolated nodes") {
  const auto model = test::make_test_model(6, 2, 21);
  GraphData g = test::make_graph(1, {}, 2);

  SUBCASE("zero input keeps the state at zero") {
    g.features.setZero();
    NodeStates s;
    s.values = Eigen::MatrixXd::Zero(1, 6);
    const Eigen::MatrixXd u = Eigen::MatrixXd::Zero(1, 6);
    const NodeStates next = esgnn_step(model, g, s, u);
    CHECK(next.values.isZero(0.0));
    CHECK(next.step == 1);
  }

  SUBCASE("leak mixes previous state with the activated drive") {
    NodeStates s;
    s.values = Eigen::MatrixXd::Constant(1, 6, 0.5);
    Eigen::MatrixXd u = Eigen::MatrixXd::Constant(1, 6, 0.3);
    const NodeStates next = esgnn_step(model, g, s, u);
    for (int i = 0; i < 6; ++i)
      CHECK(next.values(0, i) ==
            doctest::Approx(0.2 * 0.5 + 0.8 * std::tanh(0.3)).epsilon(1e-12));
  }

  SUBCASE("stepping past T is rejected") {
    NodeStates s;
    s.values = Eigen::MatrixXd::Zero(1, 6);
    s.step = model.config().steps;
    CHECK_THROWS_AS(
        esgnn_step(model, g, s, Eigen::MatrixXd::Zero(1, 6)), ConfigError);
  }
}

TEST_CASE("quantized path tracks the dense oracle on a 2-node path") {
  EsgnnConfig cfg = small_config(2, 3);
  cfg.quant.m_bits = 12;  // fine grid
  cfg.alpha_input = 0.002;
  cfg.alpha_recursive = 0.003;
  Eigen::MatrixXd gi(2, 2), gr(2, 2);
  gi << 120.0, 30.0, 15.0, 90.0;
  gr << 40.0, 20.0, 10.0, 50.0;
  EsgnnModel model(CrossbarArray(gi), CrossbarArray(gr), cfg, 0.0);
  GraphData g = test::make_graph(2, {{0, 1}}, 2);
  g.features.row(0) << 0.5, 1.0;
  g.features.row(1) << 0.25, 1.0;

  EmbedOptions eo;
  eo.noise = false;
  const Eigen::MatrixXd got = embed_nodes(model, g, eo);
  const Eigen::MatrixXd oracle = test::oracle_embed_states(
      cfg.alpha_input * gi, cfg.alpha_recursive * gr, g, cfg.steps, cfg.leak);
  // states stay below 1, so per-read quantization error is bounded by
  // max_row_sum(alpha*G) / (2^m - 1) and contracts through tanh
  const double step_bound =
      (cfg.alpha_recursive * gr).rowwise().sum().maxCoeff() /
      double(cfg.quant.levels());
  const double tol = 10.0 * step_bound + 1e-9;
  CHECK((got - oracle).lpNorm<Eigen::Infinity>() < tol);
}

TEST_CASE("embedding boundedness and nonnegativity, noise off") {
  const auto model = test::make_test_model(16, 2, 31);
  for (int t = 0; t < 5; ++t) {
    const GraphData g = test::random_graph(12, 0.3, 500 + t, 2);
    EmbedOptions eo;
    eo.noise = false;
    std::vector<Eigen::MatrixXd> traj;
    eo.trajectory = &traj;
    embed_nodes(model, g, eo);
    for (const auto& s : traj) {
      CHECK((s.array() >= 0.0).all());
      CHECK((s.array() < 1.0).all());
    }
  }
}

TEST_CASE("single-node graph pools to its own state") {
  const auto model = test::make_test_model(8, 2, 41);
  const GraphData g = test::make_graph(1, {}, 2);
  EmbedOptions eo;
  eo.noise = false;
  const Eigen::VectorXd pooled = embed_graph(model, g, eo);
  const Eigen::MatrixXd states = embed_nodes(model, g, eo);
  CHECK(pooled.transpose() == states.row(0));
}

TEST_CASE("graph embedding is invariant under node relabeling") {
  const auto model = test::make_test_model(10, 2, 51);
  for (int t = 0; t < 10; ++t) {
    const GraphData g = test::random_graph(9, 0.35, 700 + t, 2);
    // permute nodes
    std::vector<int> perm(9);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(900 + t);
    for (std::size_t i = perm.size(); i > 1; --i)
      std::swap(perm[i - 1], perm[rng.next_below(i)]);
    GraphData pg;
    pg.num_nodes = g.num_nodes;
    pg.features.resize(g.num_nodes, g.features.cols());
    for (int j = 0; j < g.num_nodes; ++j)
      pg.features.row(perm[static_cast<std::size_t>(j)]) = g.features.row(j);
    for (auto e : g.edges) {
      int a = perm[static_cast<std::size_t>(e.first)];
      int b = perm[static_cast<std::size_t>(e.second)];
      if (a > b) std::swap(a, b);
      pg.edges.emplace_back(a, b);
    }
    std::sort(pg.edges.begin(), pg.edges.end());

    EmbedOptions eo;
    eo.noise = false;
    const Eigen::VectorXd ga = embed_graph(model, g, eo);
    const Eigen::VectorXd gb = embed_graph(model, pg, eo);
    CHECK((ga - gb).lpNorm<Eigen::Infinity>() < 1e-9);

    // node embeddings are permuted identically (equivariance)
    const Eigen::MatrixXd sa = embed_nodes(model, g, eo);
    const Eigen::MatrixXd sb = embed_nodes(model, pg, eo);
    for (int j = 0; j < g.num_nodes; ++j)
      CHECK((sa.row(j) - sb.row(perm[static_cast<std::size_t>(j)]))
                .lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("disjoint union doubles the pooled embedding, noise off") {
  const auto model = test::make_test_model(12, 2, 61);
  const GraphData g = test::random_graph(7, 0.4, 888, 2);
  GraphData doubled;
  doubled.num_nodes = 14;
  doubled.features.resize(14, 2);
  doubled.features.topRows(7) = g.features;
  doubled.features.bottomRows(7) = g.features;
  doubled.edges = g.edges;
  for (const auto& e : g.edges)
    doubled.edges.emplace_back(e.first + 7, e.second + 7);
  std::sort(doubled.edges.begin(), doubled.edges.end());

  EmbedOptions eo;
  eo.noise = false;
  const Eigen::VectorXd one = embed_graph(model, g, eo);
  const Eigen::VectorXd two = embed_graph(model, doubled, eo);
  CHECK((two - 2.0 * one).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("star graph: leaves identical, center distinct after two steps") {
  const auto model = test::make_test_model(10, 2, 71);
  // 5-node star: center 0
  const GraphData g =
      test::make_graph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}, 2);
  EmbedOptions eo;
  eo.noise = false;
  const Eigen::MatrixXd s = embed_nodes(model, g, eo);
  for (int leaf = 2; leaf <= 4; ++leaf)
    CHECK((s.row(1) - s.row(leaf)).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((s.row(0) - s.row(1)).lpNorm<Eigen::Infinity>() > 1e-6);
}

TEST_CASE("noise-off embedding is deterministic; noise follows the seed") {
  const auto model = test::make_test_model(8, 2, 81);
  const GraphData g = test::random_graph(6, 0.5, 1999, 2);

  EmbedOptions off;
  off.noise = false;
  const Eigen::VectorXd a = embed_graph(model, g, off);
  const Eigen::VectorXd b = embed_graph(model, g, off);
  CHECK(a == b);

  EmbedOptions on1;
  on1.noise = true;
  on1.noise_seed = 5;
  EmbedOptions on2 = on1;
  const Eigen::VectorXd c = embed_graph(model, g, on1);
  const Eigen::VectorXd d = embed_graph(model, g, on2);
  CHECK(c == d);
  EmbedOptions on3 = on1;
  on3.noise_seed = 6;
  const Eigen::VectorXd e = embed_graph(model, g, on3);
  CHECK(c != e);
}

TEST_CASE("quantization drift shrinks as m grows") {
  Eigen::MatrixXd gi = test::random_nonnegative(6, 2, 3001, 100.0);
  Eigen::MatrixXd gr = test::random_nonnegative(6, 6, 3002, 5.0);
  const GraphData g = test::random_graph(8, 0.4, 3003, 2);
  const Eigen::MatrixXd oracle = test::oracle_embed_states(
      0.002 * gi, 0.004 * gr, g, 4, 0.2);

  double prev = std::numeric_limits<double>::infinity();
  for (int m : {2, 4, 6, 8}) {
    EsgnnConfig cfg = small_config(6, 4);
    cfg.alpha_input = 0.002;
    cfg.alpha_recursive = 0.004;
    cfg.quant.m_bits = m;
    EsgnnModel model(CrossbarArray(gi), CrossbarArray(gr), cfg, 0.0);
    EmbedOptions eo;
    eo.noise = false;
    const Eigen::MatrixXd got = embed_nodes(model, g, eo);
    const double err = (got - oracle).lpNorm<Eigen::Infinity>();
    CHECK(err <= prev + 1e-12);
    prev = err;
  }
  CHECK(prev < 5e-3);  // m = 8 lands close to the oracle
}

TEST_CASE("echo-state contraction witness at the oracle level") {
  // rho(W_R) * max_degree < 1: state distance is non-increasing
  Eigen::MatrixXd gr = test::random_nonnegative(8, 8, 4001, 4.0);
  const double rho = spectral_radius(gr, 1.0);
  const GraphData g = test::make_graph(4, {{0, 1}, {1, 2}, {2, 3}}, 2);
  const double alpha_r = 0.4 / (rho * g.max_degree());
  const Eigen::MatrixXd w_r = alpha_r * gr;
  Eigen::MatrixXd u = Eigen::MatrixXd::Constant(4, 8, 0.2);

  const auto nbr = neighbor_lists(g);
  const auto advance = [&](Eigen::MatrixXd s) {
    Eigen::MatrixXd agg = u;
    for (int j = 0; j < 4; ++j)
      for (int k : nbr[static_cast<std::size_t>(j)])
        agg.row(j) += (w_r * s.row(k).transpose()).transpose();
    return (0.2 * s + 0.8 * agg.array().tanh().matrix()).eval();
  };

  Eigen::MatrixXd sa = Eigen::MatrixXd::Zero(4, 8);
  Eigen::MatrixXd sb = Eigen::MatrixXd::Constant(4, 8, 0.9);
  double dist = (sa - sb).lpNorm<Eigen::Infinity>();
  for (int t = 0; t < 30; ++t) {
    sa = advance(sa);
    sb = advance(sb);
    const double next = (sa - sb).lpNorm<Eigen::Infinity>();
    CHECK(next <= dist + 1e-12);
    dist = next;
  }
  CHECK(dist < 1e-3);  // trajectories actually forget the initial state
}

TEST_CASE("fused aggregation approximates the per-neighbor reference") {
  EsgnnConfig per_neighbor = small_config(8, 3);
  per_neighbor.alpha_recursive = 0.002;
  EsgnnConfig fused = per_neighbor;
  fused.fused_aggregation = true;

  Eigen::MatrixXd gi = test::random_nonnegative(8, 2, 5001, 50.0);
  Eigen::MatrixXd gr = test::random_nonnegative(8, 8, 5002, 5.0);
  const GraphData g = test::random_graph(7, 0.5, 5003, 2);

  EsgnnModel ref(CrossbarArray(gi), CrossbarArray(gr), per_neighbor, 0.0);
  EsgnnModel fus(CrossbarArray(gi), CrossbarArray(gr), fused, 0.0);
  EmbedOptions eo;
  eo.noise = false;
  const Eigen::VectorXd a = embed_graph(ref, g, eo);
  const Eigen::VectorXd b = embed_graph(fus, g, eo);
  // same pre-quantization math, different quantization points
  CHECK((a - b).lpNorm<Eigen::Infinity>() <
        0.2 * std::max(1.0, a.lpNorm<Eigen::Infinity>()));
  CHECK(a != b);
}
