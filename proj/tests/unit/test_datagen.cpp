#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "gial/datagen.hpp"
#include "gial/error.hpp"

using namespace gial;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("gial_datagen_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

GenConfig small(std::uint64_t seed) {
  GenConfig g;
  g.nodes = 200;
  g.seed = seed;
  return g;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("config validation and json") {
  GenConfig g;
  CHECK_NOTHROW(g.validate());
  g.nodes = 0;
  CHECK_THROWS_AS(g.validate(), ContractViolation);
  g = {};
  g.homophily = -1;
  CHECK_THROWS_AS(g.validate(), ContractViolation);
  g = {};
  g.bias = -0.5;
  CHECK_THROWS_AS(g.validate(), ContractViolation);

  GenConfig h;
  h.nodes = 321;
  h.homophily = 0.75;
  h.seed = 99;
  CHECK(to_json(gen_config_from_json(to_json(h))) == to_json(h));
  CHECK(gen_config_from_json(R"({"nodes": 12})").topic_dim == GenConfig{}.topic_dim);
  CHECK_THROWS_AS(gen_config_from_json(R"({"sigma": 1})"), DataError);
  CHECK_THROWS_AS(gen_config_from_json("[1,2]"), DataError);
}

TEST_CASE("random assignment at zero bias") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GenConfig g;
    g.nodes = 1000;
    g.bias = 0;
    g.seed = seed;
    const GenerationResult r = generate(g);
    for (double e : r.propensity) CHECK(e == 0.5);
    double treated = 0;
    for (int t : r.data.treatment) treated += t;
    CHECK(treated / 1000.0 >= 0.45);
    CHECK(treated / 1000.0 <= 0.55);
  }
}

TEST_CASE("generated data is consistent") {
  GenConfig g = small(4);
  g.outcome_noise = 0;
  const Dataset d = generate(g).data;
  CHECK_NOTHROW(d.validate());
  CHECK(d.size() == 200);
  CHECK(d.features.rows() == 200);
  CHECK(d.features.cols() == g.feature_dim);
  CHECK(d.latent.cols() == g.topic_dim);
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(d.factual[i] == (d.treatment[i] ? d.mu1[i] : d.mu0[i]));
    for (double x : d.features.row_span(i)) CHECK(x >= 0.0);
  }
  const auto ite = d.true_ite();
  CHECK(ite[7] == d.mu1[7] - d.mu0[7]);

  // Features do not carry any latent column verbatim.
  for (std::size_t k = 0; k < d.latent.cols(); ++k) {
    for (std::size_t f = 0; f < d.features.cols(); ++f) {
      bool same = true;
      for (std::size_t i = 0; i < d.size() && same; ++i) same = d.latent(i, k) == d.features(i, f);
      CHECK_FALSE(same);
    }
  }
}

TEST_CASE("seeded and bias-isolated streams") {
  const Dataset a = generate(small(5)).data;
  const Dataset b = generate(small(5)).data;
  CHECK(a.features == b.features);
  CHECK(a.graph.edges() == b.graph.edges());
  CHECK(a.treatment == b.treatment);
  CHECK(a.factual == b.factual);
  CHECK(generate(small(6)).data.features != a.features);

  GenConfig strong = small(5);
  strong.bias = 3.0;
  const Dataset c = generate(strong).data;
  CHECK(c.features == a.features);
  CHECK(c.latent == a.latent);
  CHECK(c.graph.edges() == a.graph.edges());
  CHECK(c.mu0 == a.mu0);
  CHECK(c.mu1 == a.mu1);
  // Ground-truth ATE does not depend on who was treated.
  CHECK(mean_of(c.true_ite()) == mean_of(a.true_ite()));
}

TEST_CASE("homophily and bias shape the census") {
  double gap[3] = {0, 0, 0};
  const double ks[3] = {0.0, 1.0, 2.0};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (int k = 0; k < 3; ++k) {
      GenConfig g = small(seed);
      g.nodes = 300;
      g.homophily = 2.0;
      g.bias = ks[k];
      const Dataset d = generate(g).data;
      const EdgeCensus c = edge_census(d.graph, d.treatment);
      gap[k] += static_cast<double>(c.homogeneous) - static_cast<double>(c.heterogeneous);
      if (k == 2) CHECK(c.homogeneous > c.heterogeneous);
    }
  }
  CHECK(gap[1] >= gap[0]);
  CHECK(gap[2] >= gap[1]);
}

TEST_CASE("average degree is hit and empty graphs warn") {
  GenConfig g = small(1);
  g.nodes = 400;
  const Dataset d = generate(g).data;
  const double degree = 2.0 * static_cast<double>(d.graph.edge_count()) / 400.0;
  CHECK(degree > 0.8 * g.avg_degree);
  CHECK(degree < 1.2 * g.avg_degree);

  g.avg_degree = 0;
  const GenerationResult empty = generate(g);
  CHECK(empty.data.graph.edge_count() == 0);
  CHECK_FALSE(empty.warnings.empty());
}

TEST_CASE("split") {
  const Split s = split_indices(10, kDefaultSplit, 3);
  CHECK(s.train.size() == 6);
  CHECK(s.validation.size() == 2);
  CHECK(s.test.size() == 2);
  std::set<std::size_t> all;
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    CHECK(std::is_sorted(part->begin(), part->end()));
    all.insert(part->begin(), part->end());
  }
  CHECK(all.size() == 10);
  CHECK(*all.rbegin() == 9);
  const Split again = split_indices(10, kDefaultSplit, 3);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  CHECK(split_indices(1000, kDefaultSplit, 4).train != split_indices(1000, kDefaultSplit, 5).train);
  CHECK_THROWS_AS(split_indices(2, kDefaultSplit, 0), ContractViolation);
  CHECK_THROWS_AS(split_indices(10, {0.5, 0.2, 0.2}, 0), ContractViolation);
}

TEST_CASE("dataset files round-trip exactly") {
  const Dataset d = generate(small(8)).data;
  const fs::path dir = scratch("roundtrip");
  const fs::path manifest = save_dataset(d, dir);
  const Dataset back = load_dataset(manifest);
  CHECK(back.features == d.features);
  CHECK(back.graph.edges() == d.graph.edges());
  CHECK(back.graph.node_count() == d.graph.node_count());
  CHECK(back.treatment == d.treatment);
  CHECK(back.factual == d.factual);
  CHECK(back.mu0 == d.mu0);
  CHECK(back.mu1 == d.mu1);
  CHECK(back.latent == d.latent);

  const fs::path dir2 = scratch("roundtrip2");
  save_dataset(back, dir2);
  for (const char* f : {"manifest.json", "features.txt", "edges.tsv", "arrays.csv", "latent.csv"}) {
    CHECK(slurp(dir / f) == slurp(dir2 / f));
  }
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("malformed dataset files report lines") {
  Dataset d;
  d.features = Matrix{{1.0, 0.0}, {0.0, 2.5}, {0.5, 0.5}};
  d.graph = Graph::complete(3);
  d.treatment = {1, 0, 1};
  d.factual = {1.0, 2.0, 3.0};
  const fs::path dir = scratch("bad");
  const fs::path manifest = save_dataset(d, dir);
  CHECK(slurp(dir / "features.txt") == "0:1\n1:2.5\n0:0.5 1:0.5\n");
  CHECK(load_dataset(manifest).mu0.empty());

  auto line_of = [&](const std::string& file, const std::string& text) -> std::size_t {
    const std::string saved = slurp(dir / file);
    spit(dir / file, text);
    std::size_t line = 0;
    try {
      load_dataset(manifest);
    } catch (const DataError& e) {
      line = e.line() == 0 ? 999 : e.line();
    }
    spit(dir / file, saved);
    return line;
  };
  CHECK(line_of("features.txt", "0:1\n1:x\n0:0.5\n") == 2);
  CHECK(line_of("features.txt", "0:1\n1:2\n5:1\n") == 3);
  CHECK(line_of("features.txt", "0:1\n1-2\n0:1\n") == 2);
  CHECK(line_of("arrays.csv", "1,1\n2,2\n1,3\n") == 2);
  CHECK(line_of("arrays.csv", "1,1\n0,2\n1,x\n") == 3);
  CHECK(line_of("arrays.csv", "1,1\n0,2,0\n1,3\n") == 2);
  CHECK(line_of("edges.tsv", "0\t1\n1\t7\n") == 2);
  CHECK(line_of("features.txt", "0:1\n") != 0);

  spit(dir / "manifest.json", R"({"nodes": 3})");
  CHECK_THROWS_AS(load_dataset(manifest), DataError);
  CHECK_THROWS_AS(load_dataset(dir / "missing.json"), DataError);
  fs::remove_all(dir);
}
