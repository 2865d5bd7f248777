#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>

#include "rfsearch/errors.hpp"
#include "rfsearch/global_search.hpp"
#include "rfsearch/oracle.hpp"

namespace rfs {
namespace {

std::vector<double> probs(std::vector<double> e) { return selection_probabilities(e); }

TEST(Selection, PositiveFitnessIsUsedDirectly) {
  const auto p = probs({0.2, 0.3, 0.5});
  EXPECT_NEAR(p[0], 0.2, 1e-15);
  EXPECT_NEAR(p[1], 0.3, 1e-15);
  EXPECT_NEAR(p[2], 0.5, 1e-15);
}

TEST(Selection, EqualFitnessIsUniform) {
  for (double c : {-3.0, 0.0, 4.5}) {
    for (double v : probs({c, c, c})) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  }
}

TEST(Selection, NonPositiveFitnessIsShifted) {
  const auto p = probs({-1.0, 0.0, 1.0});
  const double eps = 1e-9, z = 3.0 + 3 * eps;
  EXPECT_NEAR(p[0], eps / z, 1e-15);
  EXPECT_NEAR(p[1], (1 + eps) / z, 1e-15);
  EXPECT_NEAR(p[2], (2 + eps) / z, 1e-15);
}

TEST(Selection, SumsToOne) {
  Rng rng(5);
  std::normal_distribution<double> n(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> e(1 + trial % 17);
    for (double& v : e) v = n(rng);
    const auto p = probs(e);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
    for (double v : p) EXPECT_GE(v, 0.0);
  }
}

TEST(Crossover, IdenticalParentsGiveClones) {
  Rng rng(1);
  const DilationGenome a({1, 4, 16, 2});
  for (int i = 0; i < 20; ++i) {
    const auto [x, y] = crossover_segments(a, a, rng);
    EXPECT_EQ(x, a);
    EXPECT_EQ(y, a);
  }
}

TEST(Crossover, ExplicitAnchors) {
  const auto [x, y] = crossover_segments(DilationGenome({1, 1, 1, 1, 1}),
                                         DilationGenome({4, 4, 4, 4, 4}), 1, 4);
  EXPECT_EQ(x.dilations, (std::vector<int>{1, 4, 4, 4, 1}));
  EXPECT_EQ(y.dilations, (std::vector<int>{4, 1, 1, 1, 4}));
}

TEST(Crossover, PerPositionMultisetIsPreserved) {
  Rng rng(2);
  const SearchSpace s = build_space(2, 10, 1024);
  for (int trial = 0; trial < 1000; ++trial) {
    const DilationGenome a = random_genome(s, 7, rng), b = random_genome(s, 7, rng);
    const auto [x, y] = crossover_segments(a, b, rng);
    for (std::size_t l = 0; l < 7; ++l) {
      EXPECT_EQ(std::multiset<int>({x[l], y[l]}), std::multiset<int>({a[l], b[l]}));
    }
  }
}

TEST(Crossover, SwappedGenesFormOneContiguousSegment) {
  Rng rng(3);
  const DilationGenome a({1, 1, 1, 1, 1, 1}), b({2, 2, 2, 2, 2, 2});
  for (int trial = 0; trial < 500; ++trial) {
    const auto [x, y] = crossover_segments(a, b, rng);
    int changes = 0;
    for (std::size_t l = 1; l < 6; ++l) changes += x[l] != x[l - 1];
    changes += x[0] != 1;
    changes += x[5] != 1;
    EXPECT_TRUE(changes == 0 || changes == 2);
  }
}

TEST(Mutation, ZeroGenomeProbabilityIsIdentity) {
  Rng rng(4);
  const SearchSpace s = build_space(2, 10, 1024);
  const DilationGenome g({1, 2, 4, 8});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(mutate(g, s, 0.0, 1.0, rng), g);
}

TEST(Mutation, SingletonSpaceGivesAllOnes) {
  Rng rng(5);
  const SearchSpace s = build_space(2, 0, 1);
  EXPECT_EQ(mutate(DilationGenome({1, 1, 1}), s, 1.0, 1.0, rng).dilations, std::vector<int>(3, 1));
}

TEST(Mutation, ChangedGeneFrequency) {
  Rng rng(6);
  const SearchSpace s = build_space(2, 10, 1024);
  const int trials = 100000;
  const std::size_t L = 10;
  long changed = 0;
  for (int i = 0; i < trials; ++i) {
    const DilationGenome g = random_genome(s, L, rng);
    const DilationGenome m = mutate(g, s, 0.2, 0.2, rng);
    for (std::size_t l = 0; l < L; ++l) changed += m[l] != g[l];
  }
  const double expected = 0.2 * 0.2 * (1.0 - 1.0 / 11.0);
  EXPECT_NEAR(static_cast<double>(changed) / (trials * L), expected, 0.005);
}

TEST(Mutation, NeighborModeStepsOnePosition) {
  Rng rng(7);
  const SearchSpace s = build_space(2, 10, 1024);
  const DilationGenome g({1, 32, 1024});
  for (int i = 0; i < 200; ++i) {
    const DilationGenome m = mutate(g, s, 1.0, 1.0, rng, MutationMode::Neighbor);
    for (std::size_t l = 0; l < 3; ++l) {
      const auto diff = static_cast<long>(s.index_of(m[l])) - static_cast<long>(s.index_of(g[l]));
      EXPECT_EQ(std::abs(diff), 1);
    }
  }
}

TEST(Evaluate, DeterministicAndSurrogateClosedForm) {
  SurrogateFitness f{DilationGenome({2, 8})};
  const Trainer t = f.as_trainer();
  const EvalRecord a = evaluate(DilationGenome({4, 8}), t, 3, 11);
  const EvalRecord b = evaluate(DilationGenome({4, 8}), t, 3, 11);
  EXPECT_EQ(a.fitness, b.fitness);
  EXPECT_EQ(a.fitness, -1.0);
  EXPECT_EQ(a.epochs_trained, 3);
  EXPECT_EQ(a.seed, 11u);
}

TEST(Evaluate, DivergenceBecomesWorstSentinel) {
  const Trainer t = [](const DilationGenome&, int, std::uint64_t) -> TrainerResult {
    throw TrainingDiverged("nan");
  };
  const EvalRecord r = evaluate(DilationGenome({1}), t, 2, 0);
  EXPECT_EQ(r.fitness, kDivergedFitness);
  EXPECT_TRUE(std::isfinite(r.fitness));
  EXPECT_EQ(r.metrics.at("diverged"), 1.0);
}

GlobalConfig small_config(std::uint64_t seed) {
  GlobalConfig cfg;
  cfg.space = build_space(2, 2, 4);
  cfg.num_layers = 3;
  cfg.population = 8;
  cfg.iterations = 10;
  cfg.master_seed = seed;
  return cfg;
}

TEST(GlobalSearch, SingletonSpaceTwoMembers) {
  GlobalConfig cfg;
  cfg.space = build_space(2, 0, 1);
  cfg.num_layers = 3;
  cfg.population = 2;
  cfg.iterations = 1;
  const auto r = run_global_search(cfg, SurrogateFitness{DilationGenome({1, 1, 1})}.as_trainer());
  ASSERT_EQ(r.population.members.size(), 2u);
  for (const auto& m : r.population.members) EXPECT_EQ(m.record.genome.dilations, std::vector<int>(3, 1));
}

TEST(GlobalSearch, ElitismSizeAndValidity) {
  const SurrogateFitness f{DilationGenome({4, 1, 2})};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GlobalConfig cfg = small_config(seed);
    GlobalSearchOptions opts;
    opts.on_generation = [&](const GenerationReport& r) {
      EXPECT_LE(r.population->members.size(), cfg.population);
      for (const auto& m : r.population->members) EXPECT_TRUE(genome_in_space(m.record.genome, cfg.space));
      EXPECT_TRUE(std::is_sorted(r.population->members.begin(), r.population->members.end(),
                                 survivor_before));
    };
    const auto r = run_global_search(cfg, f.as_trainer(), opts);
    EXPECT_TRUE(std::is_sorted(r.best_by_generation.begin(), r.best_by_generation.end()));
    EXPECT_EQ(r.best_by_generation.size(), static_cast<std::size_t>(cfg.iterations + 1));
  }
}

TEST(GlobalSearch, TrainerCalledOncePerDistinctGenome) {
  std::atomic<int> calls{0};
  std::mutex mu;
  std::set<std::vector<int>> seen;
  const SurrogateFitness f{DilationGenome({4, 1, 2})};
  const Trainer counting = [&](const DilationGenome& g, int e, std::uint64_t s) {
    ++calls;
    std::lock_guard lock(mu);
    EXPECT_TRUE(seen.insert(g.dilations).second) << "re-evaluated " << to_genome_string(g);
    return f.as_trainer()(g, e, s);
  };
  const auto r = run_global_search(small_config(3), counting);
  EXPECT_EQ(static_cast<std::size_t>(calls.load()), r.evaluations);
  EXPECT_EQ(r.evaluations, seen.size());
}

TEST(GlobalSearch, DeterministicAcrossJobCounts) {
  const SurrogateFitness f{DilationGenome({2, 2, 4})};
  GlobalSearchOptions one, four;
  four.jobs = 4;
  const auto a = run_global_search(small_config(9), f.as_trainer(), one);
  const auto b = run_global_search(small_config(9), f.as_trainer(), four);
  ASSERT_EQ(a.population.members.size(), b.population.members.size());
  for (std::size_t i = 0; i < a.population.members.size(); ++i) {
    EXPECT_EQ(a.population.members[i].record.genome, b.population.members[i].record.genome);
    EXPECT_EQ(a.population.members[i].candidate_id, b.population.members[i].candidate_id);
    EXPECT_EQ(a.population.members[i].record.fitness, b.population.members[i].record.fitness);
  }
  EXPECT_EQ(a.best_by_generation, b.best_by_generation);
}

TEST(GlobalSearch, TieBreakPrefersSmallerGenomeThenId) {
  Individual a{EvalRecord{DilationGenome({1, 2}), 0.5}, 7};
  Individual b{EvalRecord{DilationGenome({1, 4}), 0.5}, 1};
  Individual c{EvalRecord{DilationGenome({1, 2}), 0.5}, 3};
  Individual d{EvalRecord{DilationGenome({8, 8}), 0.9}, 9};
  std::vector<Individual> v{a, b, c, d};
  std::sort(v.begin(), v.end(), survivor_before);
  EXPECT_EQ(v[0].candidate_id, 9u);
  EXPECT_EQ(v[1].candidate_id, 3u);
  EXPECT_EQ(v[2].candidate_id, 7u);
  EXPECT_EQ(v[3].candidate_id, 1u);
}

TEST(GlobalSearch, RejectsInvalidConfig) {
  GlobalConfig cfg = small_config(0);
  cfg.population = 1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_config(0);
  cfg.p_m = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_config(0);
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace rfs
