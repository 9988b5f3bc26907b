#include <random>

#include <benchmark/benchmark.h>

#include "copr/admm.hpp"
#include "copr/forward_model.hpp"
#include "copr/lifted.hpp"

using namespace copr;

namespace {

struct Modal {
  PropagationMatrix U;
  CVec a;
  RVec y;
};

Modal modal_problem(int k) {
  const PupilGrid g = make_pupil_grid(32, 0.5);
  const BasisSet basis = make_basis(g, k);
  const DiversitySet d = make_defocus_diversities(g, {-1.5, -0.75, 0.0, 0.75, 1.5});
  Modal p{build_modal_U(basis, d, CropWindow{20}), CVec(), RVec()};
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  p.a = CVec(basis.size());
  for (auto& v : p.a) v = cplx(1.0 + 0.1 * nd(rng), 0.1 * nd(rng));
  p.y = p.U.apply(p.a).cwiseAbs2();
  return p;
}

void BM_AdmmIteration(benchmark::State& state) {
  const Modal p = modal_problem(static_cast<int>(state.range(0)));
  const CVec b = -(p.a * 0.9);
  AdmmOptions o;
  o.max_iter = 20;
  o.tol = 1e-300;
  for (auto _ : state) benchmark::DoNotOptimize(nn_admm(p.U, b, p.y, o).a);
  state.counters["n_a"] = static_cast<double>(p.a.size());
  state.counters["n_y"] = static_cast<double>(p.y.size());
  state.counters["iter/s"] = benchmark::Counter(20.0 * static_cast<double>(state.iterations()),
                                                benchmark::Counter::kIsRate);
}
BENCHMARK(BM_AdmmIteration)->DenseRange(3, 7)->Unit(benchmark::kMillisecond);

void BM_Svd2x2(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<Block2> blocks(1024);
  for (auto& b : blocks)
    for (int i = 0; i < 4; ++i) b(i / 2, i % 2) = cplx(nd(rng), nd(rng));
  for (auto _ : state)
    for (const auto& b : blocks) benchmark::DoNotOptimize(svt(b, 0.5));
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * blocks.size()));
}
BENCHMARK(BM_Svd2x2);

void BM_Apply(benchmark::State& state) {
  const Modal p = modal_problem(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(p.U.apply(p.a));
}
BENCHMARK(BM_Apply)->Arg(3)->Arg(7);

}  // namespace
BENCHMARK_MAIN();
