#include <benchmark/benchmark.h>

#include "pdhjb/bsde.hpp"
#include "pdhjb/fsee.hpp"
#include "pdhjb/gauge.hpp"
#include "pdhjb/markovian.hpp"
#include "pdhjb/parallel.hpp"
#include "pdhjb/rng.hpp"
#include "pdhjb/variational.hpp"

using namespace pdhjb;

namespace {

DiscretePath bench_path(int dim, std::size_t steps) {
  KeyedStream rng(3);
  Eigen::MatrixXd v(dim, steps + 1);
  for (Eigen::Index j = 0; j < v.cols(); ++j)
    for (int i = 0; i < dim; ++i) v(i, j) = rng.uniform(-5.0, 5.0);
  return DiscretePath(DiscretePath::uniform_grid(1.0, steps), v);
}

ControlProblem heat(int dim) {
  ControlProblem p;
  p.state_dim = dim;
  p.noise_dim = dim;
  p.drift = [](const PathView& g, const ControlPoint& u) -> HVector {
    return -g.terminal() + HVector::Constant(g.dim(), u[0]);
  };
  p.diffusion = [](const PathView& g, const ControlPoint&) -> HMatrix { return 0.5 * HMatrix::Identity(g.dim(), g.dim()); };
  p.running = [](const PathView&, double, const NoiseVector&, const ControlPoint& u) { return -0.5 * u[0] * u[0]; };
  p.terminal = [](const PathView& g) { return g.terminal().sum(); };
  p.driver_yz_free = true;
  p.control_space = {ControlPoint::Zero(1)};
  return p;
}

}  // namespace

static void BM_Upsilon(benchmark::State& state) {
  const auto p = bench_path(static_cast<int>(state.range(0)), 64);
  const GaugeParams g{3, 3.0};
  for (auto _ : state) benchmark::DoNotOptimize(eval_upsilon(g, p));
}
BENCHMARK(BM_Upsilon)->Arg(1)->Arg(8)->Arg(64);

static void BM_UpsilonHessian(benchmark::State& state) {
  const auto p = bench_path(static_cast<int>(state.range(0)), 64);
  const GaugeParams g{3, 3.0};
  for (auto _ : state) benchmark::DoNotOptimize(hess_upsilon(g, p));
}
BENCHMARK(BM_UpsilonHessian)->Arg(1)->Arg(8)->Arg(64);

static void BM_KeyedNormals(benchmark::State& state) {
  double out[8];
  std::uint64_t i = 0;
  for (auto _ : state) {
    keyed_normals(1, 0, i++, 0, out, 8);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_KeyedNormals);

static void BM_SimulateMild(benchmark::State& state) {
  set_worker_count(1);
  const int dim = static_cast<int>(state.range(0));
  const auto op = SpectralOperator::dirichlet_laplacian(dim, 0.1);
  const auto prob = heat(dim);
  const auto init = DiscretePath::point(HVector::Ones(dim));
  const NoiseSpec noise{dim, 1, 1.0 / 64};
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_mild(op, prob, init, ControlProcess::constant(ControlPoint::Zero(1), "0"), noise, 256));
  }
  state.SetItemsProcessed(state.iterations() * 256 * 64);
}
BENCHMARK(BM_SimulateMild)->Arg(1)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_BsdeRegression(benchmark::State& state) {
  set_worker_count(1);
  const auto op = SpectralOperator::dirichlet_laplacian(4, 0.1);
  const auto prob = heat(4);
  const auto ens = simulate_mild(op, prob, DiscretePath::point(HVector::Ones(4)),
                                 ControlProcess::constant(ControlPoint::Zero(1), "0"), NoiseSpec{4, 1, 1.0 / 32},
                                 static_cast<std::size_t>(state.range(0)));
  auto spec = BsdeSpec::from_problem(prob);
  spec.driver_yz_free = false;
  const Basis basis = path_feature_basis(4);
  for (auto _ : state) benchmark::DoNotOptimize(solve_regression(ens, spec, basis));
}
BENCHMARK(BM_BsdeRegression)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_FdSolve(benchmark::State& state) {
  MarkovianSpec s;
  s.rates = {0.0};
  s.drift = [](double, const HVector&, const ControlPoint& u) -> HVector { return u; };
  s.diffusion = [](double, const HVector&, const ControlPoint&) -> HMatrix { return HMatrix::Identity(1, 1); };
  s.running = [](double, const HVector&, double, const NoiseVector&, const ControlPoint& u) { return -0.5 * u[0] * u[0]; };
  s.terminal = [](const HVector& x) { return x[0]; };
  for (double u : {-1.0, 0.0, 1.0}) s.controls.push_back(ControlPoint::Constant(1, u));
  s.time_homogeneous = true;
  s.running_rz_free = true;
  const double h = 1.0 / static_cast<double>(state.range(0));
  FdOptions o;
  o.refinement = false;
  for (auto _ : state) benchmark::DoNotOptimize(markovian_fd_solve(s, FdGrid{{-4.0}, {4.0}, h, 0.0}, o));
}
BENCHMARK(BM_FdSolve)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

static void BM_BorweinPreiss(benchmark::State& state) {
  const auto fam = random_family(5, static_cast<std::size_t>(state.range(0)), 2, 1, 1.0);
  FamilyFunctional f = [](const FamilyMember& m) { return -m.components.front().terminal().squaredNorm(); };
  // Start at the maximizer so the start is eps-optimal for every family size.
  std::size_t start = 0;
  for (std::size_t j = 1; j < fam.members.size(); ++j)
    if (f(fam.members[j]) > f(fam.members[start])) start = j;
  for (auto _ : state) benchmark::DoNotOptimize(borwein_preiss(f, fam, 0.5, start, AnchorSelection::slack));
}
BENCHMARK(BM_BorweinPreiss)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
