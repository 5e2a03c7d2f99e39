// Wall-clock comparison of the OpenMP kernels against their serial
// reference paths, on a realistic su(3) certification workload.

#include <chrono>
#include <cstdio>

#include <omp.h>

#include "magflow/kernels.hpp"
#include "magflow/rng.hpp"

using namespace magflow;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_of(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double>(Clock::now() - t0).count() / reps;
}

void report(const char* name, double serial_s, double omp_s) {
  std::printf("%-34s serial %8.3f ms   openmp %8.3f ms   speedup %.2fx\n", name,
              serial_s * 1e3, omp_s * 1e3, serial_s / omp_s);
}

} // namespace

int main(int argc, char** argv) {
  int threads = 0;
  if (argc > 1) threads = std::atoi(argv[1]);
  if (threads > 0) set_thread_count(threads);
  std::printf("threads available: %d\n", omp_get_max_threads());

  auto su3 = LieAlgebraSpec::su(3);
  const Complex I(0, 1);
  CMat am = CMat::Zero(3, 3);
  am(0, 0) = I * 1.0;
  am(1, 1) = I * 0.3;
  am(2, 2) = -I * 1.3;
  const AlgebraVector a = su3->coords_of(am);
  const OrbitContext ctx(su3, a);

  GaussianStream g(1);
  AlgebraVector b = g.vector(8);
  b /= su3->norm(b);
  const double eps = 0.7;
  const MagneticSetup setup{eps, b, 1.0};
  const IntegralFamily fam = family_semidirect(su3, b, default_lambda_grid(2), eps);

  std::printf("integrating the su(3) pendulum workload...\n");
  const Trajectory traj =
      integrate_pendulum(ctx, ctx.sample_phase_point(5), setup, 10.0, 1e-3, 10);

  report("family evaluation (16 x 10001)",
         seconds_of([&] { evaluate_family_over_trajectory(fam, traj, false, Exec::Serial); }, 3),
         seconds_of([&] { evaluate_family_over_trajectory(fam, traj, false, Exec::OpenMP); }, 3));

  std::vector<ComplexAlgebraVector> mus;
  for (std::uint64_t s = 0; s < 64; ++s) {
    PhasePoint pt = ctx.sample_phase_point(s);
    pt.p /= su3->norm(pt.p);
    mus.push_back(theta_map(*su3, pt, eps));
  }
  report("bracket sweep (120 pairs x 64 pts)",
         seconds_of([&] { max_pairwise_bracket(fam, mus, Exec::Serial); }, 3),
         seconds_of([&] { max_pairwise_bracket(fam, mus, Exec::OpenMP); }, 3));

  report("lax spectra (10001 states)",
         seconds_of([&] {
           lax_spectra_over_trajectory(*su3, traj, false, eps, b, 1.0, Exec::Serial);
         }, 3),
         seconds_of([&] {
           lax_spectra_over_trajectory(*su3, traj, false, eps, b, 1.0, Exec::OpenMP);
         }, 3));

  report("theta images (10001 states)",
         seconds_of([&] { theta_images(*su3, traj, false, eps, Exec::Serial); }, 3),
         seconds_of([&] { theta_images(*su3, traj, false, eps, Exec::OpenMP); }, 3));

  return 0;
}
