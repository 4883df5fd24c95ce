// Serial-vs-OpenMP timing for the data-parallel kernels: Monte Carlo record
// generation, polar sweeps, and the covariance accumulator. The parallel
// paths must reproduce the serial results exactly; this tool asserts that
// while measuring throughput.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "spinretro/estimator.hpp"
#include "spinretro/monte_carlo.hpp"
#include "spinretro/retrodiction.hpp"

using namespace spinretro;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <typename F>
double timed(F&& f) {
  const double t0 = now_ms();
  f();
  return now_ms() - t0;
}

void require(bool ok, const char* what) {
  if (!ok) {
    std::fprintf(stderr, "MISMATCH: %s\n", what);
    std::exit(1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::int64_t reps = argc > 1 ? std::atoll(argv[1]) : 200000;
  std::printf("threads available: %d\n", omp_get_max_threads());

  sim::SequenceConfig config =
      sim::SequenceConfig::ideal(1.7, 0.81, 3.3, 2.2, 0.0, BackactionMode::residual);
  config.seed = 20240817;
  config.repetitions = reps;

  sim::RecordSet serial, parallel;
  const double t_mc_serial = timed([&] { serial = sim::monte_carlo_serial(config); });
  const double t_mc_parallel = timed([&] { parallel = sim::monte_carlo(config); });
  bool identical = serial.records.size() == parallel.records.size();
  for (std::size_t i = 0; identical && i < serial.records.size(); ++i) {
    for (int j = 0; j < 4; ++j) {
      identical &= serial.records[i].m[static_cast<std::size_t>(j)] ==
                   parallel.records[i].m[static_cast<std::size_t>(j)];
    }
  }
  require(identical, "monte_carlo parallel != serial");
  std::printf("monte_carlo     %9lld reps   serial %8.1f ms   parallel %8.1f ms   x%.2f\n",
              static_cast<long long>(reps), t_mc_serial, t_mc_parallel,
              t_mc_serial / t_mc_parallel);

  est::CovarianceSummary cs, cp;
  const double t_cov_serial = timed([&] { cs = est::covariance_summary_serial(serial); });
  const double t_cov_parallel = timed([&] { cp = est::covariance_summary(serial); });
  require((cs.cov - cp.cov).cwiseAbs().maxCoeff() == 0.0, "covariance parallel != serial");
  std::printf("covariance      %9lld rows   serial %8.1f ms   parallel %8.1f ms   x%.2f\n",
              static_cast<long long>(reps), t_cov_serial, t_cov_parallel,
              t_cov_serial / t_cov_parallel);

  std::vector<double> thetas(720);
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    thetas[i] = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(thetas.size());
  }
  RetrodictionResult rs, rp;
  const double t_sweep_serial = timed([&] { rs = polar_sweep_serial(config, thetas); });
  const double t_sweep_parallel = timed([&] { rp = polar_sweep(config, thetas); });
  bool sweep_equal = true;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    sweep_equal &= rs.var_retro[i] == rp.var_retro[i] &&
                   rs.var_optical_retro[i] == rp.var_optical_retro[i];
  }
  require(sweep_equal, "polar_sweep parallel != serial");
  std::printf("polar_sweep     %9zu angles serial %8.1f ms   parallel %8.1f ms   x%.2f\n",
              thetas.size(), t_sweep_serial, t_sweep_parallel,
              t_sweep_serial / t_sweep_parallel);
  return 0;
}
