#pragma once

#include <cstdint>
#include <vector>

#include "magflow/integrals.hpp"

namespace magflow {

/// Execution policy for the batch kernels. Every parallel kernel has a
/// serial twin running the identical per-element body, so results match
/// bit for bit; the serial path is the reference the tests compare against.
enum class Exec { Serial, OpenMP };

Exec default_exec();
void set_default_exec(Exec e);

/// Thread count used by the OpenMP path (0 = library default).
void set_thread_count(int n);

// --- batch kernels -----------------------------------------------------------------

/// values(m, s) = member_m(mu_s).
Mat evaluate_family_over_mus(const IntegralFamily& family,
                             const std::vector<ComplexAlgebraVector>& mus,
                             Exec exec);

/// Same, over trajectory states. Phase states pass through theta_map first.
Mat evaluate_family_over_trajectory(const IntegralFamily& family,
                                    const Trajectory& traj, bool states_are_theta,
                                    Exec exec);

/// Antisymmetric matrix of pairwise g_theta brackets of the family members
/// at one point, using the members' gradients.
Mat pairwise_bracket_matrix(const IntegralFamily& family,
                            const ComplexAlgebraVector& mu, Exec exec);

/// max_{points, i<j} |{f_i, f_j}_{g_theta}| over a batch of points.
double max_pairwise_bracket(const IntegralFamily& family,
                            const std::vector<ComplexAlgebraVector>& mus,
                            Exec exec);

/// spectra[s] = sorted spectrum of L(lambda) at state s.
std::vector<Eigen::VectorXcd> lax_spectra_over_trajectory(
    const LieAlgebraSpec& spec, const Trajectory& traj, bool states_are_theta,
    double epsilon, const AlgebraVector& b, double lambda, Exec exec);

/// Theta images of all trajectory states.
std::vector<ComplexAlgebraVector> theta_images(const LieAlgebraSpec& spec,
                                               const Trajectory& traj,
                                               bool states_are_theta,
                                               double epsilon, Exec exec);

} // namespace magflow
