#pragma once

#include "stripwet/matrix.hpp"

#include <array>
#include <complex>
#include <vector>

namespace stripwet {

enum class Boundary { Free, Constrained };

/// Closed-form constants of the (p,q) walk in strips of width 0, 1 and 2.
struct PQConstants {
  double p = 0.0;
  double q = 0.0;
  double beta_c_0 = 0.0;
  double beta_c_1 = 0.0;
  double beta_c_2 = 0.0;
  double r = 0.0;
  double c_K = 0.0;
  double sumK = 0.0;
  double C_1 = 0.0;
  double Delta_q = 0.0;
  /// Monic characteristic polynomial of M_2: X^3 + c[1] X^2 + c[2] X + c[3].
  std::array<double, 4> cubic{};
};

PQConstants pq_constants(double p);

/// Roots of X^3 + c2 X^2 + c1 X + c0, Newton-polished.
std::array<std::complex<double>, 3> cardan_roots(double c2, double c1, double c0);

/// Tridiagonal (a+1) x (a+1) matrix with diagonal q..q, (1+q)/2 and
/// off-diagonals p.
Matrix pq_matrix(double p, int a);
double spectral_radius_Ma(double p, int a);

struct PartitionDP {
  std::vector<long> N;
  std::vector<double> log_z;
  int height_cap = 0;
  /// Upper bound on the relative weight dropped at the height cap.
  double truncated = 0.0;
};

/// log Z_{N,a,beta} of the (p,q) walk started at `start`, by forward DP on
/// heights 0..a + 12 sqrt(N_max) + 10, one pass for all requested N.
PartitionDP transfer_matrix_series(double p, int a, double beta, const std::vector<long>& N_list,
                                   Boundary boundary, int start = 0);
double transfer_matrix_log_z(double p, int a, double beta, long N, Boundary boundary, int start = 0);

}  // namespace stripwet
