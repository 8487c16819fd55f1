#pragma once

#include "stripwet/matrix.hpp"
#include "stripwet/return_kernel.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace stripwet {

/// B^lambda over the strip nodes: entry (i, j) is
/// [sum_{n <= n_max} e^{-lambda n} f_ij(n) + theta_ij sum_{n > n_max} e^{-lambda n} n^{-3/2}] w_j.
/// origin_row is the same expression for the origin source.
struct OperatorB {
  double lambda = 0.0;
  Matrix matrix;
  std::vector<double> origin_row;
};

OperatorB assemble_B(const ReturnKernel& kernel, double lambda);

struct SpectralSolution {
  double delta = 0.0;
  std::vector<double> v;  // right Perron vector, max-normalized
  std::vector<double> w;  // left Perron vector, max-normalized
  double residual = 0.0;  // max of the right and left residuals
  int iterations = 0;
};

class SpectralError : public std::runtime_error {
 public:
  SpectralError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual(last_residual) {}
  double last_residual;
};

/// Shifted power iteration for a nonnegative square matrix, stopped when
/// |B v - delta v|_inf <= tol * delta. Throws SpectralError at the cap.
SpectralSolution spectral_radius(const Matrix& m, double tol = 1e-12, int max_iter = 200000);

double spectral_radius_at(const ReturnKernel& kernel, double lambda);

/// -log delta(0).
double critical_beta(const ReturnKernel& kernel);

struct FreeEnergy {
  double F = 0.0;
  double beta_c = 0.0;
  /// |delta(F) - e^{-beta}| when localized, 0 otherwise.
  double delta_residual = 0.0;
  int bisection_steps = 0;
};

/// Root of delta(lambda) = e^{-beta} by bracketed bisection; 0 for beta <= beta_c.
FreeEnergy free_energy(const ReturnKernel& kernel, double beta, double tol = 1e-10);

/// K_ij(n) = e^beta f_ij(n) e^{-F n} w_j v_j / v_i, plus the same for the
/// origin source with v extended to it by v_0 = (B v)_0 / delta.
struct TiltedKernel {
  double beta = 0.0;
  double F = 0.0;
  double beta_c = 0.0;
  double delta = 0.0;
  long n_max = 0;
  std::size_t m = 0;
  std::vector<double> values;      // [(i * m + j) * n_max + n - 1]
  Matrix tail;                     // K_ij(n) ~ tail_ij n^{-3/2} e^{-F n}, n > n_max
  std::vector<double> init_values; // origin row, [j * n_max + n - 1]
  std::vector<double> init_tail;
  std::vector<double> v, left, mu;
  double v_origin = 0.0;
  std::vector<double> row_mass;
  double init_row_mass = 0.0;
  bool localized = false;
  /// Mean return time under mu; +inf when not localized.
  double C_beta = 0.0;

  double K(std::size_t i, std::size_t j, long n) const;
  double K_init(std::size_t j, long n) const;
  /// || mu P - mu ||_1 with P_ij = sum_n K_ij(n) / row mass.
  double invariance_residual() const;
};

TiltedKernel build_tilted(const ReturnKernel& kernel, double beta);

}  // namespace stripwet
