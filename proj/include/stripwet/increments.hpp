#pragma once

#include "stripwet/rng.hpp"

#include <string>
#include <string_view>

namespace stripwet {

enum class LawKind { DiscretePQ, Gaussian, UniformSym };

/// Symmetric, zero-mean step law of the walk. Immutable once built.
///
/// DiscretePQ puts mass p on each of -1 and +1 and q = 1 - 2p on 0; the
/// "density" of a lattice law is its mass function on the integers.
class IncrementLaw {
 public:
  static IncrementLaw pq(double p);
  static IncrementLaw gaussian(double sigma);
  static IncrementLaw uniform(double halfwidth);

  /// Parses `pq:p=0.3`, `gauss:sigma=1.0` or `unif:hw=1.0`.
  static IncrementLaw parse(std::string_view spec);

  LawKind kind() const { return kind_; }
  bool is_lattice() const { return kind_ == LawKind::DiscretePQ; }
  double parameter() const { return param_; }

  double p() const;
  double q() const;
  double variance() const;
  double sigma() const;

  double density(double x) const;
  /// P[X <= x].
  double cdf(double x) const;
  /// P[X > x].
  double upper_tail(double x) const { return 1.0 - cdf(x); }
  /// Largest density value.
  double max_density() const;
  /// |x| beyond which the density is negligible (below 1e-17 of its peak)
  /// or exactly zero.
  double support_radius() const;

  double draw(Rng& rng) const;

  std::string to_string() const;

  bool operator==(const IncrementLaw&) const = default;

 private:
  IncrementLaw(LawKind kind, double param) : kind_(kind), param_(param) {}

  LawKind kind_;
  double param_;
};

/// Smallest n such that both P[S_n > a] and P[-S_n > a] lie strictly inside
/// (0, 1). Throws std::runtime_error when none exists below the cap.
int min_window(const IncrementLaw& law, double a, int cap = 100000);

}  // namespace stripwet
