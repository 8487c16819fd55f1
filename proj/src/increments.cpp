#include "stripwet/increments.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace stripwet {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double parse_number(std::string_view text, std::string_view spec) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw std::invalid_argument("law spec '" + std::string(spec) + "': bad number '" +
                                std::string(text) + "'");
  }
  return value;
}

}  // namespace

IncrementLaw IncrementLaw::pq(double p) {
  if (!(p > 0.0 && p < 0.5)) throw std::invalid_argument("pq law needs p in (0, 1/2)");
  return {LawKind::DiscretePQ, p};
}

IncrementLaw IncrementLaw::gaussian(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("gauss law needs sigma > 0");
  return {LawKind::Gaussian, sigma};
}

IncrementLaw IncrementLaw::uniform(double halfwidth) {
  if (!(halfwidth > 0.0) || !std::isfinite(halfwidth)) throw std::invalid_argument("unif law needs hw > 0");
  return {LawKind::UniformSym, halfwidth};
}

IncrementLaw IncrementLaw::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  const auto eq = spec.find('=');
  if (colon == std::string_view::npos || eq == std::string_view::npos || eq < colon) {
    throw std::invalid_argument("law spec '" + std::string(spec) + "' must look like kind:key=value");
  }
  const auto kind = spec.substr(0, colon);
  const auto key = spec.substr(colon + 1, eq - colon - 1);
  const double value = parse_number(spec.substr(eq + 1), spec);
  if (kind == "pq" && key == "p") return pq(value);
  if (kind == "gauss" && key == "sigma") return gaussian(value);
  if (kind == "unif" && key == "hw") return uniform(value);
  throw std::invalid_argument("unknown law spec '" + std::string(spec) + "'");
}

double IncrementLaw::p() const {
  if (kind_ != LawKind::DiscretePQ) throw std::logic_error("p() on a continuous law");
  return param_;
}

double IncrementLaw::q() const { return 1.0 - 2.0 * p(); }

double IncrementLaw::variance() const {
  switch (kind_) {
    case LawKind::DiscretePQ: return 2.0 * param_;
    case LawKind::Gaussian: return param_ * param_;
    case LawKind::UniformSym: return param_ * param_ / 3.0;
  }
  return 0.0;
}

double IncrementLaw::sigma() const { return std::sqrt(variance()); }

double IncrementLaw::density(double x) const {
  switch (kind_) {
    case LawKind::DiscretePQ:
      if (x == 0.0) return 1.0 - 2.0 * param_;
      if (x == 1.0 || x == -1.0) return param_;
      return 0.0;
    case LawKind::Gaussian: {
      const double z = x / param_;
      return kInvSqrt2Pi / param_ * std::exp(-0.5 * z * z);
    }
    case LawKind::UniformSym:
      return std::abs(x) <= param_ ? 0.5 / param_ : 0.0;
  }
  return 0.0;
}

double IncrementLaw::cdf(double x) const {
  switch (kind_) {
    case LawKind::DiscretePQ:
      if (x < -1.0) return 0.0;
      if (x < 0.0) return param_;
      if (x < 1.0) return 1.0 - param_;
      return 1.0;
    case LawKind::Gaussian:
      return 0.5 * std::erfc(-x / (param_ * std::numbers::sqrt2));
    case LawKind::UniformSym:
      if (x <= -param_) return 0.0;
      if (x >= param_) return 1.0;
      return 0.5 * (x + param_) / param_;
  }
  return 0.0;
}

double IncrementLaw::max_density() const {
  switch (kind_) {
    case LawKind::DiscretePQ: return std::max(param_, 1.0 - 2.0 * param_);
    case LawKind::Gaussian: return kInvSqrt2Pi / param_;
    case LawKind::UniformSym: return 0.5 / param_;
  }
  return 0.0;
}

double IncrementLaw::support_radius() const {
  switch (kind_) {
    case LawKind::DiscretePQ: return 1.0;
    // exp(-z^2/2) < 1e-17 for z > 8.87
    case LawKind::Gaussian: return 8.9 * param_;
    case LawKind::UniformSym: return param_;
  }
  return 0.0;
}

double IncrementLaw::draw(Rng& rng) const {
  switch (kind_) {
    case LawKind::DiscretePQ: {
      const double u = rng.uniform();
      if (u < param_) return -1.0;
      if (u < 2.0 * param_) return 1.0;
      return 0.0;
    }
    case LawKind::Gaussian: return param_ * rng.normal();
    case LawKind::UniformSym: return param_ * (2.0 * rng.uniform() - 1.0);
  }
  return 0.0;
}

std::string IncrementLaw::to_string() const {
  std::ostringstream os;
  os.precision(12);
  switch (kind_) {
    case LawKind::DiscretePQ: os << "pq:p=" << param_; break;
    case LawKind::Gaussian: os << "gauss:sigma=" << param_; break;
    case LawKind::UniformSym: os << "unif:hw=" << param_; break;
  }
  return os.str();
}

int min_window(const IncrementLaw& law, double a, int cap) {
  if (!(a > 0.0)) throw std::invalid_argument("min_window needs a > 0");
  const auto inside = [](double prob) { return prob > 0.0 && prob < 1.0; };

  if (law.is_lattice()) {
    // Exact n-fold convolution of the mass function, indexed by offset n.
    const double p = law.p();
    const double q = law.q();
    std::vector<double> mass{1.0};
    for (int n = 1; n <= cap; ++n) {
      std::vector<double> next(mass.size() + 2, 0.0);
      for (std::size_t k = 0; k < mass.size(); ++k) {
        next[k] += p * mass[k];
        next[k + 1] += q * mass[k];
        next[k + 2] += p * mass[k];
      }
      mass.swap(next);
      double above = 0.0;
      double below = 0.0;
      for (std::size_t k = 0; k < mass.size(); ++k) {
        const double s = static_cast<double>(k) - n;
        if (s > a) above += mass[k];
        if (-s > a) below += mass[k];
      }
      if (inside(above) && inside(below)) return n;
    }
    throw std::runtime_error("min_window: no admissible n below cap");
  }

  // Continuous symmetric laws: S_n has a positive density on (-R_n, R_n)
  // with R_n = n * (support half-width), infinite for the Gaussian.
  // By symmetry P[-S_n > a] = P[S_n > a], and it never reaches 1.
  for (int n = 1; n <= cap; ++n) {
    if (law.kind() == LawKind::Gaussian) {
      const double spread = law.sigma() * std::sqrt(static_cast<double>(n));
      if (inside(0.5 * std::erfc(a / (spread * std::numbers::sqrt2)))) return n;
    } else if (n * law.parameter() > a) {
      return n;
    }
  }
  throw std::runtime_error("min_window: no admissible n below cap");
}

}  // namespace stripwet
