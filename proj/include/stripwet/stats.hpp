#pragma once

#include <functional>
#include <span>
#include <vector>

namespace stripwet {

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|. Inputs are copied
/// and sorted.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// One-sample statistic against a continuous CDF.
double ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Half the L1 distance. Lengths must match; inputs need not be normalized.
double tv_distance(std::span<const double> p, std::span<const double> q);

/// k-sigma half-width of a binomial proportion estimate.
double binomial_band(double prob, long n, double k_sigma);

/// Linear-interpolated empirical quantile, level in [0, 1].
double quantile(std::vector<double> sample, double level);

double mean(std::span<const double> x);
double standard_error(std::span<const double> x);

}  // namespace stripwet
