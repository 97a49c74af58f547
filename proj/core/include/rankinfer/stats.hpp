#pragma once

#include <cstddef>
#include <vector>

namespace rankinfer {

double normal_cdf(double x);

/// Inverse standard normal CDF; rational approximation plus one Halley step (|err| < 1e-12).
double normal_quantile(double p);

/// Linear-interpolation sample quantile (type 7); sorts a copy.
double quantile(std::vector<double> xs, double p);
double median(std::vector<double> xs);
double mean(const std::vector<double>& xs);

/// Standard error of a binomial proportion estimate.
double binomial_se(double p, std::size_t trials);

/// Least-squares slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov p-value.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

} // namespace rankinfer
