#pragma once

#include <cstddef>
#include <vector>

namespace anaquest::stats {

// Overflow-safe logistic.
double sigmoid(double x);

double norm_pdf(double x);

double mean(const std::vector<double>& v);
// Sample standard deviation (ddof = 1).
double sample_sd(const std::vector<double>& v);
double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double ibeta(double a, double b, double x);

// Two-sided tail probability of Student's t with df degrees of freedom,
// via p = I_{df/(df+t^2)}(df/2, 1/2).
double student_t_two_sided_p(double t, double df);

}  // namespace anaquest::stats
