#pragma once

#include <cstddef>
#include <vector>

namespace pdhjb {

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

// Sample mean, unbiased standard deviation and standard error, summed in index order.
MeanStderr mean_stderr(const std::vector<double>& xs);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
// Slope of log(y) against log(x); entries with nonpositive values are rejected.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pdhjb
