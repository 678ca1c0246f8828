#pragma once

namespace survscreen {

double normal_cdf(double z);
// 2 (1 - Phi(|z|)), computed through the complementary error function.
double two_sided_p(double z);
// z_{1 - alpha/2}
double z_critical(double alpha);

}  // namespace survscreen
