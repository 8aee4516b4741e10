#pragma once

/// Reference values produced by tests/oracles/constant_kernel_euler.py:
/// explicit Euler with dt = 1e-6 on the capped discrete system, K = 2,
/// n_1(0) = 1, cap 256.

namespace coagsim::oracle {

struct EulerRow {
  double t;
  double m0;
  double n1;
  double n2;
  double m1;
};

inline constexpr EulerRow kConstantKernelEuler[] = {
    {0.5, 0.6666664864598103, 0.44444405602030057, 0.14814832098789793, 0.99999999999999822},
    {1.0, 0.49999982671312554, 0.24999970171304617, 0.12500005042833207, 1.0000000000000013},
    {2.0, 0.33333321126526499, 0.11111095565830321, 0.074074058076075935, 1.0000000000000033},
    {5.0, 0.16666661689556897, 0.027777738039258253, 0.02314813377636209, 1.0000000000000318},
};

}  // namespace coagsim::oracle
