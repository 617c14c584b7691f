// Sweep the subspace rank of a collapsed batch and print how the metrics respond.

#include <cstdio>

#include "whitekit/whitekit.hpp"

using namespace whitekit;

int main() {
  std::printf("%6s %6s %12s %12s %10s\n", "rank", "found", "anisotropy", "mean_corr", "mean_std");
  for (std::size_t r : {1u, 2u, 4u, 8u, 16u, 32u, 64u}) {
    SynthSpec spec;
    spec.pattern = Pattern::DimensionalCollapse;
    spec.n = 1000;
    spec.f = 64;
    spec.rank = r;
    spec.seed = 3;
    const FeatureReport rep = report(generate(spec).features);
    std::printf("%6zu %6zu %12.5f %12.5f %10.5f\n", r, rep.numerical_rank, rep.anisotropy,
                rep.mean_abs_corr, rep.mean_std);
  }
}
