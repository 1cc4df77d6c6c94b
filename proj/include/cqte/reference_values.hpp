#pragma once

#include "cqte/estimator.hpp"

namespace cqte {

//! Reference Monte Carlo results for the built-in simulation designs at full
//! replication scale; value triples are indexed by x1 in {-0.2, 0, 0.2}.
struct ReferenceCell {
    int group;
    int n;
    int model;
    EstimatorTag estimator;
    double bias[3];
    double sd[3];
    double mse[3];
};

//! All reference cells (groups 1-2, n in {500,1000}, models 1-3).
const std::vector<ReferenceCell>& reference_values();

//! nullptr when the configuration has no reference entry.
const ReferenceCell* find_reference(int group, int n, int model, EstimatorTag estimator);

} // namespace cqte
