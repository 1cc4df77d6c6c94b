#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "cqte/errors.hpp"

namespace cqte {

//! Immutable sample of (Y, D, X) rows; the first `l` columns of x form the
//! conditioning covariates X₁. Construction validates all invariants, after
//! which the object is safe for concurrent read.
class Dataset {
public:
    static Dataset create(Eigen::VectorXd y, Eigen::VectorXi d, Eigen::MatrixXd x, int l);

    int n() const { return static_cast<int>(y_.size()); }
    int k() const { return static_cast<int>(x_.cols()); }
    int l() const { return l_; }

    const Eigen::VectorXd& y() const { return y_; }
    const Eigen::VectorXi& d() const { return d_; }
    const Eigen::MatrixXd& x() const { return x_; }

    //! Row indices sorted lexicographically by (x row, y, d). Every reduction
    //! over observations accumulates in this order, which makes all outputs
    //! invariant under row permutation of the input.
    const std::vector<int>& canonical_order() const { return order_; }

private:
    Dataset() = default;
    Eigen::VectorXd y_;
    Eigen::VectorXi d_;
    Eigen::MatrixXd x_;
    int l_ = 0;
    std::vector<int> order_;
};

//! Evaluation design: conditioning points x₁₀ (each of length l) and quantile
//! levels τ.
struct EvalGrid {
    std::vector<Eigen::VectorXd> points;
    std::vector<double> taus;
};

//! Load a CSV with header columns y, d, x1..xk (any column order, exact set).
Dataset load_csv(const std::string& path, int l);

//! Write a dataset back to CSV. Doubles are printed in shortest round-trip
//! form, so load_csv(save_csv(ds)) reproduces ds bit-exactly.
void save_csv(const Dataset& data, const std::string& path);

//! Check every grid point lies strictly inside the observed coordinate-wise
//! range of X₁ and every τ is in (0,1); returns the grid unchanged.
EvalGrid validate_grid(const Dataset& data, EvalGrid grid);

} // namespace cqte
