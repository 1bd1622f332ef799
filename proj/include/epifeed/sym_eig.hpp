#pragma once

#include "epifeed/common.hpp"

namespace epifeed {

struct SymEig {
  Vec values;   // ascending
  Mat vectors;  // column i pairs with values(i)
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm is at most
/// `tol`. Each eigenvector is signed so that its largest-magnitude component
/// is positive.
SymEig symmetric_eig(const Mat& m, double tol = 1e-12, int max_sweeps = 100);

}  // namespace epifeed
