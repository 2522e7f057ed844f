#pragma once

#include <vector>

#include "insat/types.hpp"

namespace insat {

/// Solution of min 0.5 x'Hx + g'x subject to lower <= x <= upper.
struct BoxQpResult {
  enum class Status { Failed, NoDescent, SmallGradient, SmallImprovement, AllClamped, MaxIterations };
  Status status = Status::Failed;
  Vector x;
  std::vector<bool> free;  // components strictly inside the box at the solution
  Eigen::LLT<Matrix> free_factor;  // Cholesky of H restricted to the free set
  int iterations = 0;

  bool ok() const { return status != Status::Failed; }
  int free_count() const;
};

/// Projected-Newton solver. Fails when H restricted to the free set is not positive definite.
BoxQpResult box_qp(const Matrix& H, const Vector& g, const Vector& lower, const Vector& upper,
                   const Vector& x0, int max_iterations = 100);

}  // namespace insat
