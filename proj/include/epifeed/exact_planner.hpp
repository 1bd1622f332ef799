#pragma once

#include "epifeed/mdp.hpp"
#include "epifeed/policy.hpp"
#include "epifeed/trajectory_ops.hpp"

namespace epifeed {

struct ExactPlan {
  TablePolicy policy;
  double value;
};

/// Backward induction over the full prefix tree of `kernel`. Terminal value is
/// score(tau); ties go to the smallest action index. Every prefix gets an
/// action, including those of zero probability under the kernel.
ExactPlan exact_plan(const TabularMdp& kernel, const TrajectoryScore& score,
                     double cap = kDefaultEnumerationCap);

}  // namespace epifeed
