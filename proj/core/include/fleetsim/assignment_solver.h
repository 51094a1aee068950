#pragma once

#include <cstdint>
#include <vector>

#include "fleetsim/types.h"

namespace fleetsim {

/// One candidate plan of a vehicle: the pool requests it covers and its cost.
struct AssignmentCandidate {
  std::vector<int> requests;  // indices into AssignmentProblem::request_weight
  Millis cost = 0;
};

/// Binary assignment program: every vehicle picks exactly one candidate,
/// every pool request is covered at most once, an uncovered request costs
/// its weight. Minimises sum of chosen costs plus uncovered weights.
struct AssignmentProblem {
  std::vector<Millis> request_weight;
  std::vector<std::vector<AssignmentCandidate>> vehicle_candidates;
};

struct AssignmentSolution {
  std::vector<int> choice;  // candidate index per vehicle, -1 if none fits
  Millis objective = 0;
  bool optimal = true;
  std::uint64_t nodes = 0;
};

/// Objective of a choice vector; kInfiniteMillis if two choices overlap.
Millis assignment_objective(const AssignmentProblem& problem, const std::vector<int>& choice);

/// Exact branch-and-bound. Vehicles that share no request are solved as
/// independent components. When a component exceeds `node_limit` the best
/// incumbent found so far (at least the greedy one) is returned and
/// `optimal` is false. A valid `hint` (one choice per vehicle) seeds the
/// incumbent, so the result is never worse than the hint.
AssignmentSolution solve_assignment(const AssignmentProblem& problem, std::uint64_t node_limit = 2'000'000,
                                    const std::vector<int>* hint = nullptr);

}  // namespace fleetsim
