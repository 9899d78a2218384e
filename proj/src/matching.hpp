#pragma once

#include <vector>

#include "common.hpp"

namespace kserver {

// Rectangular min-cost assignment of rows (requests) to distinct columns
// (servers/medians). Requires rows <= columns.
struct AssignmentResult {
    std::vector<int> row_to_col;
    double cost = 0.0;  // plain row-order sum of the matched entries
};

// Shortest-augmenting-path Hungarian method; any optimal matching.
AssignmentResult min_cost_assignment(const std::vector<std::vector<double>>& cost);

// Optimal value only.
double assignment_value(const std::vector<std::vector<double>>& cost);

// Optimal matching with the lexicographically smallest column vector
// (row 0 first) among the optima. Columns are fixed row by row, comparing
// candidate totals recomputed as plain row-order sums so ties resolve the
// same way an exhaustive enumeration would.
AssignmentResult min_cost_assignment_lex(const std::vector<std::vector<double>>& cost);

}  // namespace kserver
