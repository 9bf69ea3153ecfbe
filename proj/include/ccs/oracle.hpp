#pragma once

#include <span>
#include <vector>

#include "ccs/economy.hpp"
#include "ccs/model.hpp"

namespace ccs {

// Equilibrium at one date event of the tree, per agent of the calibration
// (one agent for the complete-markets planner).
struct TreeNode {
    std::vector<int> history;  // z_0 .. z_t
    double mu = 0.0;
    ClimateState climate;
    std::vector<double> holdings;
    std::vector<double> savings;
    std::vector<double> consumption;
    std::vector<double> value;
};

struct TreeSolution {
    Regime regime;
    std::vector<TreeNode> nodes;  // every date event with t < horizon, depth first
    double max_residual = 0.0;    // worst equation residual over all solves

    const TreeNode& at(std::span<const int> history) const;
};

// Horizon 2, two climate sensitivities, stronger damages so that abatement is material.
Calibration tiny_calibration();

// Solves every date event of a short horizon directly: all Euler equations,
// budgets and abatement conditions of a node form one Newton system, and next
// period's value gradients come from exact re-solves of the subtree.
TreeSolution brute_force_tree(const Calibration& cal, const Regime& regime, int z0);

} // namespace ccs
