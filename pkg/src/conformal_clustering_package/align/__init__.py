from .assignment import CostMatrix, Permutation, brute_force_assignment, build_confusion_cost, solve_assignment

__all__ = ["CostMatrix", "Permutation", "brute_force_assignment", "build_confusion_cost", "solve_assignment"]
