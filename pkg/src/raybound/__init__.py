"""Hard convex output constraints for neural networks via exact ray bounds."""

from .constraints import (ConstraintSet, LinearConstraint, QuadraticConstraint,
                          RayBound, eval_constraint, find_interior_point,
                          is_feasible, load_constraint_set, ray_bound_linear,
                          ray_bound_quadratic, save_constraint_set,
                          system_ray_bound)
from .equality import (EqualityReduction, EqualitySystem, kernel_basis, lift,
                       particular_solution, reduce_constraint_set,
                       reduce_linear, reduce_quadratic)
from .exceptions import DivergenceError, InfeasibleSetError, UnboundedRayError
from .layer import (HardLayer, JointConstraintSet, LayerGradients, backward,
                    boundary_map, central_project, forward, jacobian, sigmoid,
                    specialize_joint)
from .net import (AdamState, DenseNet, Objective, adam_step, eval_objective,
                  net_backward, net_forward)

__version__ = "0.1.0"

__all__ = [
    "ConstraintSet", "LinearConstraint", "QuadraticConstraint", "RayBound",
    "eval_constraint", "ray_bound_linear", "ray_bound_quadratic",
    "system_ray_bound", "is_feasible", "find_interior_point",
    "save_constraint_set", "load_constraint_set",
    "EqualitySystem", "EqualityReduction", "particular_solution",
    "kernel_basis", "reduce_linear", "reduce_quadratic", "lift",
    "reduce_constraint_set",
    "HardLayer", "JointConstraintSet", "LayerGradients", "forward", "backward",
    "jacobian", "central_project", "boundary_map", "specialize_joint", "sigmoid",
    "DenseNet", "AdamState", "Objective", "adam_step", "net_forward",
    "net_backward", "eval_objective",
    "InfeasibleSetError", "UnboundedRayError", "DivergenceError",
]
