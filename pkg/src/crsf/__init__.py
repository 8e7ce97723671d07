"""Exact sampling of cycle-rooted spanning forests on surface graphs."""

__version__ = "0.1.0"

from .graph import (GraphError, OrientedCrsf, OrientedEdge, WeightedGraph, build_graph,
                    crsf_edge_weight, validate_crsf)
from .connection import (GaugeTransform, SU2Connection, U1Connection, apply_gauge,
                         connection_from_face_curvature, cycle_monodromy_angle,
                         cycle_monodromy_su2, realize_flat_torus)
from .surfaces import (SurfaceModel, classify_cycle, make_annulus, make_hyperbolic_ball_grid,
                       make_punctured_planar, make_sphere_grid, make_torus_grid, make_wired_cylinder)
from .laplacian import (assemble_laplacian, det_laplacian, green_function, spanning_tree_count,
                        transfer_impedance, z_lc0)
from .sampler import (CycleWeightFn, SamplerConfig, alpha_inc, alpha_lc, alpha_lc0,
                      loop_erased_walk, sample_crsf, sample_many)
from .closed_forms import (cheb, curved_cylinder_ratio, p_tau, wired_cylinder_Z,
                           wired_cylinder_loop_pgf)
from .oracle import (EnumerationTable, check_det_identity, check_lerw_lemma,
                     check_markov_restriction_domination, enumerate_crsfs, exact_measure)
