"""Certificates and simulations for spatially uniform dynamics.

The library decides whether a reaction-diffusion system on a bounded medium,
or a network of diffusively coupled identical units, forgets spatial
structure: whether every solution converges to a spatially uniform (or
synchronous) trajectory. The decision comes from constant-matrix inequality
certificates built over a Jacobian envelope, cross-checked by closed-form
criteria and direct simulation.
"""

from .envelope import (BoxTerm, Envelope, FhnParams, GoldbeterParams,
                       GoodwinParams, Model, StateDomain, fhn_envelope,
                       fhn_model, goldbeter_envelope, goldbeter_model,
                       goodwin_envelope, goodwin_model, lure_envelope,
                       membership_audit)
from .lmi import (Certificate, LmiProblem, certificate_check, certified_epsilon,
                  composite_lmi, lemma_s_converse_search, vertex_lmis)
from .numerics import SymMat, spectral_norm, sym_eigs
from .sdpfeas import (FeasibilityResult, SolveOptions, grid_search_diagonal,
                      solve_feasibility, threshold_search)
from .analytic import (CyclicSpec, fhn_certificate, goodwin_secant_threshold,
                       othmer_check, secant_criterion)
from .spectral import (DomainSpec, Graph, directed_algebraic_connectivity,
                       domain_lambda2, graph_lambda2, graph_laplacian)
from .dynamics import (PdeGrid, Trace, fit_decay_rate, modal_oracle,
                       modal_projection, simulate_network, simulate_pde)

__version__ = "0.1.0"

__all__ = [
    "BoxTerm", "Envelope", "FhnParams", "GoldbeterParams", "GoodwinParams",
    "Model", "StateDomain", "fhn_envelope", "fhn_model", "goldbeter_envelope",
    "goldbeter_model", "goodwin_envelope", "goodwin_model", "lure_envelope",
    "membership_audit", "Certificate", "LmiProblem", "certificate_check",
    "certified_epsilon", "composite_lmi", "lemma_s_converse_search",
    "vertex_lmis", "SymMat", "spectral_norm", "sym_eigs", "FeasibilityResult",
    "SolveOptions", "grid_search_diagonal", "solve_feasibility",
    "threshold_search", "CyclicSpec", "fhn_certificate",
    "goodwin_secant_threshold", "othmer_check", "secant_criterion",
    "DomainSpec", "Graph", "directed_algebraic_connectivity", "domain_lambda2",
    "graph_lambda2", "graph_laplacian", "PdeGrid", "Trace", "fit_decay_rate",
    "modal_oracle", "modal_projection", "simulate_network", "simulate_pde",
]
