"""Potential-outcome calculus on mixed graphs: separation, fixing and identification of path-specific counterfactuals."""

from .errors import *  # noqa: F401,F403
from .expr import PIN, Cond, Joint, Marginal, Product, Quotient, SumOver, Substitute, evaluate, simplify, to_latex, to_text
from .fixing import (
    FixingState,
    all_fixing_sequences,
    district_factorization,
    fix_graph,
    fix_kernel,
    fix_sequence,
    fixable,
    fixing_sequence,
    hedge_superset,
    initial_state,
    intrinsic,
    markov_blanket,
    reachable,
)
from .graph import GraphDecl, MixedGraph, build_graph, districts, dumps, induced_subgraph, loads, mutilate, relatives
from .identify import (
    RULES,
    Factor,
    Functional,
    NonIdWitness,
    PathQuery,
    RuleCheck,
    SeparationCert,
    docalc_equivalent,
    identify_query,
    maximal_rule2_set,
    ps_id,
    ps_idc,
    rule_applies,
)
from .oracle import (
    DiscreteSCM,
    dumps_scm,
    edge_g_formula,
    eval_functional,
    extend_scm,
    g_formula,
    hedge_gap,
    interventional,
    loads_scm,
    observed_joint,
    parity_counterexample,
    path_specific,
    random_scm,
    realize_bidirected,
)
from .query import parse_query, print_query, query_key
from .separation import PathWitness, all_paths, connecting_witness, m_separated, m_separated_bruteforce, path_blocked
from .table import DistTable, Table
from .transforms import (
    ExtendedAssignment,
    PathSet,
    Swig,
    all_proper_paths,
    contract,
    extend,
    latent_project,
    pathwise_assignment,
    split,
)

__version__ = "0.1.0"
