"""Functional aggregate queries with additive inequalities.

Exact width computation, a relaxed-decomposition evaluation engine, degree
partitioned plans, in-database learning and inequality queries over
tuple-independent probabilistic data.
"""
from .engine import evaluate, plan
from .errors import (CapacityError, DivergenceError, FaqaiError, InfeasibleError, PlanningError,
                     ShapeError, StructuralError)
from .heavylight import count_4cycle, count_path_ineq, degree_split
from .hypergraph import Hypergraph, TreeDecomposition, enumerate_tds
from .ml import (FeatureQuery, TrainConfig, bgd_train, cutting_plane_train, kmeans_fit, loss_eval)
from .oracle import oracle_eval, oracle_worlds
from .probiq import IQFactor, IQQuery, iq_probability
from .query import FaqAiQuery, Factor, Ligament, UnaryTerm, ligament, load_query, load_query_db
from .relation import AnnotatedRelation, Counters, Database, load_database
from .semiring import BOOLEAN, COUNT, REAL, get_semiring
from .widths import WidthReport, width

__all__ = [
    "AnnotatedRelation", "BOOLEAN", "COUNT", "CapacityError", "Counters", "Database",
    "DivergenceError", "FaqAiQuery", "FaqaiError", "Factor", "FeatureQuery", "Hypergraph",
    "IQFactor", "IQQuery", "InfeasibleError", "Ligament", "PlanningError", "REAL", "ShapeError",
    "StructuralError", "TrainConfig", "TreeDecomposition", "UnaryTerm", "WidthReport",
    "bgd_train", "count_4cycle", "count_path_ineq", "cutting_plane_train", "degree_split",
    "enumerate_tds", "evaluate", "get_semiring", "iq_probability", "kmeans_fit", "ligament",
    "load_database", "load_query", "load_query_db", "loss_eval", "oracle_eval", "oracle_worlds",
    "plan", "width",
]
