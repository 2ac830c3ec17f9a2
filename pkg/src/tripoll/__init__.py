"""Metadata triangle surveys over a simulated distributed-memory runtime."""

from .analyses import (
    SURVEYS,
    run_surveys,
    survey_closure_times,
    survey_count,
    survey_degree_triples,
    survey_label_triples,
    survey_max_edge_label,
)
from .comm import Comm, CommStats
from .containers import CountingSet, DistMap
from .generate import rmat_generate, rmat_graph
from .graph import Graph, build_dodgr, graph_stats, ingest, wedge_count
from .oracle import oracle_survey, oracle_triangles
from .survey import TriangleMeta, TriangleSurvey, merge_intersect, survey_push_only, survey_push_pull

__version__ = "0.1.0"
