import pytest

from conftest import complete, gnp
from tripoll import Graph, build_dodgr, oracle_survey
from tripoll.analyses import (
    SIMULTANEOUS,
    SURVEYS,
    ceil_log2,
    close_time_marginal,
    render_bin,
    run_surveys,
    snapshot_to_csv,
    survey_closure_times,
    survey_count,
    survey_degree_triples,
    survey_label_triples,
    survey_max_edge_label,
    time_bin,
)
from tripoll.survey import SurveyError


def k3(vlabels, emeta=(1, 2, 3)):
    return Graph.from_edges(
        [(0, 1, emeta[0]), (0, 2, emeta[1]), (1, 2, emeta[2])], dict(enumerate(vlabels))
    )


@pytest.mark.parametrize("n,expected", [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (1024, 10), (1025, 11)])
def test_ceil_log2(n, expected):
    assert ceil_log2(n) == expected


@pytest.mark.parametrize("delta,expected", [(0, SIMULTANEOUS), (0.25, 0), (1, 0), (2, 1), (3, 2), (16, 4), (17, 5), (2.0, 1), (2.5, 2), (0.0, SIMULTANEOUS)])
def test_time_bin(delta, expected):
    assert time_bin(delta) == expected


def test_render_bin():
    assert render_bin(SIMULTANEOUS) == "simultaneous" and render_bin(3) == "3"


def test_count_k4():
    assert survey_count(build_dodgr(complete(4), 3)) == 4


def test_max_edge_label_examples():
    assert survey_max_edge_label(build_dodgr(k3("ABC"), 2)) == [(3, 1)]
    assert survey_max_edge_label(build_dodgr(k3("AAB"), 2)) == []


def test_max_edge_label_needs_metadata():
    with pytest.raises(SurveyError, match="metadata"):
        survey_max_edge_label(build_dodgr(complete(3), 1))


def test_closure_examples():
    snap, marginal = survey_closure_times(build_dodgr(k3("xyz", (10, 14, 26)), 2))
    assert snap == [((2, 4), 1)] and marginal == [(4, 1)]
    snap, _ = survey_closure_times(build_dodgr(k3("xyz", (5, 5, 5)), 2))
    assert snap == [((SIMULTANEOUS, SIMULTANEOUS), 1)]


def test_closure_ignores_vertex_labels_unless_strict():
    parts = build_dodgr(k3("xxx", (10, 14, 26)), 1)
    assert survey_closure_times(parts)[0] == [((2, 4), 1)]
    assert survey_closure_times(parts, strict_pseudocode=True)[0] == []


def test_closure_rejects_text_timestamps():
    with pytest.raises(SurveyError, match="numeric"):
        survey_closure_times(build_dodgr(k3("xyz", ("a", "b", "c")), 1))


def test_label_triples_examples():
    assert survey_label_triples(build_dodgr(k3("zxy"), 2)) == [(("x", "y", "z"), 1)]
    assert survey_label_triples(build_dodgr(k3("xxy"), 2)) == []
    two = Graph.from_edges(
        [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)], {0: "x", 1: "y", 2: "z", 3: "z", 4: "x", 5: "y"}
    )
    assert survey_label_triples(build_dodgr(two, 3)) == [(("x", "y", "z"), 2)]


def test_label_triples_needs_labels():
    with pytest.raises(SurveyError, match="label"):
        survey_label_triples(build_dodgr(complete(3), 1))


def test_degree_triple_examples():
    assert survey_degree_triples(build_dodgr(complete(3), 2)) == [((1, 1, 1), 1)]
    assert survey_degree_triples(build_dodgr(complete(4), 2)) == [((2, 2, 2), 4)]


@pytest.mark.parametrize("which", SURVEYS)
def test_surveys_match_oracle_on_labeled_gnp(which):
    g = gnp(30, 0.3, 17, timestamps=True, labels=5)
    want = oracle_survey(g, which)
    for algo in ("push", "push-pull"):
        assert run_surveys(build_dodgr(g, 3), [which], algorithm=algo).snapshots[which] == want


@pytest.mark.parametrize("algo", ["push", "push-pull"])
def test_combined_run_matches_separate_runs(algo):
    g = gnp(60, 0.3, 4, timestamps=True, labels=4)
    parts = build_dodgr(g, 4)
    together = run_surveys(parts, SURVEYS, cache_capacity=8, algorithm=algo).snapshots
    for name in SURVEYS:
        assert together[name] == run_surveys(parts, [name], algorithm=algo).snapshots[name]
    strict = run_surveys(parts, ["closure-times", "degree-triples"], strict_pseudocode=True).snapshots
    assert strict["closure-times"] == run_surveys(parts, ["closure-times"], strict_pseudocode=True).snapshots["closure-times"]


@pytest.mark.parametrize("names", [["count", "label-triples"], ["max-edge-label", "degree-triples"]])
def test_combined_run_reports_missing_labels(names):
    with pytest.raises(SurveyError, match="wedge p=.*label"):
        run_surveys(build_dodgr(complete(4), 2), names)


def test_combined_run_rejects_text_timestamps():
    with pytest.raises(SurveyError, match="numeric"):
        run_surveys(build_dodgr(k3("xyz", ("a", "b", "c")), 1), ["count", "closure-times"])


def test_conservation_laws():
    g = gnp(60, 0.3, 9, timestamps=True, labels=3)
    snaps = run_surveys(build_dodgr(g, 2), SURVEYS).snapshots
    total = snaps["count"][0][1]
    assert sum(c for _, c in snaps["closure-times"]) == total
    assert sum(c for _, c in snaps["degree-triples"]) == total
    repeated = sum(1 for t in __import__("tripoll").oracle_triangles(g) if len({t.p_meta, t.q_meta, t.r_meta}) < 3)
    assert sum(c for _, c in snaps["label-triples"]) + repeated == total


def test_marginal_and_csv():
    snap = [((SIMULTANEOUS, SIMULTANEOUS), 2), ((1, 3), 4), ((2, 3), 1)]
    assert close_time_marginal(snap) == [(SIMULTANEOUS, 2), (3, 5)]
    text = snapshot_to_csv("closure-times", snap, "seconds")
    assert text.splitlines()[:3] == ["# open_bin,close_bin,count", "# time unit: seconds", "simultaneous,simultaneous,2"]
    assert snapshot_to_csv("label-triples", [(("a", "b", "c"), 2)]) == "a,b,c,2\n"


def test_unknown_survey():
    with pytest.raises(ValueError):
        run_surveys(build_dodgr(complete(3), 1), ["bogus"])
