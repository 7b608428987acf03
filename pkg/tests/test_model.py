"""Core model: validation, path enumeration, latencies, feasibility checks."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import scaleroute as sr
from scaleroute.model import AGGREGATION_TOL

from conftest import make_braess, make_pigou, make_two_identical

BRAESS_RAW = {
    "nodes": ["1", "2", "3", "4"],
    "links": [
        {"id": "l12", "tail": "1", "head": "2", "a": 1.0, "h": 1.0, "b": 1.0},
        {"id": "l13", "tail": "1", "head": "3", "a": 1.0, "h": 1.0, "b": 1.0},
        {"id": "l23", "tail": "2", "head": "3", "a": 1.0, "h": 1.0, "b": 0.0},
        {"id": "l24", "tail": "2", "head": "4", "a": 1.0, "h": 1.0, "b": 1.0},
        {"id": "l34", "tail": "3", "head": "4", "a": 1.0, "h": 1.0, "b": 1.0},
    ],
    "od_pairs": [{"origin": "1", "destination": "4", "demand": 1.0, "alpha": 0.5}],
}


class TestValidateInstance:
    def test_braess_has_three_paths(self):
        instance = sr.validate_instance(BRAESS_RAW)
        assert instance.n_paths == 3
        node_seqs = [p.nodes for p in instance.paths.all_paths]
        assert node_seqs == [("1", "2", "3", "4"), ("1", "2", "4"), ("1", "3", "4")]

    def test_asymmetry_out_of_range(self):
        raw = {
            "nodes": ["1", "2"],
            "links": [{"id": "e", "tail": "1", "head": "2", "a": 1.2, "h": 1.0, "b": 0.0}],
            "od_pairs": [{"origin": "1", "destination": "2", "demand": 1.0, "alpha": 0.5}],
        }
        with pytest.raises(sr.AsymmetryOutOfRange):
            sr.validate_instance(raw)

    def test_parallel_links_ordered_by_id(self):
        raw = {
            "nodes": ["1", "2"],
            "links": [
                {"id": "z", "tail": "1", "head": "2", "a": 1.0, "h": 1.0, "b": 0.0},
                {"id": "a", "tail": "1", "head": "2", "a": 1.0, "h": 1.0, "b": 0.0},
            ],
            "od_pairs": [{"origin": "1", "destination": "2", "demand": 1.0, "alpha": 0.5}],
        }
        instance = sr.validate_instance(raw)
        assert instance.n_paths == 2
        assert [p.links for p in instance.paths.all_paths] == [("a",), ("z",)]

    @pytest.mark.parametrize(
        "patch, error",
        [
            ({"a": -1.0}, sr.NonPositiveSlope),
            ({"h": 0.0}, sr.NonPositiveSlope),
            ({"b": -0.1}, sr.NegativeFreeFlow),
        ],
        ids=["neg-a", "zero-h", "neg-b"],
    )
    def test_link_coefficient_errors(self, patch, error):
        link = {"id": "e", "tail": "1", "head": "2", "a": 1.0, "h": 1.0, "b": 0.0}
        link.update(patch)
        raw = {
            "nodes": ["1", "2"],
            "links": [link],
            "od_pairs": [{"origin": "1", "destination": "2", "demand": 1.0, "alpha": 0.5}],
        }
        with pytest.raises(error):
            sr.validate_instance(raw)

    def test_demand_and_alpha_errors(self):
        raw = dict(BRAESS_RAW, od_pairs=[{"origin": "1", "destination": "4", "demand": 0.0, "alpha": 0.5}])
        with pytest.raises(sr.NonPositiveDemand):
            sr.validate_instance(raw)
        raw = dict(BRAESS_RAW, od_pairs=[{"origin": "1", "destination": "4", "demand": 1.0, "alpha": 1.5}])
        with pytest.raises(sr.BadAlpha):
            sr.validate_instance(raw)

    def test_no_path(self):
        raw = dict(BRAESS_RAW, od_pairs=[{"origin": "4", "destination": "1", "demand": 1.0, "alpha": 0.5}])
        with pytest.raises(sr.NoPath):
            sr.validate_instance(raw)

    def test_unknown_fields_rejected(self):
        raw = dict(BRAESS_RAW, extra=1)
        with pytest.raises(sr.InstanceFormatError):
            sr.validate_instance(raw)
        bad_link = dict(BRAESS_RAW)
        bad_link = {**BRAESS_RAW, "links": [dict(BRAESS_RAW["links"][0], capacity=3.0)] + BRAESS_RAW["links"][1:]}
        with pytest.raises(sr.InstanceFormatError):
            sr.validate_instance(bad_link)

    def test_self_loop_rejected(self):
        raw = {
            "nodes": ["1", "2"],
            "links": [{"id": "e", "tail": "1", "head": "1", "a": 1.0, "h": 1.0, "b": 0.0}],
            "od_pairs": [{"origin": "1", "destination": "2", "demand": 1.0, "alpha": 0.5}],
        }
        with pytest.raises(sr.ValidationError):
            sr.validate_instance(raw)

    def test_undeclared_endpoint_rejected(self):
        raw = {
            "nodes": ["1", "2"],
            "links": [{"id": "e", "tail": "1", "head": "3", "a": 1.0, "h": 1.0, "b": 0.0}],
            "od_pairs": [{"origin": "1", "destination": "2", "demand": 1.0, "alpha": 0.5}],
        }
        with pytest.raises(sr.InstanceFormatError):
            sr.validate_instance(raw)


class TestEnumeratePaths:
    def test_single_link(self):
        instance = sr.build_instance(
            ("o", "d"),
            [sr.Link("e", "o", "d", 1.0, 1.0, 0.0)],
            [sr.ODPair("o", "d", 1.0, 0.5)],
        )
        assert instance.n_paths == 1

    def test_braess_count(self, braess):
        assert braess.n_paths == 3

    def test_complete_digraph_explodes(self):
        nodes = tuple(f"n{i}" for i in range(8))
        links = [
            sr.Link(f"e{i}-{j}", nodes[i], nodes[j], 1.0, 1.0, 0.0)
            for i in range(8)
            for j in range(8)
            if i != j
        ]
        with pytest.raises(sr.PathExplosion):
            sr.build_instance(nodes, links, [sr.ODPair("n0", "n7", 1.0, 0.5)], path_cap=100)

    def test_enumeration_is_deterministic(self, braess):
        first = sr.enumerate_paths(braess)
        second = sr.enumerate_paths(braess)
        assert first.all_paths == second.all_paths
        assert first.od_slices == second.od_slices


class TestLatencies:
    def test_link_latency_examples(self):
        link = sr.Link("e", "1", "2", a=1.0, h=1.0, b=0.0)
        assert sr.link_latency(link, 0.5, 0.5) == pytest.approx(1.0)
        assert sr.link_latency(link, 0.0, 0.0) == 0.0
        link2 = sr.Link("e2", "1", "2", a=0.5, h=1.0, b=2.0)
        assert sr.link_latency(link2, 2.0, 1.0) == pytest.approx(4.0)

    def test_negative_flow_rejected(self):
        link = sr.Link("e", "1", "2", 1.0, 1.0, 0.0)
        with pytest.raises(sr.NegativeFlow):
            sr.link_latency(link, -0.1, 0.0)

    def test_path_latency_single_link(self):
        instance = sr.build_instance(
            ("o", "d"),
            [sr.Link("e", "o", "d", 1.0, 2.0, 0.5)],
            [sr.ODPair("o", "d", 1.0, 0.5)],
        )
        path = instance.paths.all_paths[0]
        fa, fh = np.array([0.25]), np.array([0.5])
        assert sr.path_latency(instance, path, (fa, fh)) == pytest.approx(0.25 + 1.0 + 0.5)

    def test_path_latency_braess_sum(self, braess):
        path = braess.paths.all_paths[0]  # (1,2,3,4)
        fa = np.linspace(0.1, 0.5, braess.n_links)
        fh = np.linspace(0.2, 0.4, braess.n_links)
        lat = braess.link_latencies(fa, fh)
        expected = sum(lat[braess.link_index[lid]] for lid in path.links)
        assert sr.path_latency(braess, path, (fa, fh)) == pytest.approx(expected)

    def test_path_latency_empty_flows_is_free_flow(self, braess):
        path = braess.paths.all_paths[0]
        zeros = np.zeros(braess.n_links)
        expected = sum(braess.links[braess.link_index[lid]].b for lid in path.links)
        assert sr.path_latency(braess, path, (zeros, zeros)) == pytest.approx(expected)

    def test_unknown_path(self, braess):
        bogus = sr.Path(nodes=("1", "4"), links=("nope",))
        with pytest.raises(sr.UnknownPath):
            sr.path_latency(braess, bogus, (np.zeros(5), np.zeros(5)))

    def test_concatenation_additivity(self):
        # line network with O/D pairs for both segments and the whole
        instance = sr.build_instance(
            ("1", "2", "3"),
            [sr.Link("e12", "1", "2", 1.0, 1.0, 0.3), sr.Link("e23", "2", "3", 0.5, 1.0, 0.1)],
            [
                sr.ODPair("1", "2", 1.0, 0.5),
                sr.ODPair("1", "3", 1.0, 0.5),
                sr.ODPair("2", "3", 1.0, 0.5),
            ],
        )
        flows = (np.array([0.4, 0.7]), np.array([0.1, 0.2]))
        by_nodes = {p.nodes: p for p in instance.paths.all_paths}
        whole = sr.path_latency(instance, by_nodes[("1", "2", "3")], flows)
        first = sr.path_latency(instance, by_nodes[("1", "2")], flows)
        second = sr.path_latency(instance, by_nodes[("2", "3")], flows)
        assert whole == pytest.approx(first + second)


class TestSocialCost:
    def test_zero_flow(self, pigou):
        flow = sr.ClassFlow.from_path_flows(pigou, np.zeros(2), np.zeros(2))
        assert sr.social_cost(pigou, flow) == 0.0

    def test_single_link_value(self):
        instance = sr.build_instance(
            ("1", "2"),
            [sr.Link("e", "1", "2", 1.0, 1.0, 0.0)],
            [sr.ODPair("1", "2", 1.0, 0.5)],
        )
        flow = sr.ClassFlow.from_path_flows(instance, np.array([0.5]), np.array([0.5]))
        assert sr.social_cost(instance, flow) == pytest.approx(1.0)

    def test_pigou_optimum_near_three_quarters(self, pigou):
        flow, cost = sr.oracle_optimal(pigou)
        assert cost == pytest.approx(0.75, abs=1e-2)
        assert sr.social_cost(pigou, flow) == pytest.approx(cost, abs=1e-9)


class TestFeasibility:
    def test_solver_flow_is_feasible(self, pigou):
        result = sr.system_optimal(pigou)
        assert sr.check_feasibility(pigou, result.flow)

    def test_zero_flow_residuals(self, pigou):
        flow = sr.ClassFlow.from_path_flows(pigou, np.zeros(2), np.zeros(2))
        report = sr.check_feasibility(pigou, flow)
        assert not report
        assert report.residuals_a[0] == pytest.approx(-0.5)
        assert report.residuals_h[0] == pytest.approx(-0.5)

    def test_hand_built_equal_split(self):
        instance = make_two_identical(alpha=0.5)
        flow = sr.ClassFlow.from_path_flows(instance, np.array([0.25, 0.25]), np.array([0.25, 0.25]))
        assert sr.check_feasibility(instance, flow)


class TestScalarSummaries:
    def test_min_asymmetry(self):
        instance = sr.build_instance(
            ("1", "2"),
            [
                sr.Link("a", "1", "2", 0.5, 1.0, 0.0),
                sr.Link("b", "1", "2", 0.8, 1.0, 0.0),
                sr.Link("c", "1", "2", 1.0, 1.0, 0.0),
            ],
            [sr.ODPair("1", "2", 1.0, 0.5)],
        )
        assert sr.min_asymmetry(instance) == pytest.approx(0.5)
        assert all(sr.min_asymmetry(instance) <= l.asymmetry for l in instance.links)

    def test_min_asymmetry_symmetric_and_third(self):
        sym = make_two_identical()
        assert sr.min_asymmetry(sym) == pytest.approx(1.0)
        instance = sr.build_instance(
            ("1", "2"),
            [sr.Link("e", "1", "2", 0.3, 0.9, 0.0)],
            [sr.ODPair("1", "2", 1.0, 0.5)],
        )
        assert sr.min_asymmetry(instance) == pytest.approx(1.0 / 3.0)

    def test_network_autonomy_fraction(self):
        uniform = make_braess(alpha=0.4)
        assert sr.network_autonomy_fraction(uniform) == pytest.approx(0.4)
        two = sr.build_instance(
            ("1", "2"),
            [sr.Link("e", "1", "2", 1.0, 1.0, 0.0), sr.Link("r", "2", "1", 1.0, 1.0, 0.0)],
            [sr.ODPair("1", "2", 1.0, 0.0), sr.ODPair("2", "1", 1.0, 1.0)],
        )
        assert sr.network_autonomy_fraction(two) == pytest.approx(0.5)
        weighted = sr.build_instance(
            ("1", "2"),
            [sr.Link("e", "1", "2", 1.0, 1.0, 0.0), sr.Link("r", "2", "1", 1.0, 1.0, 0.0)],
            [sr.ODPair("1", "2", 3.0, 1.0), sr.ODPair("2", "1", 1.0, 0.0)],
        )
        assert sr.network_autonomy_fraction(weighted) == pytest.approx(0.75)


class TestStackelbergChecks:
    def test_scale_output_is_weak_and_feasible(self, pigou):
        opt = sr.system_optimal(pigou)
        s = sr.scale_strategy(opt.flow, 0.5)
        check = sr.is_stackelberg_feasible(pigou, s)
        assert check and check.weak
        assert sr.is_opt_restricted(pigou, pigou.link_flows(s), opt.flow)

    def test_zero_leader_infeasible_with_positive_alpha(self, pigou):
        check = sr.is_stackelberg_feasible(pigou, np.zeros(2))
        assert not check

    def test_one_sided_leader_global_but_not_weak(self):
        instance = sr.build_instance(
            ("1", "2"),
            [sr.Link("e", "1", "2", 1.0, 1.0, 0.0), sr.Link("r", "2", "1", 1.0, 1.0, 0.0)],
            [sr.ODPair("1", "2", 1.0, 0.5), sr.ODPair("2", "1", 1.0, 0.5)],
        )
        s = np.array([1.0, 0.0])  # all leader flow on the first O/D pair
        check = sr.is_stackelberg_feasible(instance, s)
        assert check.feasible and not check.weak

    def test_opt_restricted_examples(self, pigou):
        opt = sr.system_optimal(pigou)
        doubled = 2.0 * opt.flow.total_link_flows
        assert not sr.is_opt_restricted(pigou, doubled, opt.flow)
        assert sr.is_opt_restricted(pigou, np.zeros(2), opt.flow)


@settings(max_examples=60, deadline=None)
@given(
    flows=st.lists(st.floats(min_value=0.0, max_value=50.0), min_size=6, max_size=6),
)
def test_link_aggregation_matches_incidence_product(flows):
    braess = make_braess()
    fa = np.array(flows[:3])
    fh = np.array(flows[3:])
    flow = sr.ClassFlow.from_path_flows(braess, fa, fh)
    # recompute link flows from the definition: sum over paths containing the link
    manual_a = np.zeros(braess.n_links)
    manual_h = np.zeros(braess.n_links)
    for j, path in enumerate(braess.paths.all_paths):
        for lid in path.links:
            manual_a[braess.link_index[lid]] += fa[j]
            manual_h[braess.link_index[lid]] += fh[j]
    assert np.max(np.abs(flow.link_flows_a - manual_a)) <= AGGREGATION_TOL * max(1.0, fa.max())
    assert np.max(np.abs(flow.link_flows_h - manual_h)) <= AGGREGATION_TOL * max(1.0, fh.max())


@settings(max_examples=60, deadline=None)
@given(
    flows=st.lists(st.floats(min_value=0.0, max_value=10.0), min_size=6, max_size=6),
    k=st.floats(min_value=1.0, max_value=25.0),
)
def test_social_cost_monotone_under_uniform_scaling(flows, k):
    braess = make_braess()
    fa = np.array(flows[:3])
    fh = np.array(flows[3:])
    base = sr.social_cost(braess, sr.ClassFlow.from_path_flows(braess, fa, fh))
    scaled = sr.social_cost(braess, sr.ClassFlow.from_path_flows(braess, k * fa, k * fh))
    assert scaled >= base - 1e-12 * max(1.0, base)
