import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from traversability.heightmap import Heightmap, Pose, patch_radius
from traversability.oracle import NON_TRAVERSABLE, TRAVERSABLE, RobotSpec
from traversability.planner import (
    N_HEADINGS,
    ROTATE,
    TRANSLATE,
    Edge,
    PoseGraph,
    UnreachableError,
    build_graph,
    can_turn,
    generate_turn_dataset,
    max_prob_path,
    nearest_node,
    pareto_paths,
    path_probability,
    reachability,
    render_paths,
    render_reachability,
    shortest_path,
)
from traversability.planner.render import prob_color

from conftest import flat_map
from graph_oracles import brute_max_prob, brute_pareto, brute_shortest, close, random_graph

ROBOT = RobotSpec()


class ConstModel:
    def __init__(self, p):
        self.p = p

    def predict_proba(self, patches):
        return np.full(len(patches), self.p)


def lattice_graph(seed: int, size_px: int = 104) -> PoseGraph:
    """Real pose-lattice topology with random edge probabilities."""
    rng = np.random.default_rng(seed)
    g = build_graph(flat_map(size_px), ConstModel(1.0), ConstModel(1.0))
    edges = [Edge(e.src, e.dst, e.kind, e.length, float(rng.uniform(0.05, 1))) for e in g.edges]
    return PoseGraph(g.nodes, edges, g.spatial_step, g.angular_step, g.origin)


# --------------------------------------------------------------------------- path probability

def test_path_probability_examples():
    a = Edge(0, 1, TRANSLATE, 0.18, 0.9)
    b = Edge(1, 2, TRANSLATE, 0.18, 0.8)
    assert path_probability([Edge(0, 1, TRANSLATE, 0.18, 0.8)]) == 0.8
    assert path_probability([a, b]) == pytest.approx(0.72, rel=1e-15)
    assert path_probability([a, Edge(1, 2, TRANSLATE, 0.18, 0.0)]) == 0.0
    assert path_probability([]) == 1.0


def test_path_probability_rejects_gaps():
    with pytest.raises(ValueError):
        path_probability([Edge(0, 1, TRANSLATE, 1, 0.5), Edge(2, 3, TRANSLATE, 1, 0.5)])


def test_edge_validation():
    with pytest.raises(ValueError):
        Edge(0, 1, TRANSLATE, 1.0, 1.5)
    with pytest.raises(ValueError):
        Edge(0, 1, TRANSLATE, -1.0, 0.5)
    with pytest.raises(ValueError):
        PoseGraph([0], [Edge(0, 1, TRANSLATE, 1.0, 0.5)])


@given(st.lists(st.floats(1e-3, 1.0), min_size=1, max_size=30))
def test_log_additivity(probs):
    edges = [Edge(i, i + 1, TRANSLATE, 0.18, p) for i, p in enumerate(probs)]
    assert close(-math.log(path_probability(edges)), sum(-math.log(p) for p in probs), 1e-12)


# --------------------------------------------------------------------------- small hand graphs

def diamond():
    return PoseGraph(["s", "a", "b", "t"], [
        Edge("s", "a", TRANSLATE, 1.0, 0.5 ** 0.5), Edge("a", "t", TRANSLATE, 1.0, 0.5 ** 0.5),
        Edge("s", "b", TRANSLATE, 1.5, 0.9 ** 0.5), Edge("b", "t", TRANSLATE, 1.5, 0.9 ** 0.5),
    ])


def test_max_prob_prefers_more_probable_route():
    g = PoseGraph(list("sabt"), [
        Edge("s", "a", TRANSLATE, 1, 0.9), Edge("a", "t", TRANSLATE, 1, 0.8),
        Edge("s", "b", TRANSLATE, 1, 1.0), Edge("b", "t", TRANSLATE, 1, 0.5),
    ])
    res = max_prob_path(g, "s", "t")
    assert res.nodes == ["s", "a", "t"]
    assert res.traversal_prob == pytest.approx(0.72)


def test_max_prob_ties_go_to_shorter_then_lexicographic():
    g = PoseGraph(list("sabct"), [
        Edge("s", "b", TRANSLATE, 1, 0.5), Edge("b", "t", TRANSLATE, 1, 1.0),
        Edge("s", "a", TRANSLATE, 1, 0.5), Edge("a", "t", TRANSLATE, 1, 1.0),
        Edge("s", "c", TRANSLATE, 0.5, 0.5), Edge("c", "t", TRANSLATE, 2, 1.0),
    ])
    assert max_prob_path(g, "s", "t").nodes == ["s", "a", "t"]


def test_src_equals_dst_is_empty_path():
    g = diamond()
    for fn in (max_prob_path, shortest_path):
        res = fn(g, "s", "s")
        assert res.edges == () and res.total_length == 0 and res.traversal_prob == 1
    front = pareto_paths(g, "s", "s")
    assert front.objectives() == [(0.0, 1.0)]


def test_diamond_frontier_has_both_routes():
    front = pareto_paths(diamond(), "s", "t")
    objs = front.objectives()
    assert [o[0] for o in objs] == [2.0, 3.0]
    assert objs[0][1] == pytest.approx(0.5) and objs[1][1] == pytest.approx(0.9)
    assert not front.truncated


def test_dominating_route_gives_single_frontier():
    g = PoseGraph(list("sabt"), [
        Edge("s", "a", TRANSLATE, 1, 0.9), Edge("a", "t", TRANSLATE, 1, 0.9),
        Edge("s", "b", TRANSLATE, 2, 0.5), Edge("b", "t", TRANSLATE, 2, 0.5),
    ])
    assert len(pareto_paths(g, "s", "t").paths) == 1


def test_zero_probability_cut_is_unreachable():
    g = PoseGraph([0, 1, 2], [Edge(0, 1, TRANSLATE, 1, 0.7), Edge(1, 2, TRANSLATE, 1, 0.0)])
    with pytest.raises(UnreachableError):
        max_prob_path(g, 0, 2)
    with pytest.raises(UnreachableError):
        shortest_path(g, 0, 2)
    with pytest.raises(UnreachableError):
        pareto_paths(g, 0, 2)
    rm = reachability(g, 0)
    assert rm[0] == 1.0 and rm[1] == pytest.approx(0.7) and rm[2] == 0.0


def test_shortest_path_skips_edges_below_floor():
    g = PoseGraph(list("sabt"), [
        Edge("s", "a", TRANSLATE, 1, 1e-7), Edge("a", "t", TRANSLATE, 1, 1.0),
        Edge("s", "b", TRANSLATE, 5, 0.5), Edge("b", "t", TRANSLATE, 5, 0.5),
    ])
    assert shortest_path(g, "s", "t").total_length == 10
    assert shortest_path(g, "s", "t", prob_floor=0.0).total_length == 2
    # max-probability search excludes only exact zeros
    assert max_prob_path(g, "s", "t").nodes == ["s", "b", "t"]


def test_unknown_node_rejected():
    with pytest.raises(KeyError):
        max_prob_path(diamond(), "s", "nowhere")


def test_truncation_is_signaled():
    front = pareto_paths(lattice_graph(0), (0, 0, 0), (1, 1, 4), max_labels=2)
    assert front.truncated


# --------------------------------------------------------------------------- enumeration oracle

def _pairs(rng, n, k=3):
    return [tuple(int(v) for v in rng.integers(n, size=2)) for _ in range(k)]


def _check_single(g, src, dst):
    best = brute_max_prob(g, src, dst)
    if best is None:
        with pytest.raises(UnreachableError):
            max_prob_path(g, src, dst)
    else:
        res = max_prob_path(g, src, dst)
        assert close(res.traversal_prob, best[0]) and close(res.total_length, best[1])
    best = brute_shortest(g, src, dst)
    if best is None:
        with pytest.raises(UnreachableError):
            shortest_path(g, src, dst)
    else:
        res = shortest_path(g, src, dst)
        assert close(res.total_length, best[0]) and close(res.traversal_prob, best[1])


def _check_pareto(g, src, dst):
    want = brute_pareto(g, src, dst)
    if not want:
        with pytest.raises(UnreachableError):
            pareto_paths(g, src, dst)
        return
    got = sorted(pareto_paths(g, src, dst).objectives())
    assert len(got) == len(want)
    for (gl, gp), (wl, wp) in zip(got, want):
        assert close(gl, wl) and close(gp, wp)


@pytest.mark.parametrize("seed", range(5))
def test_single_objective_searches_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    for _ in range(20):
        n = int(rng.integers(2, 41))
        g = random_graph(rng, n, 2.5)
        for src, dst in _pairs(rng, n):
            _check_single(g, src, dst)


@pytest.mark.parametrize("seed", range(5))
def test_pareto_matches_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    for _ in range(20):
        n = int(rng.integers(2, 21))
        g = random_graph(rng, n, 3.0)
        for src, dst in _pairs(rng, n):
            _check_pareto(g, src, dst)


@pytest.mark.parametrize("seed", range(3))
def test_lattice_graphs_match_enumeration(seed):
    g = lattice_graph(seed)
    assert len(g.nodes) == 32
    rng = np.random.default_rng(seed)
    for _ in range(3):
        src, dst = (g.nodes[int(i)] for i in rng.integers(len(g.nodes), size=2))
        _check_single(g, src, dst)


@pytest.mark.parametrize("seed", range(10))
def test_frontier_properties(seed):
    rng = np.random.default_rng(200 + seed)
    g = random_graph(rng, 20, 3.0)
    for src, dst in _pairs(rng, 20, 5):
        try:
            front = pareto_paths(g, src, dst)
        except UnreachableError:
            continue
        objs = front.objectives()
        # sorted by length, strictly increasing probability
        assert all(a[0] < b[0] and a[1] < b[1] for a, b in zip(objs, objs[1:]))
        for p in front.paths:
            assert (p.nodes[0], p.nodes[-1]) == (src, dst) if p.edges else src == dst
            assert close(p.traversal_prob, path_probability(p.edges))
        mp = max_prob_path(g, src, dst)
        assert close(mp.traversal_prob, objs[-1][1])
        try:
            sp = shortest_path(g, src, dst, prob_floor=0.0)
        except UnreachableError:
            continue
        assert close(sp.total_length, objs[0][0]) and close(sp.traversal_prob, objs[0][1])


# --------------------------------------------------------------------------- reachability

def _log_close(a: float, b: float) -> bool:
    return close(-math.log(a), -math.log(b)) if a != 1.0 or b != 1.0 else True


@pytest.mark.parametrize("seed", range(20))
def test_reachability_matches_per_pair_search(seed):
    rng = np.random.default_rng(300 + seed)
    n = int(rng.integers(5, 41))
    g = random_graph(rng, n, 2.5)
    src = int(rng.integers(n))
    rm = reachability(g, src)
    assert rm[src] == 1.0
    for node in g.nodes:
        assert 0.0 <= rm[node] <= 1.0
        try:
            want = max_prob_path(g, src, node).traversal_prob
        except UnreachableError:
            assert rm[node] == 0.0
            continue
        assert _log_close(rm[node], want)
        assert close(rm.log_values[node], -math.log(want)) or want == 1.0


@pytest.mark.parametrize("seed", range(10))
def test_removing_an_edge_never_raises_reachability(seed):
    rng = np.random.default_rng(400 + seed)
    g = random_graph(rng, 25, 2.5)
    if not g.edges:
        return
    rm = reachability(g, 0)
    cut = g.without_edge(g.edges[int(rng.integers(len(g.edges)))])
    rm2 = reachability(cut, 0)
    for node in g.nodes:
        assert rm2[node] <= rm[node] * (1 + 1e-12)


def test_per_cell_takes_max_over_headings():
    g = lattice_graph(1)
    rm = reachability(g, (0, 0, 0))
    per_cell = rm.per_cell()
    for (i, j), v in per_cell.items():
        assert v == max(rm[(i, j, k)] for k in range(N_HEADINGS))
    assert per_cell[(0, 0)] == 1.0


# --------------------------------------------------------------------------- graph construction

def test_lattice_node_count():
    hm = flat_map(200)
    g = build_graph(hm, ConstModel(0.7), ConstModel(0.4))
    xmin, xmax, _, _ = hm.bounds()
    per_axis = math.floor((xmax - xmin - 2 * patch_radius()) / 0.18)
    assert len(g.nodes) == per_axis ** 2 * N_HEADINGS


def test_edge_structure():
    g = build_graph(flat_map(200), ConstModel(0.7), ConstModel(0.4), rotation_cost=0.05)
    for e in g.edges:
        (i, j, k), (i2, j2, k2) = e.src, e.dst
        if e.kind == ROTATE:
            assert (i, j) == (i2, j2) and (k2 - k) % N_HEADINGS in (1, N_HEADINGS - 1)
            assert e.length == 0.05 and e.prob == pytest.approx(0.4)
        else:
            assert k == k2 and e.prob == pytest.approx(0.7)
            dx, dy = i2 - i, j2 - j
            assert math.isclose(math.atan2(dy, dx) % (2 * math.pi), k * math.pi / 4, abs_tol=1e-12)
            assert e.length == pytest.approx(0.18 * math.hypot(dx, dy), rel=1e-12)


def test_all_ones_models_give_unit_edges():
    g = build_graph(flat_map(150), ConstModel(1.0), ConstModel(1.0))
    assert g.edges and all(e.prob == 1.0 for e in g.edges)


def test_flat_map_max_prob_is_straight_lattice_path():
    g = build_graph(flat_map(200), ConstModel(1.0), ConstModel(1.0))
    res = max_prob_path(g, (0, 0, 0), (6, 0, 0))
    assert res.traversal_prob == 1.0
    assert res.nodes == [(i, 0, 0) for i in range(7)]
    assert res.total_length == pytest.approx(6 * 0.18)
    res = shortest_path(g, (0, 0, 1), (5, 5, 1))
    assert res.total_length == pytest.approx(5 * 0.18 * math.sqrt(2))


def test_map_smaller_than_patch_rejected():
    with pytest.raises(ValueError):
        build_graph(flat_map(60), ConstModel(1.0), ConstModel(1.0))


def test_edge_probability_comes_from_patch_at_origin_facing_edge():
    class Probe:
        """Probability encodes the front-minus-back height along the patch's forward axis."""

        def predict_proba(self, patches):
            return np.clip(0.5 + (patches[:, :, -1] - patches[:, :, 0]).mean(axis=1), 0, 1)

    # plane rising along +x: a patch facing +x sees the front higher, one facing -x lower
    x = (np.arange(200) + 0.5) * 0.02
    hm = Heightmap(np.broadcast_to(0.1 * x[None, :], (200, 200)).copy(), 0.02)
    g = build_graph(hm, Probe(), ConstModel(1.0))
    fwd = {e.src: e.prob for e in g.edges if e.kind == TRANSLATE}
    assert fwd[(3, 3, 0)] > 0.5 > fwd[(3, 3, 4)]
    assert fwd[(3, 3, 2)] == pytest.approx(0.5, abs=1e-6)


def test_nearest_node_and_pose_round_trip():
    g = build_graph(flat_map(200), ConstModel(1.0), ConstModel(1.0))
    for node in g.nodes[::37]:
        assert nearest_node(g, *g.node_pose(node)) == node


def test_graph_json_round_trip():
    g = lattice_graph(2)
    g2 = PoseGraph.from_dict(__import__("json").loads(g.to_json()))
    assert g2.nodes == g.nodes and g2.edges == g.edges and g2.origin == g.origin


# --------------------------------------------------------------------------- turnability

def corridor_map(gap: float, size: int = 200, res: float = 0.02, height: float = 0.5) -> Heightmap:
    """Two tall walls parallel to x, leaving a free strip of width ``gap`` along the middle row."""
    y = (np.arange(size) + 0.5) * res
    mid = size * res / 2
    data = np.where(np.abs(y - mid) > gap / 2, height, 0.0)[:, None] * np.ones((1, size))
    return Heightmap(data, res)


def test_flat_terrain_is_turnable():
    hm = flat_map(200)
    rng = np.random.default_rng(0)
    for _ in range(20):
        x, y = rng.uniform(1.2, 2.8, size=2)
        assert can_turn(hm, Pose(x, y, rng.uniform(0, 2 * math.pi)), ROBOT)


def test_narrow_corridor_is_not_turnable():
    diag = math.hypot(ROBOT.length, ROBOT.width)
    gap = (ROBOT.width + diag) / 2
    hm = corridor_map(gap)
    pose = Pose(2.0, 2.0, 0.0)
    assert not can_turn(hm, pose, ROBOT)
    # the same pose is free once the walls move apart
    assert can_turn(corridor_map(diag + 0.2), pose, ROBOT)


def test_turn_dataset_labels():
    ds = generate_turn_dataset([flat_map(200)], ROBOT, n_samples=30, seed=4)
    assert len(ds.labels) == 30 and np.all(ds.labels == TRAVERSABLE)
    assert ds.meta["task"] == "turnability"
    ds2 = generate_turn_dataset([corridor_map(0.6, 300)], ROBOT, n_samples=60, seed=4)
    assert NON_TRAVERSABLE in set(ds2.labels.tolist())


def test_turn_dataset_deterministic():
    maps = [corridor_map(0.6, 300), flat_map(200)]
    a = generate_turn_dataset(maps, ROBOT, n_samples=40, seed=9)
    b = generate_turn_dataset(maps, ROBOT, n_samples=40, seed=9)
    assert np.array_equal(a.patches, b.patches) and np.array_equal(a.labels, b.labels)
    assert np.array_equal(a.poses, b.poses)


# --------------------------------------------------------------------------- rendering

def test_prob_color_endpoints():
    assert prob_color(0.0) == (255, 0, 0)
    assert prob_color(1.0) == (0, 255, 0)
    assert prob_color(2.0) == (0, 255, 0)


def test_render_outputs(tmp_path):
    from PIL import Image

    hm = flat_map(150)
    g = build_graph(hm, ConstModel(0.8), ConstModel(0.9))
    res = max_prob_path(g, (0, 0, 0), (2, 0, 0))
    render_paths(hm, g, [res, max_prob_path(g, (0, 0, 0), (0, 0, 0))], tmp_path / "p.png")
    render_reachability(hm, g, reachability(g, (0, 0, 0)).per_cell(), tmp_path / "r.png")
    for name in ("p.png", "r.png"):
        img = Image.open(tmp_path / name)
        assert img.size == (150, 150) and img.mode == "RGB"
    px = np.asarray(Image.open(tmp_path / "p.png"))
    want = prob_color(res.traversal_prob)
    assert np.any(np.all(px == want, axis=2))
