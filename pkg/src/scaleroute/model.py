"""Immutable model of a mixed-autonomy routing game instance.

A network is a directed graph whose links carry affine two-class latency
functions e_l(fa, fh) = a*fa + h*fh + b, with a strictly positive slope per
vehicle class and a nonnegative free-flow term. Demand is given per
origin/destination pair together with an autonomy fraction, and routing is
path-based: every simple path of every O/D pair is enumerated once, ordered
deterministically, and indexed globally. All types are frozen after
validation and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    AsymmetryOutOfRange,
    BadAlpha,
    DimensionMismatch,
    EmptyDemand,
    EmptyNetwork,
    InstanceFormatError,
    NegativeFlow,
    NegativeFreeFlow,
    NonPositiveDemand,
    NonPositiveSlope,
    NoPath,
    PathExplosion,
    UnknownPath,
    ValidationError,
)

DEFAULT_PATH_CAP = 10_000

#: absolute tolerance for flow-conservation checks
FEASIBILITY_TOL = 1e-9
#: absolute tolerance for path-to-link aggregation identities
AGGREGATION_TOL = 1e-12


@dataclass(frozen=True)
class Link:
    """Directed link with affine two-class latency a*fa + h*fh + b.

    Attributes:
        id: opaque string identifier, unique within an instance.
        tail: origin node of the link.
        head: target node of the link.
        a: latency slope per unit autonomous flow (> 0).
        h: latency slope per unit human flow (> 0).
        b: free-flow latency (>= 0).
    """

    id: str
    tail: str
    head: str
    a: float
    h: float
    b: float = 0.0

    def __post_init__(self):
        if self.tail == self.head:
            raise ValidationError(f"link {self.id!r}: self-loop at node {self.tail!r}")
        if not self.a > 0:
            raise NonPositiveSlope(f"link {self.id!r}: a = {self.a} must be > 0")
        if not self.h > 0:
            raise NonPositiveSlope(f"link {self.id!r}: h = {self.h} must be > 0")
        if self.b < 0:
            raise NegativeFreeFlow(f"link {self.id!r}: b = {self.b} must be >= 0")
        if self.a / self.h > 1.0:
            raise AsymmetryOutOfRange(
                f"link {self.id!r}: a/h = {self.a / self.h} must lie in (0, 1]"
            )

    @property
    def asymmetry(self) -> float:
        """Degree of asymmetry a/h, in (0, 1]."""
        return self.a / self.h

    def latency(self, fa: float, fh: float) -> float:
        return self.a * fa + self.h * fh + self.b


@dataclass(frozen=True)
class ODPair:
    """Origin/destination pair with total demand and autonomy fraction.

    ``demand`` is the total flow (both classes) to route; ``alpha`` is the
    fraction of that demand that is autonomous.
    """

    origin: str
    destination: str
    demand: float
    alpha: float

    def __post_init__(self):
        if self.origin == self.destination:
            raise ValidationError(
                f"O/D pair ({self.origin!r}, {self.destination!r}): origin equals destination"
            )
        if not self.demand > 0:
            raise NonPositiveDemand(
                f"O/D pair ({self.origin!r}, {self.destination!r}): demand = {self.demand}"
            )
        if not 0.0 <= self.alpha <= 1.0:
            raise BadAlpha(
                f"O/D pair ({self.origin!r}, {self.destination!r}): alpha = {self.alpha}"
            )


@dataclass(frozen=True)
class Path:
    """Simple directed path, stored as node sequence plus link-id sequence.

    The link sequence disambiguates parallel links sharing a node sequence.
    """

    nodes: tuple[str, ...]
    links: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.links)


@dataclass(frozen=True, eq=False)
class PathSet:
    """All simple paths of an instance, per O/D pair and globally indexed.

    Paths of each O/D pair are sorted lexicographically by node sequence
    (link ids break ties between parallel links), and the global order
    concatenates the per-pair blocks in O/D declaration order. Two
    enumerations of the same instance always produce identical orderings.
    """

    by_od: tuple[tuple[Path, ...], ...]
    all_paths: tuple[Path, ...]
    od_of_path: tuple[int, ...]
    od_slices: tuple[tuple[int, int], ...]
    index_of: Mapping[Path, int] = field(repr=False)

    def __len__(self) -> int:
        return len(self.all_paths)

    def paths_for(self, od_index: int) -> tuple[Path, ...]:
        return self.by_od[od_index]

    def global_index(self, path: Path) -> int:
        try:
            return self.index_of[path]
        except KeyError:
            raise UnknownPath(f"path {path.nodes} / links {path.links} not in path set") from None


@dataclass(frozen=True, eq=False)
class GameInstance:
    """Validated mixed-autonomy routing game instance.

    Carries the network, the demand structure, the enumerated PathSet, and
    derived numpy views (slope/intercept vectors, link-path incidence) used
    by the solvers. Immutable; construct via ``validate_instance`` or
    ``build_instance``.
    """

    nodes: tuple[str, ...]
    links: tuple[Link, ...]
    od_pairs: tuple[ODPair, ...]
    paths: PathSet
    path_cap: int
    # derived, read-only numpy views
    a: np.ndarray = field(repr=False)
    h: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    incidence: np.ndarray = field(repr=False)
    link_index: Mapping[str, int] = field(repr=False)

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @property
    def demands(self) -> np.ndarray:
        return np.array([od.demand for od in self.od_pairs])

    @property
    def alphas(self) -> np.ndarray:
        return np.array([od.alpha for od in self.od_pairs])

    @property
    def auto_demands(self) -> np.ndarray:
        return self.alphas * self.demands

    @property
    def human_demands(self) -> np.ndarray:
        return (1.0 - self.alphas) * self.demands

    def link_flows(self, path_flows: np.ndarray) -> np.ndarray:
        """Aggregate path flows onto links via the incidence matrix."""
        path_flows = np.asarray(path_flows, dtype=float)
        if path_flows.shape != (self.n_paths,):
            raise DimensionMismatch(
                f"expected {self.n_paths} path flows, got shape {path_flows.shape}"
            )
        return self.incidence @ path_flows

    def link_latencies(self, fa: np.ndarray, fh: np.ndarray) -> np.ndarray:
        """Vector of link latencies e_l = a*fa + h*fh + b."""
        return self.a * fa + self.h * fh + self.b


@dataclass(frozen=True, eq=False)
class ClassFlow:
    """Per-class path flows with their link aggregations.

    Path flows are indexed by the instance's global path order; link flows
    are derived through the incidence matrix and kept consistent by
    construction.
    """

    path_flows_a: np.ndarray
    path_flows_h: np.ndarray
    link_flows_a: np.ndarray
    link_flows_h: np.ndarray

    @classmethod
    def from_path_flows(
        cls, instance: GameInstance, fa: np.ndarray, fh: np.ndarray
    ) -> "ClassFlow":
        fa = np.asarray(fa, dtype=float)
        fh = np.asarray(fh, dtype=float)
        if fa.shape != (instance.n_paths,) or fh.shape != (instance.n_paths,):
            raise DimensionMismatch(
                f"path flow vectors must have shape ({instance.n_paths},)"
            )
        for name, vec in (("autonomous", fa), ("human", fh)):
            if vec.min(initial=0.0) < -AGGREGATION_TOL:
                raise NegativeFlow(f"negative {name} path flow: {vec.min()}")
        fa = np.maximum(fa, 0.0)
        fh = np.maximum(fh, 0.0)
        flow = cls(
            path_flows_a=fa,
            path_flows_h=fh,
            link_flows_a=instance.incidence @ fa,
            link_flows_h=instance.incidence @ fh,
        )
        for arr in (flow.path_flows_a, flow.path_flows_h, flow.link_flows_a, flow.link_flows_h):
            arr.setflags(write=False)
        return flow

    @property
    def total_link_flows(self) -> np.ndarray:
        return self.link_flows_a + self.link_flows_h


@dataclass(frozen=True)
class FeasibilityReport:
    """Per-O/D residuals of the flow-conservation constraints."""

    feasible: bool
    residuals_a: np.ndarray
    residuals_h: np.ndarray
    tolerance: float = FEASIBILITY_TOL

    def __bool__(self) -> bool:
        return self.feasible


@dataclass(frozen=True)
class StackelbergFeasibility:
    """Result of checking a leader flow against the network autonomy fraction.

    ``feasible`` is the global check (total leader flow equals alpha times the
    total demand); ``weak`` additionally requires the per-pair totals to equal
    alpha times each pair's demand.
    """

    feasible: bool
    weak: bool
    total_residual: float
    per_pair_residuals: np.ndarray

    def __bool__(self) -> bool:
        return self.feasible


# --- path enumeration ---------------------------------------------------------


def _adjacency(links: Sequence[Link]) -> dict[str, list[Link]]:
    adj: dict[str, list[Link]] = {}
    for link in links:
        adj.setdefault(link.tail, []).append(link)
    for out in adj.values():
        out.sort(key=lambda l: (l.head, l.id))
    return adj


def _simple_paths(
    adj: Mapping[str, list[Link]], origin: str, destination: str, counter: list[int], cap: int
) -> list[Path]:
    """Depth-first enumeration of simple (no repeated node) link paths."""
    found: list[Path] = []
    node_seq: list[str] = [origin]
    link_seq: list[str] = []
    visited = {origin}

    def visit(node: str) -> None:
        for link in adj.get(node, ()):  # sorted adjacency keeps runs reproducible
            if link.head in visited:
                continue
            node_seq.append(link.head)
            link_seq.append(link.id)
            if link.head == destination:
                counter[0] += 1
                if counter[0] > cap:
                    raise PathExplosion(
                        f"more than {cap} simple paths; raise path_cap to enumerate"
                    )
                found.append(Path(nodes=tuple(node_seq), links=tuple(link_seq)))
            else:
                visited.add(link.head)
                visit(link.head)
                visited.remove(link.head)
            node_seq.pop()
            link_seq.pop()

    visit(origin)
    return found


def enumerate_paths(instance_or_links, od_pairs=None, path_cap: int | None = None) -> PathSet:
    """Enumerate every simple path of every O/D pair, deterministically ordered.

    Accepts either a GameInstance or an explicit (links, od_pairs) pair.
    Raises PathExplosion once the total path count exceeds the cap, and
    NoPath if some O/D pair is unreachable.
    """
    if isinstance(instance_or_links, GameInstance):
        links = instance_or_links.links
        od_pairs = instance_or_links.od_pairs
        cap = instance_or_links.path_cap if path_cap is None else path_cap
    else:
        links = tuple(instance_or_links)
        od_pairs = tuple(od_pairs or ())
        cap = DEFAULT_PATH_CAP if path_cap is None else path_cap

    adj = _adjacency(links)
    counter = [0]
    by_od: list[tuple[Path, ...]] = []
    for od in od_pairs:
        paths = _simple_paths(adj, od.origin, od.destination, counter, cap)
        if not paths:
            raise NoPath(f"no path from {od.origin!r} to {od.destination!r}")
        paths.sort(key=lambda p: (p.nodes, p.links))
        by_od.append(tuple(paths))

    all_paths: list[Path] = []
    od_of_path: list[int] = []
    od_slices: list[tuple[int, int]] = []
    for w, paths in enumerate(by_od):
        start = len(all_paths)
        all_paths.extend(paths)
        od_of_path.extend([w] * len(paths))
        od_slices.append((start, len(all_paths)))
    return PathSet(
        by_od=tuple(by_od),
        all_paths=tuple(all_paths),
        od_of_path=tuple(od_of_path),
        od_slices=tuple(od_slices),
        index_of={p: i for i, p in enumerate(all_paths)},
    )


# --- instance construction ------------------------------------------------------


def build_instance(
    nodes: Iterable[str],
    links: Sequence[Link],
    od_pairs: Sequence[ODPair],
    path_cap: int = DEFAULT_PATH_CAP,
) -> GameInstance:
    """Assemble and validate a GameInstance from already-typed parts."""
    nodes = tuple(nodes)
    links = tuple(links)
    od_pairs = tuple(od_pairs)
    node_set = set(nodes)
    if len(node_set) != len(nodes):
        raise InstanceFormatError("duplicate node identifiers")
    seen_links: set[str] = set()
    for link in links:
        if link.id in seen_links:
            raise InstanceFormatError(f"duplicate link id {link.id!r}")
        seen_links.add(link.id)
        for endpoint in (link.tail, link.head):
            if endpoint not in node_set:
                raise InstanceFormatError(
                    f"link {link.id!r}: endpoint {endpoint!r} is not a declared node"
                )
    for od in od_pairs:
        for endpoint in (od.origin, od.destination):
            if endpoint not in node_set:
                raise InstanceFormatError(
                    f"O/D pair ({od.origin!r}, {od.destination!r}): "
                    f"{endpoint!r} is not a declared node"
                )
    if not isinstance(path_cap, int) or path_cap < 1:
        raise InstanceFormatError(f"path_cap must be a positive integer, got {path_cap!r}")

    paths = enumerate_paths(links, od_pairs, path_cap)
    n_links = len(links)
    link_index = {link.id: i for i, link in enumerate(links)}
    incidence = np.zeros((n_links, len(paths)), dtype=float)
    for j, path in enumerate(paths.all_paths):
        for lid in path.links:
            incidence[link_index[lid], j] = 1.0
    a = np.array([l.a for l in links])
    h = np.array([l.h for l in links])
    b = np.array([l.b for l in links])
    for arr in (a, h, b, incidence):
        arr.setflags(write=False)
    return GameInstance(
        nodes=nodes,
        links=links,
        od_pairs=od_pairs,
        paths=paths,
        path_cap=path_cap,
        a=a,
        h=h,
        b=b,
        incidence=incidence,
        link_index=link_index,
    )


_LINK_FIELDS = {"id", "tail", "head", "a", "h", "b"}
_OD_FIELDS = {"origin", "destination", "demand", "alpha"}
_TOP_FIELDS = {"nodes", "links", "od_pairs", "path_cap"}


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceFormatError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _as_identifier(value, where: str) -> str:
    if not isinstance(value, str) or not value:
        raise InstanceFormatError(f"{where}: expected a non-empty string, got {value!r}")
    return value


def _check_fields(record: Mapping, required: set[str], where: str) -> None:
    if not isinstance(record, Mapping):
        raise InstanceFormatError(f"{where}: expected an object, got {type(record).__name__}")
    unknown = set(record) - required
    if unknown:
        raise InstanceFormatError(f"{where}: unknown fields {sorted(unknown)}")
    missing = required - set(record)
    if missing:
        raise InstanceFormatError(f"{where}: missing fields {sorted(missing)}")


def validate_instance(raw: Mapping) -> GameInstance:
    """Validate a raw instance description (parsed JSON) into a GameInstance.

    The description must carry exactly the documented fields: ``nodes`` (list
    of strings), ``links`` (records with id/tail/head/a/h/b), ``od_pairs``
    (records with origin/destination/demand/alpha) and optionally
    ``path_cap``. Unknown fields are rejected.
    """
    if not isinstance(raw, Mapping):
        raise InstanceFormatError(f"instance must be an object, got {type(raw).__name__}")
    unknown = set(raw) - _TOP_FIELDS
    if unknown:
        raise InstanceFormatError(f"unknown top-level fields {sorted(unknown)}")
    for required in ("nodes", "links", "od_pairs"):
        if required not in raw:
            raise InstanceFormatError(f"missing top-level field {required!r}")

    raw_nodes = raw["nodes"]
    if not isinstance(raw_nodes, Sequence) or isinstance(raw_nodes, (str, bytes)):
        raise InstanceFormatError("'nodes' must be a list of strings")
    nodes = tuple(_as_identifier(n, "nodes") for n in raw_nodes)
    if not nodes:
        raise InstanceFormatError("'nodes' must be non-empty")

    links = []
    for k, rec in enumerate(raw["links"]):
        where = f"links[{k}]"
        _check_fields(rec, _LINK_FIELDS, where)
        links.append(
            Link(
                id=_as_identifier(rec["id"], f"{where}.id"),
                tail=_as_identifier(rec["tail"], f"{where}.tail"),
                head=_as_identifier(rec["head"], f"{where}.head"),
                a=_as_number(rec["a"], f"{where}.a"),
                h=_as_number(rec["h"], f"{where}.h"),
                b=_as_number(rec["b"], f"{where}.b"),
            )
        )

    od_pairs = []
    for k, rec in enumerate(raw["od_pairs"]):
        where = f"od_pairs[{k}]"
        _check_fields(rec, _OD_FIELDS, where)
        od_pairs.append(
            ODPair(
                origin=_as_identifier(rec["origin"], f"{where}.origin"),
                destination=_as_identifier(rec["destination"], f"{where}.destination"),
                demand=_as_number(rec["demand"], f"{where}.demand"),
                alpha=_as_number(rec["alpha"], f"{where}.alpha"),
            )
        )

    path_cap = raw.get("path_cap", DEFAULT_PATH_CAP)
    if isinstance(path_cap, bool) or not isinstance(path_cap, int):
        raise InstanceFormatError(f"path_cap must be an integer, got {path_cap!r}")
    return build_instance(nodes, links, od_pairs, path_cap)


def load_instance(path) -> GameInstance:
    """Read and validate an instance file (JSON)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"{path}: invalid JSON ({exc})") from exc
    return validate_instance(raw)


# --- elementary quantities -------------------------------------------------------


def link_latency(link: Link, fa: float, fh: float) -> float:
    """Latency of a single link at the given class flows."""
    if fa < 0 or fh < 0:
        raise NegativeFlow(f"link {link.id!r}: flows ({fa}, {fh}) must be nonnegative")
    return link.latency(fa, fh)


def path_latency(
    instance: GameInstance, path: Path, link_flows: tuple[np.ndarray, np.ndarray]
) -> float:
    """Sum of link latencies along ``path`` at the given per-link class flows."""
    instance.paths.global_index(path)  # membership check
    fa, fh = (np.asarray(v, dtype=float) for v in link_flows)
    if fa.shape != (instance.n_links,) or fh.shape != (instance.n_links,):
        raise DimensionMismatch(f"link flow vectors must have shape ({instance.n_links},)")
    lat = instance.link_latencies(fa, fh)
    return float(sum(lat[instance.link_index[lid]] for lid in path.links))


def social_cost(instance: GameInstance, flow: ClassFlow) -> float:
    """Total travel time sum_l (fa_l + fh_l) * e_l(fa_l, fh_l)."""
    fa, fh = flow.link_flows_a, flow.link_flows_h
    return float(np.dot(fa + fh, instance.link_latencies(fa, fh)))


def social_cost_links(instance: GameInstance, fa: np.ndarray, fh: np.ndarray) -> float:
    """Social cost evaluated directly on per-link class flows."""
    fa = np.asarray(fa, dtype=float)
    fh = np.asarray(fh, dtype=float)
    return float(np.dot(fa + fh, instance.link_latencies(fa, fh)))


def check_feasibility(instance: GameInstance, flow: ClassFlow) -> FeasibilityReport:
    """Check flow conservation per O/D pair and report residuals."""
    res_a = np.empty(len(instance.od_pairs))
    res_h = np.empty(len(instance.od_pairs))
    for w, (start, end) in enumerate(instance.paths.od_slices):
        od = instance.od_pairs[w]
        res_a[w] = flow.path_flows_a[start:end].sum() - od.alpha * od.demand
        res_h[w] = flow.path_flows_h[start:end].sum() - (1.0 - od.alpha) * od.demand
    feasible = bool(
        np.all(np.abs(res_a) <= FEASIBILITY_TOL) and np.all(np.abs(res_h) <= FEASIBILITY_TOL)
    )
    return FeasibilityReport(feasible=feasible, residuals_a=res_a, residuals_h=res_h)


def min_asymmetry(instance: GameInstance) -> float:
    """Minimum degree of asymmetry min_l a_l/h_l over the network."""
    if not instance.links:
        raise EmptyNetwork("instance has no links")
    return float(np.min(instance.a / instance.h))


def network_autonomy_fraction(instance: GameInstance) -> float:
    """Demand-weighted autonomy fraction sum_w alpha_w r_w / sum_w r_w."""
    if not instance.od_pairs:
        raise EmptyDemand("instance has no O/D pairs")
    demands = instance.demands
    return float(np.dot(instance.alphas, demands) / demands.sum())


def is_stackelberg_feasible(
    instance: GameInstance, s: np.ndarray, tol: float = FEASIBILITY_TOL
) -> StackelbergFeasibility:
    """Check a leader path-flow vector against the network autonomy fraction.

    The global check compares the total leader flow with alpha times the
    total demand; the weak-strategy flag additionally requires every O/D
    pair's leader flow to meet an alpha fraction of that pair's demand.
    """
    s = np.asarray(s, dtype=float)
    if s.shape != (instance.n_paths,):
        raise DimensionMismatch(f"leader path flows must have shape ({instance.n_paths},)")
    if s.min(initial=0.0) < -AGGREGATION_TOL:
        raise NegativeFlow(f"negative leader path flow: {s.min()}")
    alpha = network_autonomy_fraction(instance)
    demands = instance.demands
    per_pair = np.empty(len(instance.od_pairs))
    for w, (start, end) in enumerate(instance.paths.od_slices):
        per_pair[w] = s[start:end].sum() - alpha * demands[w]
    total_residual = float(s.sum() - alpha * demands.sum())
    return StackelbergFeasibility(
        feasible=bool(abs(total_residual) <= tol),
        weak=bool(np.all(np.abs(per_pair) <= tol)),
        total_residual=total_residual,
        per_pair_residuals=per_pair,
    )


def is_opt_restricted(
    instance: GameInstance, s_links: np.ndarray, fstar: ClassFlow, tol: float = FEASIBILITY_TOL
) -> bool:
    """True iff the leader link flow never exceeds the optimal total link flow."""
    s_links = np.asarray(s_links, dtype=float)
    if s_links.shape != (instance.n_links,):
        raise DimensionMismatch(f"leader link flows must have shape ({instance.n_links},)")
    return bool(np.all(s_links <= fstar.total_link_flows + tol))
