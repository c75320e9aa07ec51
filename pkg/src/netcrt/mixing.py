"""Between-cluster mixing: the mixing fraction γ, modularity, and
degree-preserving rewiring of a cluster pair up to a target γ."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import EmptyGraph, InvalidSpec, RewiringError
from .netgen import Network

CONTROL, TREATMENT = 0, 1

_REWIRE_MESSAGES = {
    1: "ran out of within-arm edges",
    2: "too many colliding swap proposals",
    3: "no degree-preserving swap is left",
}


def _arms(graph: Network, arm_of) -> np.ndarray:
    arm = np.asarray(arm_of)
    if arm.shape != (graph.node_count,):
        raise InvalidSpec("arm_of must label every node")
    if not np.isin(arm, (CONTROL, TREATMENT)).all():
        raise InvalidSpec("arm labels must be 0 (control) or 1 (treatment)")
    return arm


def mixing_fraction(graph: Network, arm_of) -> float:
    """Share of edges whose endpoints sit in different arms."""
    arm = _arms(graph, arm_of)
    if graph.edge_count == 0:
        raise EmptyGraph("mixing fraction is undefined without edges")
    e = graph.edges
    return float(np.count_nonzero(arm[e[:, 0]] != arm[e[:, 1]])) / graph.edge_count


def modularity(graph: Network, arm_of) -> float:
    """Newman modularity of the two-arm partition.

    Q = (1/2m) Σ_ij (A_ij − k_i k_j / 2m) δ(r_i, r_j) over ordered pairs,
    evaluated per group as within_r/m − (K_r/2m)².
    """
    arm = _arms(graph, arm_of)
    m = graph.edge_count
    if m == 0:
        raise EmptyGraph("modularity is undefined without edges")
    e = graph.edges
    deg = graph.degrees
    q = 0.0
    for r in (CONTROL, TREATMENT):
        within = np.count_nonzero((arm[e[:, 0]] == r) & (arm[e[:, 1]] == r))
        k_r = deg[arm == r].sum()
        q += within / m - (k_r / (2 * m)) ** 2
    return float(q)


@dataclass(frozen=True, eq=False)
class ClusterPair:
    """Two clusters of ``cluster_size`` nodes merged into one graph.

    Nodes ``0..n-1`` form the control cluster and ``n..2n-1`` the treatment
    cluster; ``arm_of`` records that labelling.
    """

    graph: Network
    arm_of: np.ndarray
    achieved_gamma: float

    def __post_init__(self):
        arm = _arms(self.graph, self.arm_of).astype(np.int8)
        if np.count_nonzero(arm == CONTROL) != np.count_nonzero(arm == TREATMENT):
            raise InvalidSpec("both arms need the same number of nodes")
        arm.setflags(write=False)
        object.__setattr__(self, "arm_of", arm)

    @property
    def cluster_size(self) -> int:
        return self.graph.node_count // 2

    @property
    def cross_edge_count(self) -> int:
        e = self.graph.edges
        return int(np.count_nonzero(self.arm_of[e[:, 0]] != self.arm_of[e[:, 1]]))


def pair_arms(n: int) -> np.ndarray:
    return np.repeat(np.array([CONTROL, TREATMENT], dtype=np.int8), n)


def make_pair(control: Network, treatment: Network) -> ClusterPair:
    """Disjoint union of two equally sized clusters (γ = 0)."""
    n = control.node_count
    if treatment.node_count != n:
        raise InvalidSpec("clusters in a pair must have the same size")
    graph = Network(2 * n, np.concatenate([control.edges, treatment.edges + n]))
    arm = pair_arms(n)
    gamma = mixing_fraction(graph, arm) if graph.edge_count else 0.0
    return ClusterPair(graph, arm, gamma)


def swaps_for_target(edge_count: int, cross_count: int, target_gamma: float) -> int:
    """Swaps needed to land on the reachable γ nearest ``target_gamma``.

    Each swap adds two cross edges, so reachable values are spaced 2/m apart.
    """
    if not 0.0 <= target_gamma <= 1.0:
        raise InvalidSpec(f"target gamma {target_gamma} outside [0, 1]")
    swaps = math.floor((target_gamma * edge_count - cross_count) / 2 + 0.5)
    if swaps < 0:
        raise InvalidSpec("rewiring can only increase mixing")
    return swaps


def rewire_edges(edges, arm, target_gamma, rng, kernels=None, max_failures=None):
    """Rewire a raw edge array; returns the new edge array."""
    if not 0.0 <= target_gamma <= 1.0:
        raise InvalidSpec(f"target gamma {target_gamma} outside [0, 1]")
    k = kernels or _backend.kernels
    edges = np.ascontiguousarray(edges, dtype=np.int64).reshape(-1, 2)
    arm = np.ascontiguousarray(arm, dtype=np.int8)
    if edges.shape[0] == 0:
        if target_gamma == 0:
            return edges
        raise EmptyGraph("cannot rewire a pair without edges")
    out, status, failures, swaps = k.rewire(
        edges, arm, float(target_gamma), -1 if max_failures is None else int(max_failures), rng)
    if status == 4:
        raise InvalidSpec("rewiring can only increase mixing")
    if status == 5:
        raise RewiringError(
            f"gamma={target_gamma} needs {swaps} swaps but an arm has fewer within-arm edges")
    if status != 0:
        raise RewiringError(
            f"rewiring to gamma={target_gamma} failed: {_REWIRE_MESSAGES[status]} "
            f"({failures} rejected proposals)")
    return out


def rewire_to_gamma(pair: ClusterPair, target_gamma: float, rng: np.random.Generator,
                    max_failures: int | None = None) -> ClusterPair:
    """Swap within-arm edge pairs into cross-arm edges until γ is as close to
    ``target_gamma`` as the edge count allows.

    One uniformly chosen within-arm edge is taken from each arm and the four
    endpoints are reconnected across the arms, using either pairing with equal
    probability. Proposals that would duplicate an edge are redrawn. If no
    pairing of the remaining within-arm edges is valid (this happens close to
    γ = 1 on hub-dominated graphs), a within-arm edge and a cross edge trade
    endpoints, which leaves γ unchanged, and the search resumes. Node degrees
    never change. Raises :class:`RewiringError` when the target cannot be
    reached within the failure budget.
    """
    edges = rewire_edges(pair.graph.edges, pair.arm_of, target_gamma, rng,
                         max_failures=max_failures)
    graph = Network(pair.graph.node_count, edges)
    return ClusterPair(graph, pair.arm_of, mixing_fraction(graph, pair.arm_of))
