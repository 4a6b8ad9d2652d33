from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from banachmc.common_values import MeshKind
from banachmc.modules.spaces.fn_base import graded_nodes_fn, uniform_nodes_fn


@dataclass(frozen=True)
class Partition:
    """A mesh of the unit interval, uniform or graded towards the origin."""

    nodes: npt.NDArray[np.float64] = field(repr=False)
    kind: MeshKind = MeshKind.UNIFORM

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=np.float64)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("A partition needs at least two nodes")
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise ValueError("Partition nodes must start at 0 and end at 1")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("Partition nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_cells(self) -> int:
        return self.nodes.size - 1

    @property
    def widths(self) -> npt.NDArray[np.float64]:
        return np.diff(self.nodes)

    @property
    def midpoints(self) -> npt.NDArray[np.float64]:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    @property
    def h(self) -> float:
        if self.kind != MeshKind.UNIFORM:
            raise ValueError("Mesh size h is only defined on uniform partitions")
        return 1.0 / self.n_cells

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.nodes, other.nodes)

    def __hash__(self) -> int:
        return hash((self.kind, self.nodes.tobytes()))

    def __repr__(self) -> str:
        return f"Partition(n_cells={self.n_cells}, kind={self.kind.value})"


def make_partition(n_cells: int, kind: MeshKind | str = MeshKind.UNIFORM) -> Partition:
    if isinstance(n_cells, bool) or int(n_cells) != n_cells or n_cells < 1:
        raise ValueError(f"n_cells must be a positive integer, got {n_cells}")
    kind = MeshKind(kind)
    n_cells = int(n_cells)
    if kind == MeshKind.UNIFORM:
        return Partition(uniform_nodes_fn(n_cells), kind)
    return Partition(graded_nodes_fn(n_cells), kind)


def dyadic_level_map(kind: MeshKind | str = MeshKind.UNIFORM, offset: int = 0):
    """Level map l -> partition with 2^(l + offset) cells."""
    cache: dict[int, Partition] = {}

    def level_map(level: int) -> Partition:
        if level < 0:
            raise KeyError(f"level {level} is not in the level map")
        if level not in cache:
            cache[level] = make_partition(2 ** (level + offset), kind)
        return cache[level]

    return level_map
