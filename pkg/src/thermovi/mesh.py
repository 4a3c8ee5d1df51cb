"""Simplicial P1 meshes: storage, generators, geometry and nodal lumping weights.

A :class:`Mesh` holds node coordinates, simplices ((d+1)-tuples of node
indices) and boundary facets (d-tuples) tagged with label sets.  Elements are
stored with positive signed volume; construction repairs the orientation of
any element given the other way round.

Text format (whitespace separated, no comments)::

    dim N_nodes N_elems N_facets
    <N_nodes lines: d coordinates>
    <N_elems lines: d+1 zero-based node indices>
    <N_facets lines: d node indices followed by a label string>

The label string is a comma-separated subset of :data:`LABELS`, or ``none``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .errors import DegenerateElement, InvalidArgument

MECH_DIRICHLET = "mech-dirichlet"
THERMAL_DIRICHLET = "thermal-dirichlet"
TRACTION = "traction"
ENTROPY_FLUX = "entropy-flux"
LABELS = (MECH_DIRICHLET, THERMAL_DIRICHLET, TRACTION, ENTROPY_FLUX)

# Kuhn split of the unit cube: one tet per axis permutation, all sharing the
# (0,0,0)-(1,1,1) diagonal.  Local cube vertex v has offset bits (v&1, v>>1&1, v>>2&1).
_KUHN_TETS = tuple(
    (0, 1 << p[0], (1 << p[0]) | (1 << p[1]), 7) for p in itertools.permutations(range(3))
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def _signed_volumes(coords: np.ndarray, elements: np.ndarray) -> np.ndarray:
    d = coords.shape[1]
    x = coords[elements]  # (E, d+1, d)
    edges = np.swapaxes(x[:, 1:, :] - x[:, :1, :], 1, 2)  # columns are x_i - x_0
    return np.linalg.det(edges) / math.factorial(d)


@dataclass(frozen=True)
class ElementGeometry:
    """Volume and constant shape-function gradients of one simplex."""

    volume: float
    gradients: np.ndarray  # (d+1, d)


@dataclass(frozen=True)
class LumpedWeights:
    """Gauss-Lobatto (nodal) quadrature weights.

    ``pair`` is aligned with ``Mesh.elements``: ``pair[K, i]`` is the weight of
    node ``elements[K, i]`` inside element ``K``, i.e. Vol(K)/(d+1).
    """

    pair: np.ndarray  # (E, d+1)
    node: np.ndarray  # (N,)


class Mesh:
    """Immutable simplicial mesh in 1, 2 or 3 dimensions."""

    def __init__(
        self,
        coords,
        elements,
        facets=None,
        facet_labels: Iterable[Iterable[str]] | None = None,
    ):
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[1] not in (1, 2, 3):
            raise InvalidArgument(f"coordinates must be (N, d) with d in 1..3, got {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise InvalidArgument("non-finite node coordinates")
        d = coords.shape[1]
        n = coords.shape[0]

        elements = np.array(elements, dtype=np.int64).reshape(-1, d + 1)
        if elements.size == 0:
            raise InvalidArgument("mesh has no elements")
        if elements.min() < 0 or elements.max() >= n:
            raise InvalidArgument("element references a node index out of range")
        srt = np.sort(elements, axis=1)
        if np.any(srt[:, 1:] == srt[:, :-1]):
            raise InvalidArgument("element node tuple contains a duplicate index")
        if len(np.unique(elements)) != n:
            raise InvalidArgument("node indices must be dense: every node must belong to an element")

        vol = _signed_volumes(coords, elements)
        scale = np.ptp(coords, axis=0).max() ** d if n > 1 else 1.0
        bad = np.abs(vol) <= 1e-14 * scale
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            raise DegenerateElement(k, vol[k])
        flip = vol < 0
        if np.any(flip):
            elements[flip, 0], elements[flip, 1] = elements[flip, 1].copy(), elements[flip, 0].copy()

        self.dim = d
        self.coords = _frozen(coords)
        self.elements = _frozen(elements)

        faces, owners = self._boundary_faces()
        if facets is None:
            facets = faces
        facets = np.array(facets, dtype=np.int64).reshape(-1, d)
        known = {tuple(f): o for f, o in zip(map(tuple, np.sort(faces, axis=1)), owners)}
        owner = np.empty(len(facets), dtype=np.int64)
        for i, f in enumerate(np.sort(facets, axis=1)):
            try:
                owner[i] = known[tuple(f)]
            except KeyError:
                raise InvalidArgument(
                    f"facet {i} {tuple(facets[i])} is not a face of exactly one element"
                ) from None
        if facet_labels is None:
            facet_labels = [frozenset()] * len(facets)
        labels = []
        for i, lab in enumerate(facet_labels):
            lab = frozenset(lab)
            unknown = lab - set(LABELS)
            if unknown:
                raise InvalidArgument(f"facet {i}: unknown label(s) {sorted(unknown)}")
            labels.append(lab)
        if len(labels) != len(facets):
            raise InvalidArgument("facet_labels length does not match facets")

        self.facets = _frozen(facets)
        self.facet_labels = tuple(labels)
        self.facet_owner = _frozen(owner)

    # -- topology -----------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    def _boundary_faces(self):
        d = self.dim
        e = self.elements
        local = [tuple(j for j in range(d + 1) if j != i) for i in range(d + 1)]
        faces = np.concatenate([e[:, loc] for loc in local])  # face-major order
        owner = np.tile(np.arange(len(e)), d + 1)
        key = np.sort(faces, axis=1)
        _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        once = counts[inv.ravel()] == 1
        # deterministic: by owning element, then by local face index
        order = np.lexsort((np.repeat(np.arange(d + 1), len(e))[once], owner[once]))
        return faces[once][order], owner[once][order]

    @cached_property
    def _ring_csr(self):
        flat = self.elements.ravel()
        order = np.argsort(flat, kind="stable")
        ptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(flat, minlength=self.n_nodes), out=ptr[1:])
        return ptr, order // (self.dim + 1)

    def ring(self, node: int) -> list[int]:
        """Elements containing ``node``, in ascending element order."""
        if not 0 <= int(node) < self.n_nodes:
            raise InvalidArgument(f"node index {node} out of range [0, {self.n_nodes})")
        ptr, elems = self._ring_csr
        return [int(k) for k in elems[ptr[node] : ptr[node + 1]]]

    def facets_with_label(self, label: str) -> np.ndarray:
        if label not in LABELS:
            raise InvalidArgument(f"unknown label {label!r}")
        return np.array([i for i, lab in enumerate(self.facet_labels) if label in lab], dtype=np.int64)

    def nodes_with_label(self, label: str) -> np.ndarray:
        idx = self.facets_with_label(label)
        if len(idx) == 0:
            return np.zeros(0, dtype=np.int64)
        return np.unique(self.facets[idx])

    def with_labels(self, label: str, where: Callable[[np.ndarray], np.ndarray] | None = None) -> "Mesh":
        """Copy of the mesh with ``label`` added to facets whose nodes all satisfy ``where``.

        ``where`` maps an (n, d) coordinate array to a boolean mask; ``None`` selects
        the whole boundary.
        """
        if label not in LABELS:
            raise InvalidArgument(f"unknown label {label!r}")
        if where is None:
            hit = np.ones(len(self.facets), dtype=bool)
        else:
            node_ok = np.asarray(where(self.coords), dtype=bool)
            hit = node_ok[self.facets].all(axis=1)
        labels = [lab | {label} if h else lab for lab, h in zip(self.facet_labels, hit)]
        return Mesh(self.coords, self.elements, self.facets, labels)

    # -- geometry -----------------------------------------------------------

    @cached_property
    def volumes(self) -> np.ndarray:
        return _frozen(_signed_volumes(self.coords, self.elements))

    @cached_property
    def shape_gradients(self) -> np.ndarray:
        """(E, d+1, d) constant gradients of the hat functions on each element."""
        x = self.coords[self.elements]
        edges = np.swapaxes(x[:, 1:, :] - x[:, :1, :], 1, 2)
        inv = np.linalg.inv(edges)  # row i = gradient of barycentric coordinate i+1
        grads = np.empty_like(x)
        grads[:, 1:, :] = inv
        grads[:, 0, :] = -inv.sum(axis=1)
        return _frozen(grads)

    @cached_property
    def facet_areas(self) -> np.ndarray:
        x = self.coords[self.facets]
        if self.dim == 1:
            a = np.ones(len(self.facets))
        elif self.dim == 2:
            a = np.linalg.norm(x[:, 1] - x[:, 0], axis=1)
        else:
            a = 0.5 * np.linalg.norm(np.cross(x[:, 1] - x[:, 0], x[:, 2] - x[:, 0]), axis=1)
        return _frozen(a)

    @cached_property
    def inscribed_diameters(self) -> np.ndarray:
        """2 d Vol / (total face area), the inscribed-sphere diameter (1D: length)."""
        d = self.dim
        x = self.coords[self.elements]
        if d == 1:
            return _frozen(self.volumes.copy())
        area = np.zeros(self.n_elements)
        for i in range(d + 1):
            f = np.delete(x, i, axis=1)
            if d == 2:
                area += np.linalg.norm(f[:, 1] - f[:, 0], axis=1)
            else:
                area += 0.5 * np.linalg.norm(np.cross(f[:, 1] - f[:, 0], f[:, 2] - f[:, 0]), axis=1)
        return _frozen(2.0 * d * self.volumes / area)

    @property
    def total_volume(self) -> float:
        return float(self.volumes.sum())

    def __repr__(self):
        return (
            f"Mesh(dim={self.dim}, nodes={self.n_nodes}, elements={self.n_elements}, "
            f"facets={len(self.facets)})"
        )


def element_geometry(mesh: Mesh, element: int) -> ElementGeometry:
    if not 0 <= int(element) < mesh.n_elements:
        raise InvalidArgument(f"element index {element} out of range")
    return ElementGeometry(float(mesh.volumes[element]), mesh.shape_gradients[element].copy())


def ring(mesh: Mesh, node: int) -> list[int]:
    return mesh.ring(node)


def lumped_weights(mesh: Mesh) -> LumpedWeights:
    d = mesh.dim
    pair = np.repeat(mesh.volumes[:, None] / (d + 1), d + 1, axis=1)
    node = np.bincount(mesh.elements.ravel(), weights=pair.ravel(), minlength=mesh.n_nodes)
    return LumpedWeights(_frozen(pair), _frozen(node))


# -- generators ---------------------------------------------------------------


def generate_segment_mesh(length: float, n_elements: int, origin: float = 0.0) -> Mesh:
    """Uniform mesh of (origin, origin + length) with unlabeled end facets."""
    if not length > 0:
        raise InvalidArgument(f"length must be positive, got {length}")
    if int(n_elements) != n_elements or n_elements < 1:
        raise InvalidArgument(f"n_elements must be a positive integer, got {n_elements}")
    n = int(n_elements)
    x = origin + length * np.arange(n + 1) / n
    elems = np.column_stack([np.arange(n), np.arange(1, n + 1)])
    return Mesh(x[:, None], elems)


def generate_rectangle_tri_mesh(lengths, divisions, origin=(0.0, 0.0)) -> Mesh:
    """Structured rectangle; each cell split along its (0,0)-(1,1) diagonal."""
    lx, ly = (float(v) for v in lengths)
    nx, ny = _check_divisions(divisions, 2)
    if not (lx > 0 and ly > 0):
        raise InvalidArgument("lengths must be positive")
    xs = origin[0] + lx * np.arange(nx + 1) / nx
    ys = origin[1] + ly * np.arange(ny + 1) / ny
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    coords = np.column_stack([X.ravel(), Y.ravel()])
    tris = []
    for j in range(ny):
        for i in range(nx):
            a = i + (nx + 1) * j
            b, c, dd = a + 1, a + nx + 2, a + nx + 1
            tris += [(a, b, c), (a, c, dd)]
    return Mesh(coords, tris)


def generate_box_tet_mesh(lengths, divisions, origin=(0.0, 0.0, 0.0)) -> Mesh:
    """Structured box of hexahedral cells, each split into 6 Kuhn tetrahedra.

    Node (i, j, k) has index ``i + (nx+1) * (j + (ny+1) * k)``.  Cells are visited
    with i fastest, and the 6 tets of a cell follow the axis permutations in
    lexicographic order, so the output is reproducible bit for bit.
    """
    lengths = np.asarray(lengths, dtype=float).reshape(3)
    if not np.all(lengths > 0):
        raise InvalidArgument("lengths must be positive")
    nx, ny, nz = _check_divisions(divisions, 3)
    axes = [origin[a] + lengths[a] * np.arange(n + 1) / n for a, n in enumerate((nx, ny, nz))]
    Z, Y, X = np.meshgrid(axes[2], axes[1], axes[0], indexing="ij")
    coords = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    def node(i, j, k):
        return i + (nx + 1) * (j + (ny + 1) * k)

    tets = []
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                corner = [node(i + (v & 1), j + (v >> 1 & 1), k + (v >> 2 & 1)) for v in range(8)]
                tets += [tuple(corner[v] for v in t) for t in _KUHN_TETS]
    return Mesh(coords, tets)


def _check_divisions(divisions, d):
    div = tuple(divisions)
    if len(div) != d:
        raise InvalidArgument(f"expected {d} division counts, got {len(div)}")
    for v in div:
        if int(v) != v or v < 1:
            raise InvalidArgument(f"division counts must be positive integers, got {div}")
    return tuple(int(v) for v in div)


# -- text IO ------------------------------------------------------------------


def read_mesh(path) -> Mesh:
    tokens = Path(path).read_text().split()
    try:
        d, nn, ne, nf = (int(t) for t in tokens[:4])
        pos = 4
        coords = np.array(tokens[pos : pos + nn * d], dtype=float).reshape(nn, d)
        pos += nn * d
        elems = np.array(tokens[pos : pos + ne * (d + 1)], dtype=np.int64).reshape(ne, d + 1)
        pos += ne * (d + 1)
        facets, labels = [], []
        for _ in range(nf):
            facets.append([int(t) for t in tokens[pos : pos + d]])
            lab = tokens[pos + d]
            labels.append(frozenset() if lab == "none" else frozenset(lab.split(",")))
            pos += d + 1
    except (ValueError, IndexError) as exc:
        raise InvalidArgument(f"malformed mesh file {path}: {exc}") from exc
    if pos != len(tokens):
        raise InvalidArgument(f"malformed mesh file {path}: {len(tokens) - pos} trailing tokens")
    return Mesh(coords, elems, np.array(facets, dtype=np.int64).reshape(-1, d), labels)


def write_mesh(mesh: Mesh, path) -> None:
    d = mesh.dim
    lines = [f"{d} {mesh.n_nodes} {mesh.n_elements} {len(mesh.facets)}"]
    lines += [" ".join(repr(float(v)) for v in x) for x in mesh.coords]
    lines += [" ".join(str(int(v)) for v in e) for e in mesh.elements]
    for f, lab in zip(mesh.facets, mesh.facet_labels):
        tag = ",".join(sorted(lab)) if lab else "none"
        lines.append(" ".join(str(int(v)) for v in f) + " " + tag)
    Path(path).write_text("\n".join(lines) + "\n")
