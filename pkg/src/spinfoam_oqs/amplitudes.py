"""Transition-amplitude providers and damping-matrix assembly.

Two backends fill the complex transition matrix W:

* a 3D recoupling backend that contracts products of tetrahedral vertex
  amplitudes (signed 6j symbols) over a small 2-complex, with boundary
  spins pinned or weighted by a boundary state;
* a large-spin analytic vertex with two interfering stationary-phase
  branches, used for closed-form two-level studies.

From W, normalized damping rates kappa are derived as squared moduli with
either normalization convention (over the out index by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .recoupling import Spin, as_spin, wigner6j

GAUSSIAN_TAIL_CUT = 1e-8

_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)  # i**k for k mod 4


class DegenerateSteadyStateError(ValueError):
    """Both interference weights vanish; the two-level balance is undefined."""


class MissingBoundaryError(ValueError):
    """Boundary faces without a pinned or weighted spin assignment."""


class ProviderError(RuntimeError):
    """Amplitude provider failed while filling a matrix entry."""


def _tri_t(ta: int, tb: int, tc: int) -> bool:
    return (ta + tb + tc) % 2 == 0 and abs(ta - tb) <= tc <= ta + tb


def pr_vertex(j1, j2, j3, j4, j5, j6) -> complex:
    """Signed tetrahedral vertex amplitude (-1)^(sum j) * {6j}.

    A half-integer total spin makes the sign a complex unit, which is kept
    so enclosing sums interfere correctly.
    """
    spins = tuple(as_spin(j) for j in (j1, j2, j3, j4, j5, j6))
    total_twice = sum(s.twice_j for s in spins)
    return _PHASES[total_twice % 4] * wigner6j(*spins)


def _pr_vertex_t(tjs: tuple[int, ...]) -> complex:
    return _PHASES[sum(tjs) % 4] * wigner6j(*(Spin(t) for t in tjs))


# ---------------------------------------------------------------------------
# Foam 2-complex
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Foam2Complex:
    """Small 2-complex whose vertices each expose six face slots.

    ``boundary_faces`` maps a face id to the boundary-network link it ends
    on; ``internal_faces`` maps a face id to its summed spin range.  A face
    id may appear in several vertices (shared face), but boundary faces
    must touch exactly one vertex.
    """

    vertex_faces: tuple[tuple[int, ...], ...]
    boundary_faces: Mapping[int, int]
    internal_faces: Mapping[int, tuple[Spin, Spin]]

    def __post_init__(self):
        object.__setattr__(self, "boundary_faces", dict(self.boundary_faces))
        object.__setattr__(self, "internal_faces", dict(self.internal_faces))
        declared = set(self.boundary_faces) | set(self.internal_faces)
        if set(self.boundary_faces) & set(self.internal_faces):
            raise ValueError("a face cannot be both boundary and internal")
        used: dict[int, int] = {}
        for v, faces in enumerate(self.vertex_faces):
            if len(faces) != 6:
                raise ValueError(f"vertex {v} exposes {len(faces)} faces, expected 6")
            for f in faces:
                used[f] = used.get(f, 0) + 1
                if f not in declared:
                    raise ValueError(f"face {f} of vertex {v} is undeclared")
        for f in self.boundary_faces:
            if used.get(f, 0) != 1:
                raise ValueError(f"boundary face {f} must touch exactly one vertex")
        for f in self.internal_faces:
            if f not in used:
                raise ValueError(f"internal face {f} touches no vertex")

    @property
    def num_vertices(self) -> int:
        return len(self.vertex_faces)

    @property
    def boundary_links(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.boundary_faces.values())))


def single_vertex_foam() -> Foam2Complex:
    """One tetrahedral vertex, all six faces on the boundary (links 0..5)."""
    return Foam2Complex(
        vertex_faces=((0, 1, 2, 3, 4, 5),),
        boundary_faces={f: f for f in range(6)},
        internal_faces={},
    )


def disconnected_pair_foam() -> Foam2Complex:
    """Two vertices with no shared faces; boundary links 0..11."""
    return Foam2Complex(
        vertex_faces=((0, 1, 2, 3, 4, 5), (6, 7, 8, 9, 10, 11)),
        boundary_faces={f: f for f in range(12)},
        internal_faces={},
    )


def chain_foam(
    n_vertices: int,
    internal_range: tuple[Spin, Spin] | None = None,
) -> Foam2Complex:
    """Chain of vertices glued one-by-one, three shared faces per gluing.

    The first vertex keeps three boundary faces (links 0,1,2, the in slot),
    the last keeps three (links 3,4,5, the out slot); every gluing
    contributes three internal faces.
    """
    if n_vertices < 2:
        raise ValueError("a chain needs at least 2 vertices")
    lo, hi = internal_range if internal_range is not None else (Spin(0), Spin(8))
    next_face = 0

    def take(k):
        nonlocal next_face
        out = tuple(range(next_face, next_face + k))
        next_face += k
        return out

    in_faces = take(3)
    shared = [take(3) for _ in range(n_vertices - 1)]
    out_faces = take(3)

    vertex_faces = []
    for v in range(n_vertices):
        left = in_faces if v == 0 else shared[v - 1]
        right = out_faces if v == n_vertices - 1 else shared[v]
        vertex_faces.append(tuple(left) + tuple(right))

    boundary = {f: i for i, f in enumerate(in_faces)}
    boundary.update({f: 3 + i for i, f in enumerate(out_faces)})
    internal = {f: (lo, hi) for grp in shared for f in grp}
    return Foam2Complex(tuple(vertex_faces), boundary, internal)


def bridged_pair_foam(internal_range: tuple[Spin, Spin] | None = None) -> Foam2Complex:
    """Two vertices sharing a single face, four free boundary links.

    Boundary links: 0,1,2 = in slot (vertex 0), 3,4,5 = out slot
    (vertex 1), 6..9 = bath links (two per vertex).  Face 12 is shared and
    summed.
    """
    lo, hi = internal_range if internal_range is not None else (Spin(0), Spin(8))
    return Foam2Complex(
        vertex_faces=((0, 1, 2, 6, 7, 12), (12, 8, 9, 3, 4, 5)),
        boundary_faces={0: 0, 1: 1, 2: 2, 3: 3, 4: 4, 5: 5, 6: 6, 7: 7, 8: 8, 9: 9},
        internal_faces={12: (lo, hi)},
    )


def cascade_pair_foam(internal_range: tuple[Spin, Spin] | None = None) -> Foam2Complex:
    """Two vertices sharing one face, arranged so one boundary link per
    vertex sits in a triangle with the shared face.

    Link 0 (vertex 0) and link 3 (vertex 1) are those distinguished
    single-link slots; the spins of links 7 and 8 close the triangles
    around the shared face 12 and therefore gate how far the shared spin
    can stray from the slot labels.  Links 1,2,4,5,6,9 are free bath
    links.
    """
    lo, hi = internal_range if internal_range is not None else (Spin(0), Spin(8))
    return Foam2Complex(
        vertex_faces=((0, 7, 12, 6, 1, 2), (3, 8, 12, 9, 4, 5)),
        boundary_faces={0: 0, 1: 1, 2: 2, 3: 3, 4: 4, 5: 5, 6: 6, 7: 7, 8: 8, 9: 9},
        internal_faces={12: (lo, hi)},
    )


# ---------------------------------------------------------------------------
# Boundary states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinkWeight:
    """Per-link weight profile over the spin grid.

    Delta profiles pin a grid spin; gaussian profiles weigh the grid by
    exp(-(j - j0)^2 / sqrt(j0)) around a positive (not necessarily
    half-integer) center.
    """

    kind: str  # "delta" | "gaussian"
    center: Spin | float

    def __post_init__(self):
        if self.kind == "delta":
            object.__setattr__(self, "center", as_spin(self.center))
        elif self.kind == "gaussian":
            j0 = float(
                self.center.j if isinstance(self.center, Spin) else self.center
            )
            if j0 <= 0:
                raise ValueError("gaussian weight needs a positive center")
            object.__setattr__(self, "center", j0)
        else:
            raise ValueError(f"unknown link weight kind {self.kind!r}")

    def vector(self, grid: Sequence[Spin]) -> np.ndarray:
        if self.kind == "delta":
            return np.array(
                [1.0 if s == self.center else 0.0 for s in grid], dtype=complex
            )
        j0 = float(self.center)
        w = np.array(
            [math.exp(-((float(s) - j0) ** 2) / math.sqrt(j0)) for s in grid],
            dtype=float,
        )
        w[w < GAUSSIAN_TAIL_CUT * w.max()] = 0.0
        return w.astype(complex)

    def support(self, grid: Sequence[Spin]) -> list[Spin]:
        vec = self.vector(grid)
        return [s for s, w in zip(grid, vec) if w != 0]


class BoundaryState:
    """Finite superposition of product weights over boundary links."""

    def __init__(self, terms: Sequence[tuple[complex, Mapping[int, LinkWeight]]]):
        self.terms: tuple[tuple[complex, dict[int, LinkWeight]], ...] = tuple(
            (complex(w), dict(links)) for w, links in terms
        )
        if not self.terms or all(w == 0 for w, _ in self.terms):
            raise ValueError("boundary state needs at least one nonzero term")
        links0 = set(self.terms[0][1])
        for _, links in self.terms:
            if set(links) != links0:
                raise ValueError("all terms must cover the same links")

    @property
    def links(self) -> frozenset[int]:
        return frozenset(self.terms[0][1])

    @classmethod
    def delta(cls, assignment: Mapping[int, Spin | float | str], weight: complex = 1.0):
        return cls(
            [(weight, {l: LinkWeight("delta", as_spin(s)) for l, s in assignment.items()})]
        )

    @classmethod
    def gaussian(cls, centers: Mapping[int, Spin | float | str], weight: complex = 1.0):
        def coerce(s):
            if isinstance(s, str) and "/" in s:
                return float(as_spin(s).j)
            return float(s) if not isinstance(s, Spin) else float(s.j)

        return cls(
            [(weight, {l: LinkWeight("gaussian", coerce(s)) for l, s in centers.items()})]
        )

    @classmethod
    def superposition(cls, terms: Sequence[tuple[complex, Mapping[int, Spin | float | str]]]):
        return cls(
            [
                (w, {l: LinkWeight("delta", as_spin(s)) for l, s in assignment.items()})
                for w, assignment in terms
            ]
        )

    def merged(self, other: "BoundaryState") -> "BoundaryState":
        """Product state over the disjoint union of the two link sets."""
        if self.links & other.links:
            raise ValueError("cannot merge boundary states sharing links")
        merged = [
            (wa * wb, {**la, **lb})
            for wa, la in self.terms
            for wb, lb in other.terms
        ]
        return BoundaryState(merged)


# ---------------------------------------------------------------------------
# 3D transition amplitude
# ---------------------------------------------------------------------------

_TENSOR_CACHE: dict[tuple, np.ndarray] = {}
_TENSOR_CACHE_MAX = 256


def _vertex_tensor(grids: Sequence[Sequence[Spin]]) -> np.ndarray:
    """Tetrahedral amplitudes over the product of six per-face grids."""
    tj = [tuple(s.twice_j for s in g) for g in grids]
    key = tuple(tj)
    cached = _TENSOR_CACHE.get(key)
    if cached is not None:
        return cached
    dims = tuple(len(g) for g in tj)
    T = np.zeros(dims, dtype=complex)
    for i0, t0 in enumerate(tj[0]):
        for i1, t1 in enumerate(tj[1]):
            for i2, t2 in enumerate(tj[2]):
                if not _tri_t(t0, t1, t2):
                    continue
                for i3, t3 in enumerate(tj[3]):
                    for i4, t4 in enumerate(tj[4]):
                        if not _tri_t(t3, t4, t2):
                            continue
                        for i5, t5 in enumerate(tj[5]):
                            if not _tri_t(t0, t4, t5) or not _tri_t(t3, t1, t5):
                                continue
                            T[i0, i1, i2, i3, i4, i5] = _pr_vertex_t(
                                (t0, t1, t2, t3, t4, t5)
                            )
    if len(_TENSOR_CACHE) >= _TENSOR_CACHE_MAX:
        _TENSOR_CACHE.clear()
    _TENSOR_CACHE[key] = T
    return T


def _face_weight_vector(grid: Sequence[Spin]) -> np.ndarray:
    """Internal face measure (-1)^j (2j+1), with the half-integer phase."""
    return np.array(
        [_PHASES[s.twice_j % 4] * (s.twice_j + 1) for s in grid],
        dtype=complex,
    )


def pr_transition(
    foam: Foam2Complex,
    boundary: BoundaryState,
    j_max: Spin | float | str = Spin(8),
    parallel: bool = False,
) -> complex:
    """Contract the foam amplitude against a boundary state.

    Internal faces are summed with the (-1)^j (2j+1) measure over their
    declared range clipped to ``j_max``; overall normalization is fixed to
    one (all downstream rates divide it out).  Summation order is
    deterministic; ``parallel=True`` chunks the first internal face across
    threads, which may move the result by float reassociation at the
    1e-12 relative level.
    """
    jmax = as_spin(j_max)
    grid_all = Spin.range(0, jmax)

    needed = set(foam.boundary_faces.values())
    covered = boundary.links if boundary.terms[0][1] else frozenset()
    missing = needed - covered
    if missing:
        faces = sorted(
            f for f, l in foam.boundary_faces.items() if l in missing
        )
        raise MissingBoundaryError(
            f"boundary faces {faces} (links {sorted(missing)}) have no assignment"
        )

    internal_grids: dict[int, list[Spin]] = {}
    for f, (lo, hi) in foam.internal_faces.items():
        top = min(hi.twice_j, jmax.twice_j)
        internal_grids[f] = [Spin(t) for t in range(lo.twice_j, top + 1)]
        if not internal_grids[f]:
            raise ValueError(f"internal face {f} has an empty grid under j_max={jmax}")

    total = 0.0 + 0.0j
    for weight, link_weights in boundary.terms:
        if weight == 0:
            continue
        face_grid: dict[int, list[Spin]] = {}
        face_vec: dict[int, np.ndarray] = {}
        for f, link in foam.boundary_faces.items():
            lw = link_weights[link]
            support = lw.support(grid_all)
            if not support:
                face_grid[f] = []
                break
            face_grid[f] = support
            vec = lw.vector(grid_all)
            face_vec[f] = np.array([vec[grid_all.index(s)] for s in support])
        if any(len(g) == 0 for g in face_grid.values()):
            continue
        for f, grid in internal_grids.items():
            face_grid[f] = grid
            face_vec[f] = _face_weight_vector(grid)

        if parallel and internal_grids:
            total += weight * _contract_parallel(foam, face_grid, face_vec)
        else:
            total += weight * _contract(foam, face_grid, face_vec)
    return total


def _contract(foam, face_grid, face_vec) -> complex:
    face_axis = {f: i for i, f in enumerate(sorted(face_grid))}
    operands = []
    subscripts = []
    for faces in foam.vertex_faces:
        operands.append(_vertex_tensor([face_grid[f] for f in faces]))
        subscripts.append([face_axis[f] for f in faces])
    for f, vec in face_vec.items():
        operands.append(vec)
        subscripts.append([face_axis[f]])
    args = []
    for op, sub in zip(operands, subscripts):
        args.extend((op, sub))
    args.append([])
    return complex(np.einsum(*args, optimize=True))


def _contract_parallel(foam, face_grid, face_vec, n_chunks: int = 4) -> complex:
    from concurrent.futures import ThreadPoolExecutor

    internal = sorted(f for f in face_grid if f not in foam.boundary_faces)
    target = internal[0]
    grid = face_grid[target]
    chunks = [grid[i::n_chunks] for i in range(n_chunks)]
    vecs = [face_vec[target][i::n_chunks] for i in range(n_chunks)]

    def run(chunk_and_vec):
        chunk, vec = chunk_and_vec
        if not chunk:
            return 0.0 + 0.0j
        fg = dict(face_grid)
        fv = dict(face_vec)
        fg[target] = list(chunk)
        fv[target] = vec
        return _contract(foam, fg, fv)

    with ThreadPoolExecutor(max_workers=n_chunks) as pool:
        parts = list(pool.map(run, zip(chunks, vecs)))
    return sum(parts, start=0.0 + 0.0j)


# ---------------------------------------------------------------------------
# Transition matrices and damping rates
# ---------------------------------------------------------------------------

def label_spins(label, n_slots: int) -> tuple[Spin, ...]:
    """A basis label is one spin (replicated) or a tuple of slot spins."""
    if isinstance(label, (tuple, list)):
        spins = tuple(as_spin(s) for s in label)
        if len(spins) != n_slots:
            raise ValueError(f"label {label!r} does not fill {n_slots} slots")
        return spins
    return (as_spin(label),) * n_slots


def label_str(label) -> str:
    try:
        if isinstance(label, (tuple, list)):
            return "(" + ",".join(str(as_spin(s)) for s in label) + ")"
        return str(as_spin(label))
    except (ValueError, TypeError):
        return str(label)


@dataclass(frozen=True)
class TransitionMatrix:
    """Complex amplitudes W[n, m]: out state n (row), in state m (column)."""

    basis: tuple[str, ...]
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.shape[0] != len(self.basis):
            raise ValueError("entries must be square and match the basis")
        if not np.all(np.isfinite(e)):
            raise ValueError("non-finite transition amplitude")
        object.__setattr__(self, "entries", e)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def flatten(self) -> np.ndarray:
        return self.entries.reshape(-1)

    def to_csv(self) -> str:
        header = "out\\in," + ",".join(self.basis)
        rows = [header]
        for n, lab in enumerate(self.basis):
            cells = [
                f"{float(self.entries[n, m].real)!r}{float(self.entries[n, m].imag):+}j".replace("+-", "-")
                for m in range(self.dim)
            ]
            rows.append(lab + "," + ",".join(cells))
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class KappaMatrix:
    """Non-negative normalized damping rates kappa[n, m].

    Under the ``over_n`` convention each column (fixed in state m) sums to
    one; under ``over_m`` each row does.
    """

    basis: tuple[str, ...]
    entries: np.ndarray
    convention: str = "over_n"

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.shape[0] != len(self.basis):
            raise ValueError("entries must be square and match the basis")
        if np.any(e < -1e-15) or np.any(e > 1 + 1e-12):
            raise ValueError("kappa entries must lie in [0, 1]")
        if self.convention not in ("over_n", "over_m"):
            raise ValueError(f"unknown convention {self.convention!r}")
        sums = e.sum(axis=0) if self.convention == "over_n" else e.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > 1e-12:
            raise ValueError(
                f"{self.convention} normalization violated: sums={sums}"
            )
        object.__setattr__(self, "entries", np.clip(e, 0.0, 1.0))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def to_csv(self) -> str:
        header = "out\\in," + ",".join(self.basis)
        rows = [header]
        for n, lab in enumerate(self.basis):
            rows.append(
                lab + "," + ",".join(repr(float(x)) for x in self.entries[n])
            )
        return "\n".join(rows) + "\n"


class FactorizedProvider:
    """W[n, m] = conj(w_n) w_m for independent in and out state weights."""

    def __init__(self, weights: Sequence[complex]):
        self.weights = np.asarray(list(weights), dtype=complex)

    def amplitude(self, n: int, m: int, labels) -> complex:
        return complex(np.conj(self.weights[n]) * self.weights[m])


class FoamProvider:
    """Pins in/out slots of a foam boundary and weights the rest by a bath.

    ``bath`` is a BoundaryState over the non-pinned boundary links, or a
    callable (n_label, m_label) -> BoundaryState when the bath depends on
    the pinned states.
    """

    def __init__(
        self,
        foam: Foam2Complex,
        in_links: Sequence[int],
        out_links: Sequence[int],
        bath: BoundaryState | Callable | None = None,
        j_max: Spin | float | str = Spin(8),
    ):
        self.foam = foam
        self.in_links = tuple(in_links)
        self.out_links = tuple(out_links)
        self.bath = bath
        self.j_max = as_spin(j_max)
        rest = set(foam.boundary_links) - set(self.in_links) - set(self.out_links)
        self.bath_links = tuple(sorted(rest))

    def _bath_state(self, n_label, m_label) -> BoundaryState | None:
        if self.bath is None:
            if self.bath_links:
                raise MissingBoundaryError(
                    f"links {list(self.bath_links)} need a bath state"
                )
            return None
        if isinstance(self.bath, BoundaryState):
            return self.bath
        return self.bath(n_label, m_label)

    def amplitude(self, n: int, m: int, labels) -> complex:
        n_label, m_label = labels[n], labels[m]
        pins = dict(
            zip(self.in_links, label_spins(m_label, len(self.in_links)))
        )
        pins.update(
            zip(self.out_links, label_spins(n_label, len(self.out_links)))
        )
        state = BoundaryState.delta(pins)
        bath = self._bath_state(n_label, m_label)
        if bath is not None:
            state = state.merged(bath)
        return pr_transition(self.foam, state, self.j_max)


def transition_matrix(
    provider,
    basis: Sequence,
    max_workers: int | None = None,
) -> TransitionMatrix:
    """Fill W[n, m] from a provider over all basis pairs.

    Entries are independent, so an optional thread pool changes nothing
    but wall time.  Provider failures are re-raised with the (n, m)
    context attached.
    """
    labels = list(basis)
    dim = len(labels)
    names = tuple(label_str(l) for l in labels)

    def one(nm):
        n, m = nm
        try:
            return provider.amplitude(n, m, labels)
        except MissingBoundaryError:
            raise
        except Exception as exc:  # noqa: BLE001 - context per contract
            raise ProviderError(
                f"amplitude provider failed at (n={names[n]}, m={names[m]}): {exc}"
            ) from exc

    pairs = [(n, m) for n in range(dim) for m in range(dim)]
    if max_workers and max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            values = list(pool.map(one, pairs))
    else:
        values = [one(p) for p in pairs]
    entries = np.array(values, dtype=complex).reshape(dim, dim)
    return TransitionMatrix(names, entries)


def kappa_from_W(W: TransitionMatrix, convention: str = "over_n") -> KappaMatrix:
    """Normalized squared amplitudes |W|^2 as damping probabilities."""
    sq = np.abs(W.entries) ** 2
    if convention == "over_n":
        norms = sq.sum(axis=0)
        dead = np.where(norms == 0)[0]
        if dead.size:
            raise ValueError(
                f"all-zero amplitude column for in state(s) {[W.basis[m] for m in dead]}"
            )
        kappa = sq / norms[None, :]
    elif convention == "over_m":
        norms = sq.sum(axis=1)
        dead = np.where(norms == 0)[0]
        if dead.size:
            raise ValueError(
                f"all-zero amplitude row for out state(s) {[W.basis[n] for n in dead]}"
            )
        kappa = sq / norms[:, None]
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return KappaMatrix(W.basis, kappa, convention)


# ---------------------------------------------------------------------------
# Large-spin analytic vertex
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticParams:
    """Parameters of the two-branch large-spin vertex amplitude.

    ``alpha`` weighs the counter-rotating branch relative to the
    co-rotating one; ``phase_offset`` and ``chi_plus_m`` are carried but
    cancel in the modulus.
    """

    gamma_immirzi: float = 1.0
    regge_action: float = 1.0
    alpha: complex = 0.0
    n_plus_abs: float = 1.0
    phase_offset: float = 0.0
    chi_plus_m: float = 0.0

    def __post_init__(self):
        if self.n_plus_abs <= 0:
            raise ValueError("n_plus_abs must be positive")


def asymptotic_vertex(lam: float, p: AsymptoticParams) -> complex:
    """Large-spin vertex amplitude at scale lambda.

    The modulus is independent of the carried phases; only the relative
    branch weight alpha and the oscillation frequency survive in rates.
    """
    if lam <= 0:
        raise ValueError(f"scale parameter must be positive, got {lam}")
    phase = np.exp(1j * math.pi * p.chi_plus_m) * np.exp(1j * lam * p.phase_offset)
    osc = lam * p.gamma_immirzi * p.regge_action
    branches = np.exp(1j * osc) + p.alpha * np.exp(-1j * osc)
    return complex(phase * p.n_plus_abs * branches / lam**12)


def interference_weight(lam: float, p: AsymptoticParams) -> float:
    """|e^{2 i lambda gamma S} + alpha| |N+|, the oscillatory rate factor."""
    if lam <= 0:
        raise ValueError(f"scale parameter must be positive, got {lam}")
    osc = 2.0 * lam * p.gamma_immirzi * p.regge_action
    return float(abs(np.exp(1j * osc) + p.alpha) * p.n_plus_abs)


def two_level_rho11(lam1: float, lam2: float, p: AsymptoticParams) -> float:
    """Steady ground-level population of the two-scale reduced system.

    rho11 = lam1^4 f(lam2) / (lam1^4 f(lam2) + lam2^4 f(lam1)) with
    f the interference weight.  The larger share is evaluated as the
    complement of the smaller so that swapping the arguments sums to
    exactly one in floating point.
    """
    if lam1 <= 0 or lam2 <= 0:
        raise ValueError("scale parameters must be positive")
    a = lam1**4 * interference_weight(lam2, p)
    b = lam2**4 * interference_weight(lam1, p)
    if a == 0.0 and b == 0.0:
        raise DegenerateSteadyStateError(
            "both interference weights vanish; steady state undefined"
        )
    s = a + b
    if a <= b:
        return float(a / s)
    return float(1.0 - b / s)
