"""Fit a simplified two-vertex model to a target amplitude table.

The simplified model is a pair of unconnected tetrahedral vertices whose
free boundary spins carry a linear superposition of basis assignments;
the fit minimizes the distance between unit-normalized flattened
amplitude tables with a derivative-free simplex search restarted from
seeded random points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .amplitudes import TransitionMatrix, label_spins, pr_vertex
from .recoupling import Spin, as_spin


def cost(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance of the unit-normalized complex vectors, in [0, 2].

    Invariant under independent global complex rescaling of either input.
    """
    a = np.asarray(a, dtype=complex).reshape(-1)
    b = np.asarray(b, dtype=complex).reshape(-1)
    if a.shape != b.shape:
        raise ValueError("cost inputs must have equal length")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cost inputs must have nonzero norm")
    return float(np.linalg.norm(a / na - b / nb))


@dataclass(frozen=True)
class TwoVertexModel:
    """Factorized amplitudes W[n, m] = Wv_out(n) * Wv_in(m).

    Each vertex amplitude is linear in its bath weights:
    Wv(label; theta) = sum_b theta_b * vertex(label spins, bath triple b).
    """

    basis: tuple
    bath_triples_in: tuple[tuple[Spin, Spin, Spin], ...]
    bath_triples_out: tuple[tuple[Spin, Spin, Spin], ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "bath_triples_in",
            tuple(tuple(as_spin(s) for s in t) for t in self.bath_triples_in),
        )
        object.__setattr__(
            self,
            "bath_triples_out",
            tuple(tuple(as_spin(s) for s in t) for t in self.bath_triples_out),
        )

    @property
    def n_params(self) -> int:
        return len(self.bath_triples_in) + len(self.bath_triples_out)

    def _amplitude_table(self, triples) -> np.ndarray:
        table = np.zeros((len(self.basis), len(triples)), dtype=complex)
        for i, label in enumerate(self.basis):
            spins = label_spins(label, 3)
            for b, bath in enumerate(triples):
                table[i, b] = pr_vertex(*spins, *bath)
        return table

    def tables(self) -> tuple[np.ndarray, np.ndarray]:
        return (
            self._amplitude_table(self.bath_triples_in),
            self._amplitude_table(self.bath_triples_out),
        )

    def matrix(self, params: Sequence[float]) -> np.ndarray:
        theta = np.asarray(params, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters")
        k = len(self.bath_triples_in)
        table_in, table_out = self.tables()
        w_in = table_in @ theta[:k]
        w_out = table_out @ theta[k:]
        return np.outer(w_out, w_in)

    def flattened(self, params: Sequence[float]) -> np.ndarray:
        return self.matrix(params).reshape(-1)


@dataclass(frozen=True)
class FitProblem:
    """Target table, simplified model, and optimizer budget."""

    target: TransitionMatrix
    model: TwoVertexModel
    restarts: int = 5
    max_evals_per_restart: int = 4000
    simplex_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.model.n_params < 1:
            raise ValueError("model needs at least one parameter")
        if self.target.dim != len(self.model.basis):
            raise ValueError("target dimension does not match the model basis")
        if np.linalg.norm(self.target.flatten()) == 0:
            raise ValueError("target amplitude table has zero norm")

    def cost_at(self, params: Sequence[float]) -> float:
        return cost(self.target.flatten(), self.model.flattened(params))


@dataclass(frozen=True)
class FitResult:
    params: np.ndarray
    cost: float
    evaluations: int
    seed: int
    status: str  # "ok" | "budget_exhausted"


def fit_bath(problem: FitProblem) -> FitResult:
    """Simplex minimization with random restarts; deterministic per seed.

    The reported cost is the best value seen anywhere in the run, never
    above any intermediate evaluation.  Exhausting the budget before any
    improvement over the starting points is reported as a status, not an
    error.
    """
    rng = np.random.default_rng(problem.seed)
    target_flat = problem.target.flatten()
    model = problem.model
    # The per-vertex tables never change; precompute once.
    table_in, table_out = model.tables()
    k = len(model.bath_triples_in)

    evals = 0
    best_cost = math.inf
    best_params: np.ndarray | None = None

    def objective(theta: np.ndarray) -> float:
        nonlocal evals, best_cost, best_params
        evals += 1
        w_in = table_in @ theta[:k]
        w_out = table_out @ theta[k:]
        flat = np.outer(w_out, w_in).reshape(-1)
        norm = np.linalg.norm(flat)
        if norm == 0:
            return 2.0  # degenerate point, worst possible distance
        value = float(
            np.linalg.norm(flat / norm - target_flat / np.linalg.norm(target_flat))
        )
        if value < best_cost:
            best_cost = value
            best_params = theta.copy()
        return value

    starts = [np.ones(model.n_params)]
    starts += [rng.uniform(-1.0, 1.0, model.n_params) for _ in range(problem.restarts)]
    initial_best = math.inf
    for x0 in starts:
        start_cost = objective(np.asarray(x0, dtype=float))
        initial_best = min(initial_best, start_cost)
    for x0 in starts:
        minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={
                "xatol": problem.simplex_tol,
                "fatol": problem.simplex_tol,
                "maxfev": problem.max_evals_per_restart,
                "adaptive": True,
            },
        )
    status = "ok" if best_cost < initial_best else "budget_exhausted"
    return FitResult(
        params=best_params,
        cost=best_cost,
        evaluations=evals,
        seed=problem.seed,
        status=status,
    )


@dataclass(frozen=True)
class CostHistogram:
    """Binned cost density with bin width 0.1 over [0, 2]."""

    bin_left: tuple[float, ...]
    density: tuple[float, ...]
    counts: tuple[int, ...]
    minimum: float
    maximum: float
    mean: float
    n_samples: int

    BIN_WIDTH = 0.1

    def to_csv(self) -> str:
        rows = ["bin_left,density"]
        for left, dens in zip(self.bin_left, self.density):
            rows.append(f"{left!r},{dens!r}")
        return "\n".join(rows) + "\n"


def _simplex_weights(rng: np.random.Generator, k: int) -> np.ndarray:
    """Uniform draw from the probability simplex over k weights."""
    draws = rng.exponential(1.0, k)
    return draws / draws.sum()


# Bath triples covering every link-parity pattern, with pair sums large
# enough to keep the triangle rules satisfiable against labels up to 5/2.
PARITY_COVERING_BATH: tuple[tuple[str, str, str], ...] = (
    ("1", "2", "2"),
    ("2", "2", "2"),
    ("3/2", "3/2", "3/2"),
    ("3/2", "3/2", "2"),
    ("2", "2", "3/2"),
    ("3/2", "2", "3/2"),
    ("2", "3/2", "2"),
    ("2", "3/2", "3/2"),
    ("3/2", "2", "2"),
)


def admissible_triple_basis(
    n_labels: int,
    j_min="1/2",
    j_max="5/2",
    seed: int = 0,
    max_attempts: int = 10000,
) -> tuple[tuple[Spin, Spin, Spin], ...]:
    """Distinct admissible spin triples sampled from random node labelings.

    Each basis element is the boundary of a single trivalent node, the
    reduced state used throughout the fitting pipeline.
    """
    from .spin_network import NetworkTemplate, random_network

    lo, hi = as_spin(j_min), as_spin(j_max)
    template = NetworkTemplate(
        nodes=(0,),
        link_ends=((0, 0, None), (1, 0, None), (2, 0, None)),
        spin_ranges={i: (lo, hi) for i in range(3)},
    )
    labels: list[tuple[Spin, Spin, Spin]] = []
    attempt = 0
    while len(labels) < n_labels:
        if attempt >= max_attempts:
            raise ValueError(
                f"only {len(labels)} distinct admissible triples exist in "
                f"[{lo}, {hi}]; asked for {n_labels}"
            )
        net = random_network(template, seed=seed + attempt)
        attempt += 1
        triple = tuple(
            sorted((l.spin for l in net.links), key=lambda s: s.twice_j)
        )
        if triple not in labels:
            labels.append(triple)
    return tuple(labels)


def standard_model(basis) -> TwoVertexModel:
    """Two-vertex model with the parity-covering bath on both vertices."""
    bath = tuple(tuple(as_spin(s) for s in t) for t in PARITY_COVERING_BATH)
    return TwoVertexModel(tuple(basis), bath, bath)


def basis_from_network_file(path) -> tuple[tuple[Spin, Spin, Spin], ...]:
    """Read basis triples from a textual spin-network file.

    Every trivalent node of the network contributes one reduced-state
    label: the sorted spins of its three incident links.
    """
    from .spin_network import parse_network

    with open(path, "r", encoding="utf-8") as fh:
        net = parse_network(fh.read())
    labels: list[tuple[Spin, Spin, Spin]] = []
    for node in sorted(net.nodes):
        incident = net.incident_links(node)
        if len(incident) != 3:
            raise ValueError(
                f"node {node} has valence {len(incident)}; basis nodes must be trivalent"
            )
        triple = tuple(sorted((l.spin for l in incident), key=lambda s: s.twice_j))
        labels.append(triple)
    if not labels:
        raise ValueError("network file contains no nodes")
    return tuple(labels)


def chain_target(
    n_vertices: int,
    basis,
    internal_max="2",
    j_max="5/2",
) -> TransitionMatrix:
    """Amplitude table of a one-edge-glued chain foam over the basis."""
    from .amplitudes import FoamProvider, chain_foam, transition_matrix

    foam = chain_foam(
        n_vertices, internal_range=(Spin(0), as_spin(internal_max))
    )
    provider = FoamProvider(
        foam, in_links=(0, 1, 2), out_links=(3, 4, 5), bath=None, j_max=j_max
    )
    return transition_matrix(provider, list(basis))


def sample_cost_distribution(problem: FitProblem, n: int) -> CostHistogram:
    """Cost values at random model parameters, binned with width 0.1.

    Each draw derives its own generator from the master seed, so the
    histogram does not depend on evaluation order and draws may be
    computed in parallel.  Parameters are drawn uniformly from the
    per-vertex weight simplexes.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    model = problem.model
    table_in, table_out = model.tables()
    k = len(model.bath_triples_in)
    target_flat = problem.target.flatten()
    target_unit = target_flat / np.linalg.norm(target_flat)

    values = np.empty(n)
    for i in range(n):
        rng = np.random.default_rng([problem.seed, i])
        theta_in = _simplex_weights(rng, k)
        theta_out = _simplex_weights(rng, model.n_params - k)
        flat = np.outer(table_out @ theta_out, table_in @ theta_in).reshape(-1)
        norm = np.linalg.norm(flat)
        values[i] = 2.0 if norm == 0 else float(np.linalg.norm(flat / norm - target_unit))

    edges = np.round(np.arange(0.0, 2.0 + CostHistogram.BIN_WIDTH, CostHistogram.BIN_WIDTH), 10)
    counts, _ = np.histogram(values, bins=edges)
    density = counts / (n * CostHistogram.BIN_WIDTH)
    return CostHistogram(
        bin_left=tuple(float(e) for e in edges[:-1]),
        density=tuple(float(d) for d in density),
        counts=tuple(int(c) for c in counts),
        minimum=float(values.min()),
        maximum=float(values.max()),
        mean=float(values.mean()),
        n_samples=n,
    )
