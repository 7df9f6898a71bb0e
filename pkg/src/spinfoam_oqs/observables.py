"""Geometric and thermodynamic observables of reduced trajectories.

Energies are tied to areas: a level labeled by spin j carries
E = scale * sqrt(j(j+1)) in Planck units.  The release series uses the
forward difference over the stepped trajectory, so its weighted sum
telescopes exactly to the total energy drop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np
from scipy.linalg import expm

from .lindblad import Trajectory
from .recoupling import Spin, as_spin


class UndefinedTemperatureError(ValueError):
    """Spectral temperature needs strictly positive neighboring populations."""


def area(j, gamma_immirzi: float = 1.0) -> float:
    """Area eigenvalue 8 pi gamma sqrt(j(j+1)) in Planck units."""
    s = as_spin(j)
    jj = s.twice_j * (s.twice_j + 2) / 4.0  # j(j+1) computed exactly from 2j
    return 8.0 * math.pi * gamma_immirzi * math.sqrt(jj)


@dataclass(frozen=True)
class EnergySpectrum:
    """Level energies scale*sqrt(j(j+1)) for a list of distinct level spins."""

    spins: tuple[Spin, ...]
    scale: float = 1.0

    def __post_init__(self):
        spins = tuple(as_spin(s) for s in self.spins)
        if len(set(spins)) != len(spins):
            raise ValueError("level spins must be distinct")
        if self.scale <= 0:
            raise ValueError("energy scale must be positive")
        object.__setattr__(self, "spins", spins)

    @property
    def dim(self) -> int:
        return len(self.spins)

    def energies(self) -> np.ndarray:
        return np.array(
            [
                self.scale * math.sqrt(s.twice_j * (s.twice_j + 2) / 4.0)
                for s in self.spins
            ]
        )


def energy_operator(spec: EnergySpectrum) -> np.ndarray:
    """Diagonal energy operator in the level basis."""
    return np.diag(spec.energies()).astype(complex)


@dataclass(frozen=True)
class ObservableSeries:
    """(step, value) pairs with strictly increasing steps."""

    steps: tuple[int, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.steps) != len(self.values):
            raise ValueError("steps and values must align")
        if any(b <= a for a, b in zip(self.steps, self.steps[1:])):
            raise ValueError("steps must be strictly increasing")

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.steps, dtype=float), np.array(self.values, dtype=float)


def energy_expectations(traj: Trajectory, spec: EnergySpectrum) -> np.ndarray:
    E = energy_operator(spec)
    return np.array([np.trace(rho @ E).real for rho in traj.states])


def energy_release(traj: Trajectory, spec: EnergySpectrum, g: float | None = None) -> ObservableSeries:
    """Forward-difference release S_k = (<E>_k - <E>_{k+1}) / g."""
    if traj.steps < 1:
        raise ValueError("trajectory needs at least two states")
    step_g = traj.g if g is None else float(g)
    expect = energy_expectations(traj, spec)
    values = (expect[:-1] - expect[1:]) / step_g
    return ObservableSeries(tuple(range(traj.steps)), tuple(float(v) for v in values))


def spectral_temperature(
    rho: np.ndarray,
    spec: EnergySpectrum,
    positivity_floor: float | None = None,
    diag_tol: float = 1e-8,
) -> tuple[float, float]:
    """Spectral inverse temperature of a (near-)diagonal state.

    Returns (1/k_B T, T).  Populations are read from the diagonal after
    checking that off-diagonal elements are below ``diag_tol``.  A zero or
    negative population makes the estimator undefined and raises, unless a
    positivity floor is explicitly supplied (silent regularization hides
    non-thermal structure, so it is opt-in).
    """
    rho = np.asarray(rho, dtype=complex)
    N = spec.dim
    if rho.shape != (N, N):
        raise ValueError("state dimension does not match the spectrum")
    if N == 1:
        raise UndefinedTemperatureError("a single level has no temperature")
    off = rho - np.diag(np.diag(rho))
    if np.max(np.abs(off)) > diag_tol:
        raise ValueError(
            f"state is not diagonal in the energy basis (off-diag {np.max(np.abs(off)):.2e})"
        )
    pops = np.diag(rho).real.copy()
    if positivity_floor is not None:
        pops = np.maximum(pops, positivity_floor)
    if np.any(pops <= 0):
        bad = int(np.argmin(pops))
        raise UndefinedTemperatureError(
            f"population of level {bad} is {pops[bad]:.3e}; temperature undefined"
        )
    E = spec.energies()
    prefactor = 1.0 - (pops[0] + pops[-1]) / 2.0
    if prefactor == 0:
        raise UndefinedTemperatureError("degenerate edge populations (N=2 Gibbs trap)")
    acc = 0.0
    for i in range(1, N):
        weight = (pops[i] + pops[i - 1]) / 2.0
        acc += weight * math.log(pops[i] / pops[i - 1]) / (E[i] - E[i - 1])
    beta = -acc / prefactor
    temperature = math.inf if beta == 0 else 1.0 / beta
    return beta, temperature


def temperature_series(
    traj: Trajectory,
    spec: EnergySpectrum,
    skip_undefined: bool = True,
) -> ObservableSeries:
    """Spectral inverse temperature along a trajectory.

    Steps where the estimator is undefined (zero populations, usually the
    pure initial state) are skipped when ``skip_undefined`` is set.
    """
    steps, betas = [], []
    for k, rho in enumerate(traj.states):
        try:
            beta, _ = spectral_temperature(rho, spec)
        except (UndefinedTemperatureError, ValueError):
            if skip_undefined:
                continue
            raise
        steps.append(k)
        betas.append(beta)
    return ObservableSeries(tuple(steps), tuple(betas))


def thermal_flow_check(rho: np.ndarray, s: float, support_tol: float = 1e-12) -> tuple[float, float]:
    """Residuals of the modular flow generated by -ln(rho).

    Returns (flow residual, commutator norm): the norm of
    e^{isK} rho e^{-isK} - rho with K = -ln(rho) on the support of rho,
    and the norm of [K, rho].  Both vanish because K is a function of rho;
    a dissipative step can therefore never be generated by this flow.
    """
    rho = np.asarray(rho, dtype=complex)
    herm = (rho + rho.conj().T) / 2
    vals, vecs = np.linalg.eigh(herm)
    keep = vals > support_tol
    if not np.any(keep):
        raise ValueError("state has numerically empty support")
    logs = np.zeros_like(vals)
    logs[keep] = -np.log(vals[keep])
    K = (vecs * logs) @ vecs.conj().T
    flow = expm(1j * s * K)
    flow_residual = float(np.linalg.norm(flow @ rho @ flow.conj().T - rho))
    commutator = float(np.linalg.norm(K @ rho - rho @ K))
    return flow_residual, commutator


def gibbs_state(spec: EnergySpectrum, beta: float) -> np.ndarray:
    """Thermal state exp(-beta E)/Z in the level basis."""
    w = np.exp(-beta * spec.energies())
    return np.diag(w / w.sum()).astype(complex)
