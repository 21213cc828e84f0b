"""Calibration of the engine's fixed quantities from observed data.

Two inverse problems are solved here:

* ``solve_utility_min_norm`` — given a strength matrix and an observed
  performance vector, recover the fixed utility weights.  Each row is a
  single linear constraint in |S| unknowns, so the system is
  underdetermined; the minimum-Euclidean-norm solution is obtained with a
  Lagrange multiplier per row, which reduces to the closed form
  ``U[i, j] = R[i, j] * W[i] / sum_k R[i, k]**2``.

* ``tune_initial_r`` — given two consecutive performance snapshots and
  fixed utility weights, search for seed strengths whose predicted
  performance (through a pluggable policy function) matches the later
  snapshot, then advance them one step with the strength-update rule.
  The search is a deterministic coordinate sweep: bisection per
  coordinate for coordinate-monotone policy functions, golden-section on
  the absolute residual otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, InfeasibleRowError, SequencingError, ShapeError
from .model import (
    DEFAULT_OPTIONS,
    InfluenceMatrix,
    ModelOptions,
    PerformanceVector,
    UtilityMatrix,
    _updated_entries,
)

CONSTRAINT_TOL = 1e-9

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _forward(r_row: np.ndarray, u_row: np.ndarray) -> float:
    return float(np.einsum("j,j->", r_row, u_row))


def _strength_grid(matrix) -> np.ndarray:
    """Accept a typed matrix or any finite square grid.

    Calibration only needs finite entries; unlike the dynamics, it must
    also handle observed grids with all-zero rows, which the stricter
    influence type (unit diagonal) cannot represent.
    """
    entries = np.asarray(getattr(matrix, "entries", matrix), dtype=float)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ShapeError(f"calibration grid must be square, got shape {entries.shape}")
    if not np.all(np.isfinite(entries)):
        raise DomainError("calibration grid must have finite entries")
    return entries


@dataclass(frozen=True)
class PolicyFunction:
    """Evaluator predicting one subsystem's performance from its strength
    and utility rows.  ``monotone`` declares that the prediction is
    monotone in each strength coordinate, enabling bisection."""

    name: str
    fn: Callable[[np.ndarray, np.ndarray], float]
    monotone: bool = False

    @classmethod
    def forward_default(cls) -> "PolicyFunction":
        """The strength-weighted utility sum used by the simulator itself."""
        return cls("forward-sum", _forward, monotone=True)


@dataclass(frozen=True)
class TuneOptions:
    tol: float = 1e-6
    max_sweeps: int = 200
    bracket: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "bracket", (float(self.bracket[0]), float(self.bracket[1])))
        if not (self.tol > 0.0) or not math.isfinite(self.tol):
            raise DomainError(f"tol must be positive and finite, got {self.tol}")
        if self.max_sweeps < 1:
            raise DomainError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        lo, hi = self.bracket
        if not (0.0 <= lo < hi <= 1.0):
            raise DomainError(f"bracket must be non-degenerate and within [0, 1], got {self.bracket}")


@dataclass(frozen=True)
class CalibrationReport:
    """Per-row outcome of a calibration run.

    The convergence flags are derived, not stored: a row converged iff
    its residual is within ``tol``.
    """

    tol: float
    residuals: tuple[float, ...]
    sweeps: tuple[int, ...]
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "residuals", tuple(float(r) for r in self.residuals))
        object.__setattr__(self, "sweeps", tuple(int(s) for s in self.sweeps))
        object.__setattr__(self, "notes", tuple(self.notes))
        if any(r < 0.0 for r in self.residuals):
            raise DomainError("residuals must be non-negative")

    @property
    def converged(self) -> tuple[bool, ...]:
        return tuple(r <= self.tol for r in self.residuals)

    @property
    def all_converged(self) -> bool:
        return all(self.converged)


def solve_utility_min_norm(
    influence, performance: PerformanceVector
) -> tuple[UtilityMatrix, CalibrationReport]:
    """Recover the minimum-norm fixed utility weights reproducing the
    observed performance through the strength-weighted sum.

    ``influence`` may be an InfluenceMatrix or any finite square grid.
    Rows decouple, so each row is solved independently: the multiplier
    lambda_i = W[i] / sum_k R[i, k]**2 scales the strength row into the
    utility row.  An all-zero strength row is feasible only for a zero
    target (the utility row is then zero, with a note); otherwise the
    row is reported infeasible.
    """
    r = _strength_grid(influence)
    if r.shape[0] != performance.size:
        raise ShapeError(
            f"strength grid is {r.shape[0]}x{r.shape[1]} but performance has "
            f"size {performance.size}"
        )
    n = r.shape[0]
    w = performance.values
    u = np.zeros((n, n))
    residuals = []
    notes = []
    for i in range(n):
        ss = float(np.dot(r[i], r[i]))
        if ss == 0.0:
            if w[i] != 0.0:
                raise InfeasibleRowError(
                    i,
                    f"row {i + 1} infeasible: all-zero strengths cannot produce "
                    f"nonzero target {w[i]!r}",
                )
            notes.append(f"row {i + 1} degenerate: all-zero strengths with zero target")
            residuals.append(0.0)
            continue
        u[i] = r[i] * (w[i] / ss)
        residuals.append(abs(_forward(r[i], u[i]) - w[i]))
    report = CalibrationReport(CONSTRAINT_TOL, tuple(residuals), (0,) * n, tuple(notes))
    return UtilityMatrix(u), report


def verify_min_norm(
    utility,
    influence,
    performance: PerformanceVector,
    trials: int = 100,
    seed: int = 0,
) -> bool:
    """Certify minimality of a utility solution by random probing.

    For each row, ``trials`` random directions are projected onto the
    row's constraint null space (directions d with sum_j R[i,j]*d[j] = 0,
    which leave the reproduced performance unchanged) and rescaled over
    several magnitude decades.  A genuine minimum-norm row is orthogonal
    to that null space, so every perturbed row must be at least as long;
    the check allows 1e-9 of rounding slack.  A trivial null space (only
    possible for a one-subsystem grid) passes vacuously.

    Both matrix arguments may be typed matrices or raw square grids;
    ``performance`` is the constraint target the rows already reproduce,
    while the probe itself only needs the strength rows.
    """
    grid = _strength_grid(influence)
    u_grid = _strength_grid(utility)
    if not (u_grid.shape[0] == grid.shape[0] == performance.size):
        raise ShapeError("utility, influence and performance sizes must agree")
    rng = np.random.default_rng(seed)
    n = grid.shape[0]
    for i in range(n):
        u_row = u_grid[i]
        r_row = grid[i]
        base = float(np.linalg.norm(u_row))
        rr = float(np.dot(r_row, r_row))
        for _ in range(trials):
            v = rng.standard_normal(n)
            d = v - r_row * (float(np.dot(v, r_row)) / rr) if rr > 0.0 else v
            norm_d = float(np.linalg.norm(d))
            if norm_d == 0.0:
                continue  # null space is trivial in this direction
            magnitude = 10.0 ** rng.uniform(-3.0, 0.3) * max(base, 1.0)
            d *= magnitude / norm_d
            if float(np.linalg.norm(u_row + d)) < base - 1e-9:
                return False
    return True


def _bisect(f: Callable[[float], float], lo: float, hi: float, f_lo: float, f_hi: float, tol: float) -> tuple[float, float]:
    """Root of f on [lo, hi] given a sign change, to |f| <= tol."""
    if abs(f_lo) <= tol:
        return lo, f_lo
    if abs(f_hi) <= tol:
        return hi, f_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if abs(f_mid) <= tol or mid == lo or mid == hi:
            return mid, f_mid
        if (f_lo < 0.0) == (f_mid < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    mid = 0.5 * (lo + hi)
    return mid, f(mid)


def _golden_min(f: Callable[[float], float], lo: float, hi: float) -> tuple[float, float]:
    """Golden-section minimum of f on [lo, hi] (unimodal assumption)."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(120):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = c if fc <= fd else d
    return x, min(fc, fd)


def _tune_row(
    i: int,
    row: np.ndarray,
    u_row: np.ndarray,
    target: float,
    policy: PolicyFunction,
    opts: TuneOptions,
) -> tuple[float, int, list[str]]:
    """Sweep the off-diagonal coordinates of one strength row until the
    predicted performance matches the target.  Mutates ``row`` in place
    and returns (signed residual, sweeps used, notes)."""
    lo, hi = opts.bracket
    notes: list[str] = []

    def f_at(j: int, v: float) -> float:
        old = row[j]
        row[j] = v
        out = policy.fn(row, u_row) - target
        row[j] = old
        return out

    residual = policy.fn(row, u_row) - target
    sweeps = 0
    while abs(residual) > opts.tol and sweeps < opts.max_sweeps:
        sweeps += 1
        crossing_seen = False
        moved = False
        for j in range(row.shape[0]):
            if j == i:
                continue
            f_lo, f_hi = f_at(j, lo), f_at(j, hi)
            if policy.monotone:
                if f_lo * f_hi <= 0.0:
                    crossing_seen = True
                    value, f_value = _bisect(lambda v: f_at(j, v), lo, hi, f_lo, f_hi, opts.tol)
                    row[j] = value
                    residual = f_value
                    moved = True
                else:
                    # no root on this coordinate; move to the closer end
                    end, f_end = (lo, f_lo) if abs(f_lo) < abs(f_hi) else (hi, f_hi)
                    if abs(f_end) < abs(residual):
                        row[j] = end
                        residual = f_end
                        moved = True
            else:
                if f_lo * f_hi <= 0.0:
                    crossing_seen = True
                value, f_abs = _golden_min(lambda v: abs(f_at(j, v)), lo, hi)
                if f_abs < abs(residual):
                    row[j] = value
                    residual = f_at(j, value)
                    moved = True
            if abs(residual) <= opts.tol:
                break
        if abs(residual) > opts.tol and not crossing_seen and not moved:
            notes.append(
                f"row {i + 1}: target unreachable within bracket "
                f"[{lo:g}, {hi:g}] (prediction on the same side of the "
                f"target at both ends of every coordinate)"
            )
            break
    if abs(residual) > opts.tol and not notes:
        notes.append(f"row {i + 1}: not converged after {sweeps} sweeps")
    return residual, sweeps, notes


def tune_initial_r(
    w_prev: PerformanceVector,
    w_curr: PerformanceVector,
    utility: UtilityMatrix,
    policy: PolicyFunction | None = None,
    opts: TuneOptions = TuneOptions(),
    initial: InfluenceMatrix | None = None,
    model_opts: ModelOptions = DEFAULT_OPTIONS,
) -> tuple[InfluenceMatrix, InfluenceMatrix, CalibrationReport]:
    """Search for seed strengths matching the later performance snapshot,
    then advance them one step.

    Row by row (rows are independent), the off-diagonal coordinates are
    swept in ascending order within ``opts.bracket`` until the policy
    function's prediction is within ``opts.tol`` of the target; the row
    is underdetermined, so the first feasible point reached by the
    deterministic sweep is kept.  Rows that cannot converge keep their
    best-found values and are flagged in the report.

    Returns the tuned matrix at the earlier step, the matrix advanced by
    the strength-update rule using the two snapshots, and the report.
    """
    if not (w_prev.size == w_curr.size == utility.size):
        raise ShapeError("snapshot and utility sizes must agree")
    if w_prev.timestamp + 1 != w_curr.timestamp:
        raise SequencingError(
            f"snapshots must be consecutive, got t={w_prev.timestamp} then t={w_curr.timestamp}"
        )
    if initial is not None and initial.size != utility.size:
        raise ShapeError("initial matrix size must agree with the snapshots")
    policy = policy or PolicyFunction.forward_default()
    n = utility.size
    lo, hi = opts.bracket
    if initial is not None:
        entries = np.array(initial.entries)
    else:
        entries = np.full((n, n), 0.5 * (lo + hi))
        np.fill_diagonal(entries, 1.0)

    residuals = []
    sweeps_used = []
    notes: list[str] = []
    for i in range(n):
        entries[i, i] = 1.0
        residual, sweeps, row_notes = _tune_row(
            i, entries[i], utility.entries[i], float(w_curr.values[i]), policy, opts
        )
        residuals.append(abs(residual))
        sweeps_used.append(sweeps)
        notes.extend(row_notes)

    tuned = InfluenceMatrix(entries, w_prev.timestamp)
    deltas = w_curr.values - w_prev.values
    advanced_entries, _ = _updated_entries(deltas, tuned.entries, model_opts)
    advanced = InfluenceMatrix(advanced_entries, w_curr.timestamp)
    report = CalibrationReport(opts.tol, tuple(residuals), tuple(sweeps_used), tuple(notes))
    return tuned, advanced, report
