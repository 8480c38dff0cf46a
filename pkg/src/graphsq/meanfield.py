"""Mean-field limit of JSQ(d): occupancy vectors, the ODE, its fixed point and
the tagged-queue (McKean-Vlasov) limit process.

An occupancy vector ``q`` holds tail fractions ``q_j`` = fraction of servers
with at least ``j`` tasks, for ``j = 0..B``; entries beyond ``B`` are zero.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MONOTONE_TOL = 1e-9


class MonotonicityError(RuntimeError):
    """An integrated state left the space of tail vectors."""


class OccupancyVector:
    """Truncated tail vector ``(q_0, ..., q_B)`` with ``q_0 = 1``."""

    __slots__ = ("q",)

    def __init__(self, q, *, check: bool = True, tol: float = 0.0):
        arr = np.array(q, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("occupancy vector must be a non-empty 1-D sequence")
        if check:
            _check_tail(arr, tol)
        arr.setflags(write=False)
        self.q = arr

    @property
    def B(self) -> int:
        return self.q.size - 1

    def __getitem__(self, j):
        if isinstance(j, (int, np.integer)) and j > self.B:
            return 0.0
        return self.q[j]

    def __len__(self) -> int:
        return self.q.size

    def __eq__(self, other) -> bool:
        return isinstance(other, OccupancyVector) and np.array_equal(self.q, other.q)

    def __repr__(self) -> str:
        return f"OccupancyVector({self.q.tolist()!r})"

    def padded(self, B: int) -> np.ndarray:
        out = np.zeros(B + 1)
        m = min(B, self.B) + 1
        out[:m] = self.q[:m]
        return out

    def mean(self) -> float:
        """Mean queue length, ``sum_{j>=1} q_j``."""
        return float(self.q[1:].sum())

    @classmethod
    def point_mass(cls, x: int, B: int | None = None) -> "OccupancyVector":
        B = max(x + 1, 1) if B is None else B
        q = np.zeros(B + 1)
        q[: x + 1] = 1.0
        return cls(q)

    @classmethod
    def from_queues(cls, queues, jmax: int) -> "OccupancyVector":
        return cls(occupancy_array(queues, jmax), check=False)


def _check_tail(q: np.ndarray, tol: float) -> None:
    if abs(q[0] - 1.0) > tol:
        raise ValueError(f"q_0 must equal 1, got {q[0]}")
    if np.any(q < -tol) or np.any(q > 1 + tol):
        raise ValueError("tail entries must lie in [0, 1]")
    if np.any(np.diff(q) > tol):
        raise ValueError("tail vector must be non-increasing")


def occupancy_array(queues, jmax: int) -> np.ndarray:
    """Tail fractions ``(1/n) #{i: X_i >= j}`` for ``j = 0..jmax``."""
    if jmax < 1:
        raise ValueError("jmax must be at least 1")
    x = np.asarray(queues, dtype=np.int64)
    counts = np.bincount(np.minimum(x, jmax), minlength=jmax + 1)
    return counts[::-1].cumsum()[::-1] / x.size


def l1_distance(a, b) -> float:
    """``sum_{j>=1} |a_j - b_j|`` with missing entries read as zero."""
    qa = a.q if isinstance(a, OccupancyVector) else np.asarray(a, dtype=float)
    qb = b.q if isinstance(b, OccupancyVector) else np.asarray(b, dtype=float)
    m = max(qa.size, qb.size)
    pa = np.zeros(m)
    pb = np.zeros(m)
    pa[: qa.size] = qa
    pb[: qb.size] = qb
    return float(np.abs(pa[1:] - pb[1:]).sum())


# -- ODE -----------------------------------------------------------------


def ode_rhs(q, lam: float, d: int) -> np.ndarray:
    """Drift of ``(q_1..q_B)``: ``lam (q_{i-1}^d - q_i^d) - (q_i - q_{i+1})``.

    Closed with ``q_0 = 1`` and ``q_{B+1} = 0``.
    """
    q = q.q if isinstance(q, OccupancyVector) else np.asarray(q, dtype=float)
    return _rhs_tail(q[1:], lam, d)


def _rhs_tail(y: np.ndarray, lam: float, d: int) -> np.ndarray:
    prev = np.empty_like(y)
    prev[0] = 1.0
    prev[1:] = y[:-1]
    nxt = np.empty_like(y)
    nxt[:-1] = y[1:]
    nxt[-1] = 0.0
    return lam * (prev**d - y**d) - (y - nxt)


@dataclass(frozen=True, eq=False)
class OdeSolution:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), B + 1)
    lam: float
    d: int
    B: int
    h: float
    tail_mass_max: float
    warnings: tuple[str, ...] = field(default=())

    def state(self, k: int) -> OccupancyVector:
        return OccupancyVector(self.states[k], check=False)

    def index_at(self, t: float) -> int:
        """Index of the grid point at or just before ``t``."""
        k = int(math.floor(t / self.h + 1e-9))
        return min(max(k, 0), self.times.size - 1)

    def at(self, t: float) -> np.ndarray:
        """Left-endpoint (piecewise constant) lookup of ``q(t)``."""
        return self.states[self.index_at(t)]

    @property
    def T(self) -> float:
        return float(self.times[-1])


def integrate(
    q0,
    lam: float,
    d: int,
    T: float,
    h: float = 1e-3,
    B: int | None = None,
    *,
    tail_threshold: float = 1e-8,
    tol: float = MONOTONE_TOL,
) -> OdeSolution:
    """Classical fixed-step RK4 for the truncated occupancy ODE on ``[0, T]``.

    ``T/h`` is rounded up to a whole number of steps and ``h`` shrunk to fit.
    Every step is recorded. States outside the tail-vector space by more than
    ``tol`` raise :class:`MonotonicityError`; they are never clipped.
    """
    if h <= 0 or T < 0:
        raise ValueError("need h > 0 and T >= 0")
    q0 = q0 if isinstance(q0, OccupancyVector) else OccupancyVector(q0)
    if B is None:
        B = max(q0.B, 2)
    if B < 2:
        raise ValueError("truncation level B must be at least 2")
    n_steps = max(1, math.ceil(T / h - 1e-9)) if T > 0 else 0
    h_eff = T / n_steps if n_steps else h

    states = np.empty((n_steps + 1, B + 1))
    states[:, 0] = 1.0
    y = q0.padded(B)[1:].copy()
    states[0, 1:] = y
    f = _rhs_tail
    for s in range(1, n_steps + 1):
        k1 = f(y, lam, d)
        k2 = f(y + 0.5 * h_eff * k1, lam, d)
        k3 = f(y + 0.5 * h_eff * k2, lam, d)
        k4 = f(y + h_eff * k3, lam, d)
        y = y + (h_eff / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        states[s, 1:] = y
    bad = (np.diff(states, axis=1) > tol).any(axis=1) | (states < -tol).any(axis=1) | (states > 1 + tol).any(axis=1)
    if bad.any():
        s = int(np.argmax(bad))
        raise MonotonicityError(
            f"state at t={s * h_eff:g} is not a tail vector (step h={h_eff:g} too large or B={B} too small)"
        )
    tail_max = float(states[:, B].max())
    notes = []
    if tail_max > tail_threshold:
        notes.append(f"truncation: q_B reached {tail_max:.3e} > {tail_threshold:.1e}; increase B")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    return OdeSolution(
        times=np.arange(n_steps + 1) * h_eff,
        states=states,
        lam=lam,
        d=d,
        B=B,
        h=h_eff,
        tail_mass_max=tail_max,
        warnings=tuple(notes),
    )


def fixed_point(lam: float, d: int, B: int) -> OccupancyVector:
    """Stationary tail ``q*_j = lam^((d^j - 1)/(d - 1))``; requires ``0 < lam < 1``."""
    if not 0 < lam < 1:
        raise ValueError(f"fixed point needs 0 < lambda < 1, got {lam}")
    if d < 2:
        raise ValueError("d must be at least 2")
    j = np.arange(B + 1, dtype=float)
    expo = (np.power(float(d), j) - 1.0) / (d - 1)
    return OccupancyVector(np.exp(expo * math.log(lam)))


def default_truncation(lam: float, d: int, floor: int = 20, eps: float = 1e-14) -> int:
    """Smallest ``j`` with ``q*_j < eps``, but at least ``floor``."""
    if not 0 < lam < 1:
        return floor
    j = 1
    while (d**j - 1) / (d - 1) * math.log(lam) >= math.log(eps):
        j += 1
    return max(j, floor)


# -- tagged queue limit ---------------------------------------------------


def _limit_intensity(a: float, b: float, d: int) -> float:
    # (a^d - b^d) / (a - b) written as sum_k a^k b^(d-1-k); equals d a^(d-1) at a == b
    total = 0.0
    for k in range(d):
        total += a**k * b ** (d - 1 - k)
    return total


def arrival_intensity_limit(x: int, q, d: int) -> float:
    """Limit acceptance weight ``d E[b(x, Y_2..Y_d)]`` for iid ``Y`` with tail ``q``.

    In closed form ``(q_x^d - q_{x+1}^d) / (q_x - q_{x+1})``, evaluated as the
    geometric sum ``sum_{k<d} q_x^k q_{x+1}^(d-1-k)``, which needs no separate
    branch when ``q_x = q_{x+1}``.
    """
    qa = q.q if isinstance(q, OccupancyVector) else np.asarray(q, dtype=float)
    if not 0 <= x <= qa.size - 2:
        raise ValueError(f"queue length {x} outside truncation range 0..{qa.size - 2}")
    return _limit_intensity(float(qa[x]), float(qa[x + 1]), d)


def limit_intensity_padded(x: int, q: np.ndarray, d: int) -> float:
    """As :func:`arrival_intensity_limit`, reading ``q_j = 0`` beyond the truncation."""
    B = q.size - 1
    a = q[x] if x <= B else 0.0
    b = q[x + 1] if x + 1 <= B else 0.0
    return _limit_intensity(float(a), float(b), d)


def sample_from_tail(q, size: int, rng: np.random.Generator) -> np.ndarray:
    """iid draws ``X = max{j : U < q_j}`` for uniform ``U``."""
    qa = q.q if isinstance(q, OccupancyVector) else np.asarray(q, dtype=float)
    _check_tail(qa, 0.0)
    u = rng.random(size)
    # q is non-increasing, so the count of j >= 1 with U < q_j is the max index
    return (u[:, None] < qa[None, 1:]).sum(axis=1).astype(np.int64)


def simulate_mkv_path(
    sol: OdeSolution,
    lam: float,
    d: int,
    T: float,
    x0,
    rng,
) -> list[tuple[float, int]]:
    """One path of the tagged-queue limit process on ``[0, T]``.

    Birth rate ``lam * C(x, q(t))`` and death rate ``1{x > 0}``, simulated by
    thinning a Poisson clock of rate ``lam*d + 1``. ``x0`` is either an initial
    queue length or an occupancy vector to draw it from. ``rng`` is a numpy
    Generator or any object with ``random()``. Returns ``(time, length)``
    pairs starting with ``(0, x0)``.
    """
    if sol.T < T - 1e-12:
        raise ValueError(f"ODE solution covers [0, {sol.T}] but T={T}")
    if isinstance(x0, (OccupancyVector, np.ndarray, list, tuple)):
        qa = x0.q if isinstance(x0, OccupancyVector) else np.asarray(x0, dtype=float)
        u = rng.random()
        x = int(np.sum(u < qa[1:]))
    else:
        x = int(x0)
    rate = lam * d + 1.0
    path = [(0.0, x)]
    t = 0.0
    while True:
        t += -math.log1p(-rng.random()) / rate
        if t > T:
            break
        u = rng.random() * rate
        birth = lam * limit_intensity_padded(x, sol.at(t), d)
        if u < birth:
            x += 1
        elif x > 0 and u < birth + 1.0:
            x -= 1
        else:
            continue
        path.append((t, x))
    return path


def path_value_at(path: Sequence[tuple[float, int]], t: float) -> int:
    """Value of a piecewise-constant path at time ``t``."""
    x = path[0][1]
    for s, v in path:
        if s > t:
            break
        x = v
    return x
