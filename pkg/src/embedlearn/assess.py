"""Model assessment: process matrices, tomography baseline, control tests.

Everything a fitted embedding is judged by lives here: Choi matrices of its
reduced dynamical maps against exact references, a standard process-
tomography pipeline run on the same measurement budget, and predictions
under instantaneous coherent gates, where the embedding's joint
system-reservoir state is exactly what a naive concatenation of reduced
maps lacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .embedding import GeneratorSuperoperator
from .errors import IllConditionedError, NumericalError
from .qla import CMatrix, DimSpec, dagger, hermitianize, ptrace, trace_norm, unvec, vec

POSITIVITY_TOL = 1e-8


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi state of a map on a d-dimensional system, output factor first.

    Normalized as the image of the maximally entangled state: trace one,
    and the partial trace over the output factor is I/d for a trace-
    preserving map.
    """

    matrix: CMatrix = field(repr=False)
    d: int

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(hermitianize(self.matrix)).min())

    def output_partial_trace_deviation(self) -> float:
        red = ptrace(self.matrix, [self.d, self.d], [1])
        return float(np.max(np.abs(red - np.eye(self.d) / self.d)))


def choi_of_map(apply, d: int) -> ChoiMatrix:
    """Choi matrix of a callable channel via its action on matrix units."""
    omega = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[i, j] = 1.0
            omega += np.kron(np.asarray(apply(e), dtype=np.complex128), e)
    return ChoiMatrix(matrix=omega / d, d=d)


def choi_from_superop(m: CMatrix, d: int) -> ChoiMatrix:
    """Choi matrix from a column-stacking superoperator matrix."""
    m4 = np.asarray(m, dtype=np.complex128).reshape(d, d, d, d)
    omega = m4.transpose(1, 3, 0, 2).reshape(d * d, d * d) / d
    return ChoiMatrix(matrix=omega, d=d)


def choi_to_superop(choi: ChoiMatrix) -> CMatrix:
    """Inverse of :func:`choi_from_superop`."""
    d = choi.d
    o4 = choi.matrix.reshape(d, d, d, d)
    return d * o4.transpose(2, 0, 3, 1).reshape(d * d, d * d)


def apply_choi(choi: ChoiMatrix, rho: CMatrix) -> CMatrix:
    """Channel action d * tr_in[Omega (I x rho^T)]."""
    d = choi.d
    o4 = choi.matrix.reshape(d, d, d, d)
    return d * np.einsum("aibj,ij->ab", o4,
                         np.asarray(rho, dtype=np.complex128))


def dynamics_maps(gen: GeneratorSuperoperator, dims: DimSpec, rho_er0: CMatrix,
                  times: list[float]) -> list[ChoiMatrix]:
    """Reduced dynamical maps of an embedding at the given times.

    Each map sends an S input through x -> tr_ER[exp(t L)(x tensor
    rho_er0)]; maps are returned as Choi matrices on S.
    """
    d_s, d_er = dims.d_s, dims.d_er
    d = dims.d
    cols = []
    for j in range(d_s):
        for i in range(d_s):
            e = np.zeros((d_s, d_s), dtype=np.complex128)
            e[i, j] = 1.0
            cols.append(vec(np.kron(e, rho_er0)))
    basis = np.stack(cols, axis=1)  # d^2 x d_s^2, column j*d_s+i
    out = []
    for t in times:
        if t < 0:
            raise ValueError(f"times must be nonnegative, got {t}")
        prop = scipy.linalg.expm(float(t) * gen.matrix) @ basis
        m = np.zeros((d_s * d_s, d_s * d_s), dtype=np.complex128)
        for c in range(d_s * d_s):
            joint = unvec(prop[:, c], d)
            m[:, c] = vec(ptrace(joint, [d_s, d_er], [0]))
        out.append(choi_from_superop(m, d_s))
    return out


def average_choi_error(chois_a: list[ChoiMatrix], chois_b: list[ChoiMatrix]) -> float:
    """Mean half-trace-norm distance over paired times, (1/2K) sum |a - b|_1."""
    if len(chois_a) != len(chois_b):
        raise ValueError(f"time grids differ: {len(chois_a)} vs {len(chois_b)}")
    if not chois_a:
        raise ValueError("empty time grid")
    total = 0.0
    for ca, cb in zip(chois_a, chois_b):
        if ca.d != cb.d:
            raise ValueError("Choi dimensions differ")
        total += trace_norm(ca.matrix - cb.matrix)
    return total / (2.0 * len(chois_a))


# ---------------------------------------------------------------------------
# Process tomography on the same measurement budget.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TomographyDesign:
    """Input states and POVM effects probed per channel, plus the shot
    budget for that channel."""

    input_states: list[CMatrix] = field(repr=False)
    povm: list[CMatrix] = field(repr=False)
    shots: int = 1000


def default_design(shots: int) -> TomographyDesign:
    """Four-state informationally complete design.

    Inputs: |0><0|, |1><1|, |+><+|, and the +y eigenstate.  POVM: each
    input state and its complement, all weighted 1/4, eight effects total.
    """
    zero = np.array([[1, 0], [0, 0]], dtype=np.complex128)
    one = np.array([[0, 0], [0, 1]], dtype=np.complex128)
    plus = 0.5 * np.array([[1, 1], [1, 1]], dtype=np.complex128)
    plus_y = 0.5 * np.array([[1, -1j], [1j, 1]], dtype=np.complex128)
    inputs = [zero, one, plus, plus_y]
    povm = []
    for rho in inputs:
        povm.append(rho / 4.0)
        povm.append((np.eye(2, dtype=np.complex128) - rho) / 4.0)
    return TomographyDesign(input_states=inputs, povm=povm, shots=shots)


def outcome_probabilities(channel_superop: CMatrix, design: TomographyDesign) -> np.ndarray:
    """p[j, k] = tr[channel(rho_j) F_k]; rows sum to one."""
    n_in, n_out = len(design.input_states), len(design.povm)
    p = np.zeros((n_in, n_out))
    for j, rho in enumerate(design.input_states):
        out = unvec(channel_superop @ vec(rho))
        for k, eff in enumerate(design.povm):
            p[j, k] = max(np.einsum("ab,ba->", eff, out).real, 0.0)
        p[j] /= p[j].sum()
    return p


def simulate_tomography_counts(channel_superop: CMatrix, design: TomographyDesign,
                               rng: np.random.Generator) -> np.ndarray:
    """Finite-shot counts: inputs drawn uniformly, outcomes per Born rule.

    Returns an integer array of shape (inputs, effects) summing to
    ``design.shots``.
    """
    n_in = len(design.input_states)
    probs = outcome_probabilities(channel_superop, design)
    per_input = rng.multinomial(design.shots, np.full(n_in, 1.0 / n_in))
    counts = np.zeros_like(probs, dtype=np.int64)
    for j in range(n_in):
        if per_input[j] > 0:
            counts[j] = rng.multinomial(per_input[j], probs[j])
    return counts


def tomography_mle(counts: np.ndarray, design: TomographyDesign,
                   tol: float = 1e-10, max_iter: int = 200_000) -> ChoiMatrix:
    """Maximum-likelihood channel estimate under the CPTP constraint.

    Fixed-point iteration on the Choi matrix: Omega <- N[(I x L^-1/2) R
    Omega R (I x L^-1/2)] with R the likelihood-weighted effect sum and L
    the constraint multiplier; the step is diluted toward the identity
    whenever the log-likelihood would decrease.  Starts from the maximally
    mixed Choi and stops when the per-iteration gain drops below ``tol``.
    """
    d = design.input_states[0].shape[0]
    side = d * d
    s_ops = []
    for j, rho in enumerate(design.input_states):
        for k, eff in enumerate(design.povm):
            s_ops.append(np.kron(eff, rho.T))
    s_ops = np.stack(s_ops)  # (J*K, side, side)
    flat_counts = np.asarray(counts, dtype=np.float64).ravel()

    def probs(omega: CMatrix) -> np.ndarray:
        raw = d * np.einsum("nab,ba->n", s_ops, omega).real
        return np.clip(raw, 1e-300, None)

    def loglik(omega: CMatrix) -> float:
        return float(flat_counts @ np.log(probs(omega)))

    omega = np.eye(side, dtype=np.complex128) / side
    current = loglik(omega)
    identity = np.eye(side, dtype=np.complex128)
    for _ in range(max_iter):
        p = probs(omega)
        r = np.einsum("n,nab->ab", flat_counts / p, s_ops)
        r = hermitianize(r)
        step = 1.0
        while True:
            r_mix = step * r / flat_counts.sum() + (1.0 - step) * identity
            k = r_mix @ omega @ r_mix
            lam = ptrace(k, [d, d], [1])
            w, v = np.linalg.eigh(hermitianize(lam))
            if w.min() <= 1e-15:
                raise NumericalError("tomography constraint multiplier is singular")
            lam_isqrt = (v / np.sqrt(w)) @ v.conj().T
            proj = np.kron(np.eye(d, dtype=np.complex128), lam_isqrt)
            cand = proj @ k @ proj / d
            cand = hermitianize(cand)
            new = loglik(cand)
            if new >= current - 1e-12 or step < 1e-6:
                break
            step *= 0.5
        gain = new - current
        omega, current = cand, new
        if abs(gain) < tol:
            return ChoiMatrix(matrix=omega, d=d)
    raise NumericalError(f"tomography MLE did not converge in {max_iter} iterations")


# ---------------------------------------------------------------------------
# Instantaneous coherent control.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ControlEvent:
    """Instantaneous gate on the system at one time."""

    time: float
    gate: CMatrix = field(repr=False)


def predict_with_control(gen: GeneratorSuperoperator, dims: DimSpec,
                         rho_ser0: CMatrix, events: list[ControlEvent],
                         times: list[float]) -> list[CMatrix]:
    """Embedding prediction with gates applied to the joint state.

    Between breakpoints the state follows exp(dt L); at an event time the
    gate acts as V x I on system x reservoir.  A requested time that
    coincides with an event reports the post-gate state.
    """
    d_s, d_er = dims.d_s, dims.d_er
    ev = sorted(events, key=lambda e: e.time)
    for e in ev:
        g = np.asarray(e.gate, dtype=np.complex128)
        if g.shape != (d_s, d_s) or np.max(np.abs(g @ dagger(g) - np.eye(d_s))) > 1e-10:
            raise ValueError(f"gate at t={e.time} is not a {d_s}x{d_s} unitary")
        if e.time < 0:
            raise ValueError("event times must be nonnegative")
    if any(t < 0 for t in times):
        raise ValueError("times must be nonnegative")
    order = np.argsort(times)
    v = vec(np.asarray(rho_ser0, dtype=np.complex128))
    now = 0.0
    ev_idx = 0
    results: dict[int, CMatrix] = {}
    for pos in order:
        t = float(times[pos])
        while ev_idx < len(ev) and ev[ev_idx].time <= t:
            e = ev[ev_idx]
            if e.time > now:
                v = scipy.linalg.expm((e.time - now) * gen.matrix) @ v
                now = e.time
            g = np.kron(np.asarray(e.gate, dtype=np.complex128),
                        np.eye(d_er, dtype=np.complex128))
            v = vec(g @ unvec(v) @ dagger(g))
            ev_idx += 1
        if t > now:
            v = scipy.linalg.expm((t - now) * gen.matrix) @ v
            now = t
        rho = hermitianize(unvec(v))
        results[pos] = ptrace(rho, [d_s, d_er], [0])
    return [results[i] for i in range(len(times))]


def concatenation_prediction(times: list[float], superops: list[CMatrix],
                             event: ControlEvent, rho_s0: CMatrix
                             ) -> tuple[list[CMatrix], list[bool]]:
    """Memoryless baseline: stitch exact reduced maps across the gate.

    Before the gate the exact map applies directly; from the gate time on,
    the prediction is map(t) o map(t')^{-1} applied to the gated state.
    Without access to system-reservoir correlations this composition can
    leave the state space; outputs are returned as-is together with a
    per-time positivity-violation flag (min eigenvalue < -1e-8).

    ``event.time`` must be one of ``times``; the inverse map must have
    condition number at most 1e8.
    """
    if len(times) != len(superops):
        raise ValueError("times and superops must pair up")
    matches = [i for i, t in enumerate(times) if abs(t - event.time) < 1e-12]
    if not matches:
        raise ValueError(f"event time {event.time} is not on the time grid")
    m_at = superops[matches[0]]
    cond = np.linalg.cond(m_at)
    if not np.isfinite(cond) or cond > 1e8:
        raise IllConditionedError(float(cond))
    gate = np.asarray(event.gate, dtype=np.complex128)
    gated = gate @ unvec(m_at @ vec(rho_s0)) @ dagger(gate)
    seed_vec = np.linalg.solve(m_at, vec(gated))
    states: list[CMatrix] = []
    flags: list[bool] = []
    for t, m in zip(times, superops):
        if t < event.time:
            rho = unvec(m @ vec(rho_s0))
        else:
            rho = unvec(m @ seed_vec)
        rho = hermitianize(rho)
        states.append(rho)
        flags.append(bool(np.linalg.eigvalsh(rho).min() < -POSITIVITY_TOL))
    return states, flags


def trace_distance_trajectory(states_a: list[CMatrix],
                              states_b: list[CMatrix]) -> np.ndarray:
    """Half trace-norm distance per paired time."""
    if len(states_a) != len(states_b):
        raise ValueError("trajectories differ in length")
    return np.array([0.5 * trace_norm(a - b) for a, b in zip(states_a, states_b)])


def nonmonotonicity_flag(distances: np.ndarray, tol: float = 1e-6) -> bool:
    """True when the distance sequence ever grows by more than ``tol``:
    the information-backflow signature of non-Markovian reduced dynamics."""
    d = np.asarray(distances, dtype=float)
    return bool(np.any(np.diff(d) > tol))
