"""Collision-model ground truth and measurement-record generation.

The simulated experiment: a qubit system S is chained to a memory qubit S1,
which in turn collides with a stream of fresh reservoir qubits R.  Between
consecutive projective measurements of S the joint S+S1 pair undergoes a
fixed number of collisions; each measurement projects S in a freshly drawn
random basis and conditions the S1 state on the outcome.  The resulting
record of (basis, outcome) pairs is the only training input the learner
ever sees.

Measurement bases are eigenbases of r.sigma for r uniform on the sphere.
The draw order per step is fixed (three normals for the direction, then one
uniform for the outcome), so a seed pins the byte-exact dataset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import jsonio, seeds
from .errors import DataError, ZeroProbabilityError
from .qla import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    CMatrix,
    dagger,
    expm_unitary,
    hermitianize,
    kron,
    ptrace,
    unvec,
    vec,
)


def default_collision_hamiltonian() -> CMatrix:
    """Interaction on S x S1 x R used throughout: local fields on S and S1,
    a z-z system-memory coupling, and an isotropic 0.3-strength memory-
    reservoir exchange."""
    i2 = np.eye(2, dtype=np.complex128)
    h = (
        kron(SIGMA_Z, i2, i2)
        + kron(SIGMA_X, i2, i2)
        + kron(i2, SIGMA_Z, i2)
        + kron(i2, SIGMA_X, i2)
        + kron(SIGMA_Z, SIGMA_Z, i2)
        + 0.3 * kron(i2, SIGMA_Z, SIGMA_Z)
        + 0.3 * kron(i2, SIGMA_Y, SIGMA_Y)
        + 0.3 * kron(i2, SIGMA_X, SIGMA_X)
    )
    return h


@dataclass(frozen=True)
class CollisionModelConfig:
    """Ground-truth simulation parameters.

    Defaults: measurement period ``tau = 1``, five collisions per period of
    duration ``0.2 tau`` each, reservoir qubits in |0><0|, S+S1 starting in
    |00><00|.  ``delta_t=None`` resolves to ``0.2 * tau``.
    """

    tau: float = 1.0
    delta_t: float | None = None
    collisions_per_period: int = 5
    hamiltonian: CMatrix | None = field(default=None, repr=False)
    rho_r: CMatrix | None = field(default=None, repr=False)
    rho_ss1_0: CMatrix | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.delta_t is None:
            object.__setattr__(self, "delta_t", 0.2 * self.tau)
        if self.delta_t <= 0:
            raise ValueError(f"delta_t must be positive, got {self.delta_t}")
        if self.collisions_per_period < 1:
            raise ValueError("collisions_per_period must be >= 1")
        if self.hamiltonian is None:
            object.__setattr__(self, "hamiltonian", default_collision_hamiltonian())
        h = np.asarray(self.hamiltonian, dtype=np.complex128)
        if h.shape != (8, 8) or np.max(np.abs(h - dagger(h))) > 1e-10:
            raise ValueError("hamiltonian must be Hermitian 8x8 on S x S1 x R")
        object.__setattr__(self, "hamiltonian", h)
        if self.rho_r is None:
            object.__setattr__(self, "rho_r", 0.5 * (np.eye(2, dtype=np.complex128) + SIGMA_Z))
        if self.rho_ss1_0 is None:
            rho0 = np.zeros((4, 4), dtype=np.complex128)
            rho0[0, 0] = 1.0
            object.__setattr__(self, "rho_ss1_0", rho0)
        _check_density(np.asarray(self.rho_r, dtype=np.complex128), 2, "rho_r")
        _check_density(np.asarray(self.rho_ss1_0, dtype=np.complex128), 4, "rho_ss1_0")

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "delta_t": self.delta_t,
            "collisions_per_period": self.collisions_per_period,
            "hamiltonian": jsonio.matrix_to_pairs(self.hamiltonian),
            "rho_r": jsonio.matrix_to_pairs(self.rho_r),
            "rho_ss1_0": jsonio.matrix_to_pairs(self.rho_ss1_0),
        }

    def digest(self) -> str:
        return jsonio.config_hash(self.to_dict())


def _check_density(rho: CMatrix, side: int, name: str) -> None:
    if rho.shape != (side, side):
        raise ValueError(f"{name} must be {side}x{side}, got {rho.shape}")
    if np.max(np.abs(rho - dagger(rho))) > 1e-10:
        raise ValueError(f"{name} is not Hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-8:
        raise ValueError(f"{name} has trace {np.trace(rho)}")
    if np.linalg.eigvalsh(hermitianize(rho)).min() < -1e-10:
        raise ValueError(f"{name} is not positive semidefinite")


@dataclass(frozen=True)
class MeasurementRecord:
    """One projective measurement of S: step index (1-based), the 2x2
    unitary whose columns are the measured basis states, and the outcome
    column index."""

    step: int
    basis: CMatrix = field(repr=False)
    outcome: int


@dataclass
class Dataset:
    """A contiguous run of measurement records plus provenance.

    ``provenance`` carries the generating seed and config digest; datasets
    that should continue one another (train then validation) must agree on
    both.
    """

    records: list[MeasurementRecord]
    tau: float
    d_s: int
    provenance: dict

    def __len__(self) -> int:
        return len(self.records)


def collision_step(rho_ss1: CMatrix, cfg: CollisionModelConfig) -> CMatrix:
    """One collision: couple S+S1 to a fresh reservoir qubit for delta_t.

    Returns tr_R[exp(-i H dt) (rho x rho_r) exp(+i H dt)].
    """
    u = expm_unitary(cfg.hamiltonian, cfg.delta_t)
    joint = u @ kron(rho_ss1, cfg.rho_r) @ dagger(u)
    return ptrace(joint, [4, 2], [0])


def _collision_superoperator(cfg: CollisionModelConfig) -> CMatrix:
    """Column-stacking 16x16 matrix of one collision on S+S1."""
    u = expm_unitary(cfg.hamiltonian, cfg.delta_t)
    w, chi = np.linalg.eigh(hermitianize(cfg.rho_r))
    m = np.zeros((16, 16), dtype=np.complex128)
    u4 = u.reshape(4, 2, 4, 2)
    for k in range(2):
        if w[k] <= 1e-14:
            continue
        # Kraus family sqrt(w_k) (I x <j|) U (I x |chi_k>)
        kr = np.einsum("xjyk,k->jxy", u4, chi[:, k])
        for j in range(2):
            m += w[k] * np.kron(kr[j].conj(), kr[j])
    return m


def period_superoperator(cfg: CollisionModelConfig) -> CMatrix:
    """Map for one full measurement period: collisions_per_period collisions."""
    mc = _collision_superoperator(cfg)
    return np.linalg.matrix_power(mc, cfg.collisions_per_period)


def sample_measurement(rho_s: CMatrix, rng: np.random.Generator,
                       step: int = 1) -> tuple[MeasurementRecord, CMatrix]:
    """Projectively measure a qubit state in a random basis.

    The basis is the eigenbasis of r.sigma with r uniform on the sphere
    (normalized Gaussian 3-vector).  Returns the record and the projector
    onto the observed outcome.
    """
    if rho_s.shape != (2, 2):
        raise ValueError(f"expected a qubit state, got shape {rho_s.shape}")
    g = rng.standard_normal(3)
    r = g / np.linalg.norm(g)
    pol = r[0] * SIGMA_X + r[1] * SIGMA_Y + r[2] * SIGMA_Z
    _, basis = np.linalg.eigh(pol)
    probs = np.real(np.einsum("ik,ij,jk->k", basis.conj(), rho_s, basis))
    probs = np.clip(probs, 0.0, None)
    total = probs.sum()
    if total <= 0:
        raise ZeroProbabilityError(step)
    probs = probs / total
    outcome = 0 if rng.random() < probs[0] else 1
    phi = basis[:, outcome]
    projector = np.outer(phi, phi.conj())
    return MeasurementRecord(step=step, basis=basis, outcome=outcome), projector


def generate_trajectory(cfg: CollisionModelConfig, n: int, seed: int) -> Dataset:
    """Simulate ``n`` measured periods of the collision model.

    Per period: apply the collision superoperator, measure S in a fresh
    random basis, and condition the joint state on the outcome
    (S collapses onto the observed projector, S1 onto the renormalized
    post-measurement block).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seeds.stream(seed, "trajectory")
    mp = period_superoperator(cfg)
    v = vec(np.asarray(cfg.rho_ss1_0, dtype=np.complex128))
    records: list[MeasurementRecord] = []
    for i in range(1, n + 1):
        rho = hermitianize(unvec(mp @ v))
        rho_s = ptrace(rho, [2, 2], [0])
        rec, proj = sample_measurement(rho_s, rng, step=i)
        records.append(rec)
        phi = rec.basis[:, rec.outcome]
        # S1 block conditioned on the outcome, (<phi| x I) rho (|phi> x I)
        rho4 = rho.reshape(2, 2, 2, 2)
        block = np.einsum("s,setf,t->ef", phi.conj(), rho4, phi)
        tr = np.trace(block).real
        if tr <= 0:
            raise ZeroProbabilityError(i)
        v = vec(np.kron(proj, hermitianize(block) / tr))
    return Dataset(records=records, tau=cfg.tau, d_s=2,
                   provenance={"seed": int(seed), "config_hash": cfg.digest()})


def split_dataset(ds: Dataset, n_train: int) -> tuple[Dataset, Dataset]:
    """Cut one trajectory into a training prefix and validation remainder.

    Both halves keep the original step numbers and provenance, so the
    continuation requirement stays checkable.
    """
    if not 0 < n_train < len(ds):
        raise ValueError(f"n_train must be in (0, {len(ds)}), got {n_train}")
    head = Dataset(records=ds.records[:n_train], tau=ds.tau, d_s=ds.d_s,
                   provenance=dict(ds.provenance))
    tail = Dataset(records=ds.records[n_train:], tau=ds.tau, d_s=ds.d_s,
                   provenance=dict(ds.provenance))
    return head, tail


def dataset_prefix(ds: Dataset, n: int) -> Dataset:
    """First ``n`` records as a standalone dataset (shared provenance)."""
    if not 0 < n <= len(ds):
        raise ValueError(f"n must be in (0, {len(ds)}], got {n}")
    return Dataset(records=ds.records[:n], tau=ds.tau, d_s=ds.d_s,
                   provenance=dict(ds.provenance))


def validation_continuation(ds_train: Dataset, ds_val: Dataset, n: int) -> Dataset:
    """Held-out records that directly continue the first ``n`` training
    records: the training remainder first, then the validation split,
    capped at ``len(ds_val)`` records.  Lets scaling studies score a
    prefix fit without breaking the single-trajectory conditioning.
    """
    if not 0 < n <= len(ds_train):
        raise ValueError(f"n must be in (0, {len(ds_train)}], got {n}")
    total = list(ds_train.records) + list(ds_val.records)
    recs = total[n:min(n + len(ds_val), len(total))]
    return Dataset(records=recs, tau=ds_train.tau, d_s=ds_train.d_s,
                   provenance=dict(ds_train.provenance))


def exact_reference_dynamics(cfg: CollisionModelConfig,
                             periods: list[int]) -> tuple[list[CMatrix], list[CMatrix]]:
    """Unmeasured ground-truth states and dynamical maps at period counts.

    States propagate ``cfg.rho_ss1_0`` directly.  The maps take an S input
    through ``X -> tr_S1[period^k (X x rho_S1(0))]`` with the S1 marginal of
    the initial state held fixed; they are returned as 4x4 column-stacking
    superoperator matrices, one per entry of ``periods``.
    """
    if any(k < 0 for k in periods):
        raise ValueError("period counts must be nonnegative")
    mp = period_superoperator(cfg)
    rho_s1_0 = ptrace(np.asarray(cfg.rho_ss1_0, dtype=np.complex128), [2, 2], [1])

    # Propagate the state and a full operator basis of S inputs in lockstep.
    units = []
    for b in range(2):
        for a in range(2):
            e = np.zeros((2, 2), dtype=np.complex128)
            e[a, b] = 1.0
            units.append(vec(np.kron(e, rho_s1_0)))
    basis_vecs = np.stack(units, axis=1)  # 16 x 4, column b*2+a
    state_vec = vec(np.asarray(cfg.rho_ss1_0, dtype=np.complex128))

    states: list[CMatrix] = []
    channels: list[CMatrix] = []
    top = max(periods) if periods else 0
    cache_states: dict[int, CMatrix] = {}
    cache_maps: dict[int, CMatrix] = {}
    cur_state = state_vec.copy()
    cur_basis = basis_vecs.copy()
    cache_states[0] = cur_state.copy()
    cache_maps[0] = cur_basis.copy()
    for k in range(1, top + 1):
        cur_state = mp @ cur_state
        cur_basis = mp @ cur_basis
        cache_states[k] = cur_state.copy()
        cache_maps[k] = cur_basis.copy()
    for k in periods:
        states.append(hermitianize(ptrace(unvec(cache_states[k]), [2, 2], [0])))
        cols = cache_maps[k]
        m = np.zeros((4, 4), dtype=np.complex128)
        for c in range(4):
            m[:, c] = vec(ptrace(unvec(cols[:, c]), [2, 2], [0]))
        channels.append(m)
    return states, channels


def exact_controlled_dynamics(cfg: CollisionModelConfig, gate: CMatrix,
                              event_period: int, periods: list[int]) -> list[CMatrix]:
    """Ground-truth S states with an instantaneous gate on S at one period.

    The gate (a 2x2 unitary) hits the joint state right at the boundary of
    ``event_period``; requested times at that period already see the
    post-gate state.
    """
    if event_period < 0:
        raise ValueError("event_period must be nonnegative")
    gate = np.asarray(gate, dtype=np.complex128)
    if gate.shape != (2, 2) or np.max(np.abs(gate @ dagger(gate) - np.eye(2))) > 1e-10:
        raise ValueError("gate must be a 2x2 unitary")
    mp = period_superoperator(cfg)
    out: dict[int, CMatrix] = {}
    v = vec(np.asarray(cfg.rho_ss1_0, dtype=np.complex128))
    top = max(periods) if periods else 0
    for k in range(0, max(top, event_period) + 1):
        if k > 0:
            v = mp @ v
        if k == event_period:
            rho = unvec(v)
            g2 = np.kron(gate, np.eye(2, dtype=np.complex128))
            v = vec(g2 @ rho @ dagger(g2))
        if k in periods:
            out[k] = hermitianize(ptrace(unvec(v), [2, 2], [0]))
    return [out[k] for k in periods]


def true_model_log_likelihood(cfg: CollisionModelConfig, ds: Dataset) -> float:
    """Per-step log-likelihood of a record set under the generating model.

    Diagnostic ceiling for fitted models: runs the same propagate /
    measure / condition loop that produced the data and scores the recorded
    outcomes.
    """
    mp = period_superoperator(cfg)
    v = vec(np.asarray(cfg.rho_ss1_0, dtype=np.complex128))
    total = 0.0
    for rec in ds.records:
        rho = hermitianize(unvec(mp @ v))
        phi = rec.basis[:, rec.outcome]
        rho4 = rho.reshape(2, 2, 2, 2)
        block = np.einsum("s,setf,t->ef", phi.conj(), rho4, phi)
        p = np.trace(block).real
        if p <= 0:
            raise ZeroProbabilityError(rec.step)
        total += np.log(p)
        proj = np.outer(phi, phi.conj())
        v = vec(np.kron(proj, hermitianize(block) / p))
    return total / len(ds.records)


# ---------------------------------------------------------------------------
# Overfit oracle: n-partite environment built from the observed projectors.
# ---------------------------------------------------------------------------

def overfit_oracle(records: Dataset, rho_s0: CMatrix) -> tuple[float, float]:
    """Score the deliberately overfitted n-step environment model.

    The environment is one qubit per training record, prepared in the
    observed projectors; each period swaps the system with the first
    environment factor and cyclically shifts the rest.  On the training
    half every outcome then has probability exactly 1 (the system state
    *is* the recorded projector, analytically), so the training
    log-likelihood is exactly 0.0.  The validation half reduces to a
    product of two-projector overlaps.

    Returns (training log-likelihood, validation per-step log-likelihood).
    """
    recs = records.records
    if len(recs) % 2 != 0 or not recs:
        raise DataError(f"need an even record count to split in half, got {len(recs)}")
    n = len(recs) // 2
    projs = []
    for rec in recs:
        phi = rec.basis[:, rec.outcome]
        projs.append(np.outer(phi, phi.conj()))

    # Product-state bookkeeping: a factor is either ("rec", i), meaning the
    # projector of record i, or ("mat", rho).  SWAP then SHIFT amounts to:
    # the first environment factor becomes the system, the collapsed system
    # is appended at the back.
    system: tuple = ("mat", np.asarray(rho_s0, dtype=np.complex128))
    env: list[tuple] = [("rec", i) for i in range(n)]
    train_ll = 0.0
    val_sum = 0.0
    for i, rec in enumerate(recs):
        new_system = env.pop(0)
        env.append(system)
        if new_system[0] == "rec" and new_system[1] == i:
            p = 1.0  # same projector on both sides, exact by construction
        else:
            phi = rec.basis[:, rec.outcome]
            if new_system[0] == "rec":
                rho = projs[new_system[1]]
            else:
                rho = new_system[1]
            p = float(np.real(phi.conj() @ rho @ phi))
            if p <= 0.0:
                raise ZeroProbabilityError(rec.step)
        if i < n:
            train_ll += 0.0 if p == 1.0 else np.log(p)
        else:
            val_sum += np.log(p)
        system = ("rec", i)
    return train_ll, val_sum / n


# ---------------------------------------------------------------------------
# JSONL persistence.
# ---------------------------------------------------------------------------

def save_dataset(ds: Dataset, path) -> None:
    """Write header + one record per line; byte-stable for a fixed dataset."""
    header = {
        "tau": ds.tau,
        "d_s": ds.d_s,
        "seed": ds.provenance.get("seed"),
        "config_hash": ds.provenance.get("config_hash"),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(jsonio.canonical_dumps(header) + "\n")
        for rec in ds.records:
            line = {
                "step": rec.step,
                "basis": jsonio.matrix_to_pairs(rec.basis),
                "outcome": rec.outcome,
            }
            fh.write(jsonio.canonical_dumps(line) + "\n")


def load_dataset(path) -> Dataset:
    """Read a JSONL dataset; structure and basis unitarity are re-checked."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty dataset file")
    try:
        header = json.loads(lines[0])
        tau = float(header["tau"])
        d_s = int(header["d_s"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: bad header line: {exc}") from exc
    records = []
    prev_step = None
    for ln in lines[1:]:
        try:
            obj = json.loads(ln)
            step = int(obj["step"])
            basis = jsonio.pairs_to_matrix(obj["basis"], d_s, d_s)
            outcome = int(obj["outcome"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: bad record line: {exc}") from exc
        if prev_step is not None and step != prev_step + 1:
            raise DataError(f"{path}: steps must be contiguous, {prev_step} -> {step}")
        prev_step = step
        if not 0 <= outcome < d_s:
            raise DataError(f"{path}: outcome {outcome} out of range at step {step}")
        if np.max(np.abs(basis.conj().T @ basis - np.eye(d_s))) > 1e-8:
            raise DataError(f"{path}: basis at step {step} is not unitary")
        records.append(MeasurementRecord(step=step, basis=basis, outcome=outcome))
    if not records:
        raise DataError(f"{path}: no records")
    return Dataset(records=records, tau=tau, d_s=d_s,
                   provenance={"seed": header.get("seed"),
                               "config_hash": header.get("config_hash")})
