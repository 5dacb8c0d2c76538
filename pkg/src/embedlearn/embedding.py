"""Markovian embedding models and their induced dynamics.

A model is a finite system + effective-reservoir space evolved by the
channel of one measurement period: a joint unitary exp(-i H tau) on
system x reservoir x ancilla, with the ancilla prepared in a fixed pure
state and traced out afterward.  The ancilla dimension ``(d_s*d_er)**2``
makes every channel on the joint space reachable, so Hermitian H is the
only free object and complete positivity holds by construction.

The continuous-time picture comes from the principal logarithm of the
period channel; that extraction fails loudly when the logarithm is
ambiguous (see :func:`embedlearn.qla.logm_principal`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import jsonio
from .errors import FixedPointError
from .qla import (
    CMatrix,
    DimSpec,
    dagger,
    expm_unitary,
    hermitianize,
    kron,
    logm_principal,
    ptrace,
    unvec,
    vec,
)

PSD_TOL = 1e-10


@dataclass(frozen=True)
class MarkovianEmbedding:
    """Embedding model: dimensions, period, Hamiltonian, initial states.

    ``h`` is Hermitian on the full dilation space (side ``dims.d_total``),
    ``rho0_ser`` is the joint system + reservoir state the measured
    trajectory starts from, and ``rho_a`` is the fixed pure ancilla state
    consumed by every period.
    """

    dims: DimSpec
    tau: float
    h: CMatrix = field(repr=False)
    rho0_ser: CMatrix = field(repr=False)
    rho_a: CMatrix = field(repr=False)

    def unitary(self) -> CMatrix:
        """Period unitary exp(-i H tau)."""
        return expm_unitary(self.h, self.tau)

    def with_h(self, h: CMatrix) -> "MarkovianEmbedding":
        return replace(self, h=h)


@dataclass(frozen=True)
class GeneratorSuperoperator:
    """Time-independent generator L with exp(tau L) = period channel.

    ``matrix`` acts on column-stacked density matrices of the joint
    system + reservoir space.
    """

    matrix: CMatrix = field(repr=False)
    tau: float = 1.0


def make_embedding(dims: DimSpec, tau: float, h: CMatrix, rho0_ser: CMatrix,
                   rho_a: CMatrix | None = None) -> MarkovianEmbedding:
    """Assemble a model, defaulting the ancilla to |0><0|, and validate it."""
    if rho_a is None:
        rho_a = np.zeros((dims.d_a, dims.d_a), dtype=np.complex128)
        rho_a[0, 0] = 1.0
    model = MarkovianEmbedding(dims=dims, tau=float(tau), h=np.asarray(h, dtype=np.complex128),
                               rho0_ser=np.asarray(rho0_ser, dtype=np.complex128),
                               rho_a=np.asarray(rho_a, dtype=np.complex128))
    validate_model(model)
    return model


def validate_model(model: MarkovianEmbedding) -> None:
    """Check every structural invariant; raises ValueError on the first hit."""
    dims = model.dims
    if model.tau <= 0:
        raise ValueError(f"tau must be positive, got {model.tau}")
    if model.h.shape != (dims.d_total, dims.d_total):
        raise ValueError(f"h has shape {model.h.shape}, expected side {dims.d_total}")
    dev = np.max(np.abs(model.h - dagger(model.h)))
    if dev > 1e-10:
        raise ValueError(f"h is not Hermitian: max deviation {dev:.3e}")
    _check_state(model.rho0_ser, dims.d, "rho0_ser")
    _check_state(model.rho_a, dims.d_a, "rho_a")
    purity = np.max(np.abs(model.rho_a @ model.rho_a - model.rho_a))
    if purity > 1e-8:
        raise ValueError(f"rho_a is not pure: ||rho^2 - rho|| = {purity:.3e}")


def _check_state(rho: CMatrix, side: int, name: str) -> None:
    if rho.shape != (side, side):
        raise ValueError(f"{name} has shape {rho.shape}, expected side {side}")
    if np.max(np.abs(rho - dagger(rho))) > 1e-10:
        raise ValueError(f"{name} is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-8 or abs(np.trace(rho).imag) > 1e-10:
        raise ValueError(f"{name} has trace {np.trace(rho)}, expected 1")
    if np.linalg.eigvalsh(hermitianize(rho)).min() < -1e-8:
        raise ValueError(f"{name} is not positive semidefinite")


def ancilla_vector(model: MarkovianEmbedding) -> CMatrix:
    """State vector of the pure ancilla, phase-fixed by its largest entry."""
    w, v = np.linalg.eigh(hermitianize(model.rho_a))
    vec_a = v[:, -1]
    pivot = np.argmax(np.abs(vec_a))
    vec_a = vec_a * np.exp(-1j * np.angle(vec_a[pivot]))
    return vec_a


def apply_channel(model: MarkovianEmbedding, rho: CMatrix) -> CMatrix:
    """One period of the embedded dynamics: tr_A[U (rho x rho_a) U+]."""
    d, d_a = model.dims.d, model.dims.d_a
    if rho.shape != (d, d):
        raise ValueError(f"state has shape {rho.shape}, expected side {d}")
    u = model.unitary()
    joint = u @ kron(rho, model.rho_a) @ dagger(u)
    return ptrace(joint, [d, d_a], [0])


def apply_dual(model: MarkovianEmbedding, effect: CMatrix) -> CMatrix:
    """Heisenberg-picture dual: tr_A[U+ (E x I_A) U (I x rho_a)]."""
    d, d_a = model.dims.d, model.dims.d_a
    if effect.shape != (d, d):
        raise ValueError(f"effect has shape {effect.shape}, expected side {d}")
    u = model.unitary()
    lifted = dagger(u) @ kron(effect, np.eye(d_a)) @ u @ kron(np.eye(d), model.rho_a)
    return ptrace(lifted, [d, d_a], [0])


def kraus_stack(model: MarkovianEmbedding, u: CMatrix | None = None) -> CMatrix:
    """Kraus operators of the period channel, stacked along axis 0.

    K_j = (I x <j|_A) U (I x |a>_A); there are d_a of them, each d x d.
    """
    d, d_a = model.dims.d, model.dims.d_a
    if u is None:
        u = model.unitary()
    a = ancilla_vector(model)
    u4 = u.reshape(d, d_a, d, d_a)
    return np.einsum("xjyk,k->jxy", u4, a)


def superoperator_matrix(model: MarkovianEmbedding, u: CMatrix | None = None) -> CMatrix:
    """Column-stacking matrix of the period channel, side (d_s*d_er)**2.

    Built from the Kraus stack: sum_j conj(K_j) x K_j.
    """
    ks = kraus_stack(model, u)
    d = model.dims.d
    m = np.einsum("jpr,jqs->pqrs", ks.conj(), ks, optimize=True)
    return m.reshape(d * d, d * d)


def extract_generator(model: MarkovianEmbedding) -> GeneratorSuperoperator:
    """Generator L = log(channel)/tau via the principal matrix logarithm."""
    m = superoperator_matrix(model)
    return GeneratorSuperoperator(matrix=logm_principal(m) / model.tau, tau=model.tau)


def _fixed_point(channel_matrix: CMatrix) -> CMatrix:
    """Unique trace-one fixed point of a channel's superoperator matrix.

    Uniqueness requirement: second-largest eigenvalue modulus below
    1 - 1e-8; otherwise the equilibrium is ill-defined and
    :class:`FixedPointError` is raised.
    """
    w, v = np.linalg.eig(channel_matrix)
    order = np.argsort(-np.abs(w))
    moduli = np.abs(w[order])
    if len(moduli) > 1 and moduli[1] >= 1.0 - 1e-8:
        raise FixedPointError((float(moduli[0]), float(moduli[1])))
    rho = unvec(v[:, order[0]])
    rho = hermitianize(rho)
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise FixedPointError((float(moduli[0]), float(moduli[1])))
    return rho / tr


def equilibrium_er_state(gen: GeneratorSuperoperator, dims: DimSpec) -> CMatrix:
    """Reservoir marginal of the stationary state of exp(tau L).

    A one-dimensional reservoir has the trivial marginal regardless of
    whether the joint stationary state is unique.
    """
    if dims.d_er == 1:
        return np.ones((1, 1), dtype=np.complex128)
    channel = scipy.linalg.expm(gen.tau * gen.matrix)
    rho_inf = _fixed_point(channel)
    return ptrace(rho_inf, [dims.d_s, dims.d_er], [1])


def predict_dynamics(gen: GeneratorSuperoperator, dims: DimSpec, rho_ser0: CMatrix,
                     times: list[float]) -> list[CMatrix]:
    """System states tr_ER[exp(t L) rho_ser0] at the requested times.

    Output states are symmetrized against roundoff drift; trace and
    positivity are up to the quality of the generator, not enforced.
    """
    v0 = vec(rho_ser0)
    out = []
    for t in times:
        if t < 0:
            raise ValueError(f"times must be nonnegative, got {t}")
        vt = scipy.linalg.expm(float(t) * gen.matrix) @ v0
        rho = hermitianize(unvec(vt))
        out.append(ptrace(rho, [dims.d_s, dims.d_er], [0]))
    return out


# ---------------------------------------------------------------------------
# Model (de)serialization: one JSON object, matrices as [re, im] pairs.
# ---------------------------------------------------------------------------

def model_to_dict(model: MarkovianEmbedding) -> dict:
    return {
        "dims": {"d_s": model.dims.d_s, "d_er": model.dims.d_er, "d_a": model.dims.d_a},
        "tau": model.tau,
        "h": jsonio.matrix_to_pairs(model.h),
        "rho0_ser": jsonio.matrix_to_pairs(model.rho0_ser),
        "rho_a": jsonio.matrix_to_pairs(model.rho_a),
    }


def model_from_dict(obj: dict) -> MarkovianEmbedding:
    dims = DimSpec(d_s=int(obj["dims"]["d_s"]), d_er=int(obj["dims"]["d_er"]),
                   d_a=int(obj["dims"]["d_a"]))
    h = jsonio.pairs_to_matrix(obj["h"], dims.d_total, dims.d_total)
    rho0 = jsonio.pairs_to_matrix(obj["rho0_ser"], dims.d, dims.d)
    rho_a = jsonio.pairs_to_matrix(obj["rho_a"], dims.d_a, dims.d_a)
    return make_embedding(dims, float(obj["tau"]), h, rho0, rho_a)


def save_model(model: MarkovianEmbedding, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path) -> MarkovianEmbedding:
    """Read a model back; every structural invariant is re-validated."""
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
