"""Fit embeddings of two reservoir sizes and let validation pick one.

To keep the run under a minute the ground truth here is memoryless: the
collision Hamiltonian is replaced by a pure system term, so the reduced
dynamics is exactly unitary and a trivial reservoir (d_er = 1) suffices.
Validation likelihood correctly refuses to pay for the extra dimension.
On the full collision model the same sweep selects d_er = 2; see the
command-line `train` subcommand or tests/test_acceptance.py for that run.
"""
import numpy as np

from embedlearn.datagen import (CollisionModelConfig, generate_trajectory,
                                split_dataset, true_model_log_likelihood)
from embedlearn.qla import SIGMA_X, kron
from embedlearn.train import TrainConfig, select_d_er

cfg = CollisionModelConfig(
    hamiltonian=kron(0.3 * SIGMA_X, np.eye(4, dtype=np.complex128)))
ds = generate_trajectory(cfg, 800, seed=77)
train, val = split_dataset(ds, 400)
truth = true_model_log_likelihood(cfg, train)
print(f"400 training / 400 validation records; "
      f"generating-model per-step ll {truth:.4f}")


tc = TrainConfig(d_er=1, epochs=300, batch_size=400, seed=3, restarts=1,
                 convergence_window=60, convergence_tol=1e-4, val_every=25)
print("\nfitting candidates d_er = 1, 2 ...")
best, table, models = select_d_er(train, val, [1, 2], tc)
print("\nd_er  validation per-step ll")
for k, v in table:
    mark = "  <- selected" if k == best else ""
    print(f"{k:4d}  {v:+.5f}{mark}")
print(f"\nparameter counts: d_er=1 -> {8 ** 2}, d_er=2 -> {64 ** 2} "
      f"(Hermitian generator on system x reservoir x ancilla)")
print("the larger reservoir buys nothing here, so validation rejects it")
