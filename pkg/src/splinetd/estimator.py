"""Recursive least-squares estimators over the constrained coefficient space.

Three update rules share one state (coefficients c, covariance P):

* plain RLS on targets y,
* RLSTD on one-step temporal differences, where the covariance shrinks along
  the difference regressor delta = row_t - gamma * row_{t+1} and the
  coefficient step uses the pre-update covariance gain P x / q,
* RLSTD with directional forgetting, which adds beta2 * (Z x)(Z x)^T to the
  covariance each step and applies the post-update covariance in the
  coefficient step so the forgetting acts immediately.

The recursions are implemented exactly as written: for the TD rules the
rank-one covariance term P x delta^T P is genuinely asymmetric and P is kept
that way.  (Symmetrizing P after each step looks like harmless hygiene but
demonstrably breaks the convergence of the TD recursion to the fixed point
of the projected Bellman equation; see the Markov-chain oracle tests.)

Initializing P = beta1 * Z and sandwiching the forgetting term with the
null-space projector Z keeps every covariance column and row inside the
feasible subspace, so H c = 0 is preserved by construction for all three
rules.

Regressors are sparse (one simplex block); products with P use index
gathers and the covariance update is a single BLAS rank-one call, which
keeps the per-step cost at a few passes over P.
"""

from __future__ import annotations

import json

import numpy as np
from scipy.linalg import blas

from .continuity import NullSpaceProjector
from .errors import EstimatorDiverged, InvalidParam, NumericalFailure
from .spline import BasisRow, SplineSpace

# Update denominators smaller than this indicate a numerically broken state.
DENOMINATOR_TOL = 1e-12

# Coefficient sup-norm beyond which a learning run is declared divergent.
DIVERGENCE_LIMIT = 1e9


class FlatSpace:
    """Identity feature space: k unconstrained coefficients, regressors are
    arbitrary k-vectors.  Lets the estimators run outside a spline context
    (unit problems, tabular Markov chains)."""

    def __init__(self, size: int):
        if size < 1:
            raise InvalidParam(f"feature size must be >= 1, got {size}")
        self.ahat = int(size)

    def content_hash(self) -> str:
        return f"flat:{self.ahat}"


class Estimator:
    """Owns the coefficient vector and covariance of one learning agent.

    Not thread-safe; concurrent experiment replicas must each own an
    instance.  ``c`` is mutated in place, so spline functions wrapping it
    observe updates without rebinding.
    """

    def __init__(self, space: SplineSpace | FlatSpace, projector: NullSpaceProjector,
                 beta1: float, gamma: float = 0.98, beta2: float = 0.0):
        if beta1 <= 0:
            raise InvalidParam(f"beta1 must be > 0, got {beta1}")
        if not 0 <= gamma < 1:
            raise InvalidParam(f"gamma must be in [0, 1), got {gamma}")
        if beta2 < 0:
            raise InvalidParam(f"beta2 must be >= 0, got {beta2}")
        if projector.Z.shape != (space.ahat, space.ahat):
            raise InvalidParam("projector size does not match the spline space")
        self.space = space
        self.projector = projector
        self.gamma = float(gamma)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.c = np.zeros(space.ahat)
        self._P = np.asfortranarray(beta1 * projector.Z)
        self.step_count = 0

    # -- state access -------------------------------------------------------------

    @property
    def P(self) -> np.ndarray:
        """Copy of the covariance matrix (asymmetric under the TD rules)."""
        return self._P.copy()

    @property
    def Z(self) -> np.ndarray:
        return self.projector.Z

    def value_function(self):
        from .spline import SplineFunction

        return SplineFunction(self.space, self.c)

    # -- update rules ---------------------------------------------------------------

    def rls_update(self, row, y: float) -> None:
        """One recursive least-squares step on the sample (row, y)."""
        idx, vals = self._as_sparse(row)
        if not np.isfinite(y):
            raise NumericalFailure(f"non-finite target at step {self.step_count}")
        P = self._P
        Px = P[:, idx] @ vals
        xP = vals @ P[idx, :]
        denom = 1.0 + float(Px[idx] @ vals)
        self._check_denominator(denom)
        e = y - float(self.c[idx] @ vals)
        # Coefficient gain uses the post-update covariance; its action on x
        # collapses to Px/denom.
        self.c += (Px / denom) * e
        self._P = blas.dger(-1.0 / denom, Px, xP, a=P, overwrite_a=1)
        self._finish_step()

    def rlstd_update(self, row_t, row_next, reward: float) -> None:
        """Temporal-difference RLS step; coefficient gain from the pre-update
        covariance."""
        idx, vals, e, Px, dP, q = self._td_core(row_t, row_next, reward)
        self.c += (Px / q) * e
        self._P = blas.dger(-1.0 / q, Px, dP, a=self._P, overwrite_a=1)
        self._finish_step()

    def rlstd_forget_update(self, row_t, row_next, reward: float) -> None:
        """Temporal-difference step with continuity-preserving directional
        forgetting; coefficient gain from the post-update covariance."""
        idx, vals, e, Px, dP, q = self._td_core(row_t, row_next, reward)
        self._P = blas.dger(-1.0 / q, Px, dP, a=self._P, overwrite_a=1)
        if self.beta2 != 0.0:
            Zx = self.projector.Z[:, idx] @ vals
            self._P = blas.dger(self.beta2, Zx, Zx, a=self._P, overwrite_a=1)
            # P_{t+1} x collapses to Px/q + beta2 (x^T Z x) Zx.
            gain = Px / q + self.beta2 * float(Zx[idx] @ vals) * Zx
        else:
            gain = Px / q
        self.c += gain * e
        self._finish_step()

    def _td_core(self, row_t, row_next, reward: float):
        idx, vals = self._as_sparse(row_t)
        idx_n, vals_n = self._as_sparse(row_next)
        if not np.isfinite(reward):
            raise NumericalFailure(f"non-finite reward at step {self.step_count}")
        P = self._P
        Px = P[:, idx] @ vals
        idx_d = np.concatenate([idx, idx_n])
        vals_d = np.concatenate([vals, -self.gamma * vals_n])
        dP = vals_d @ P[idx_d, :]                       # delta^T P
        q = 1.0 + float(dP[idx] @ vals)                 # 1 + delta^T P x
        self._check_denominator(q)
        e = reward - float(self.c[idx] @ vals - self.gamma * (self.c[idx_n] @ vals_n))
        return idx, vals, e, Px, dP, q

    # -- checkpointing -----------------------------------------------------------

    def save(self, path) -> None:
        """Dump the full estimator state plus the spline-space digest."""
        np.savez_compressed(
            path, c=self.c, P=self._P,
            hyper=json.dumps({
                "gamma": self.gamma, "beta1": self.beta1, "beta2": self.beta2,
                "step_count": self.step_count, "space_hash": self.space.content_hash(),
            }))

    @classmethod
    def load(cls, path, space: SplineSpace | FlatSpace,
             projector: NullSpaceProjector) -> "Estimator":
        data = np.load(path, allow_pickle=False)
        hyper = json.loads(str(data["hyper"]))
        if hyper["space_hash"] != space.content_hash():
            raise InvalidParam(
                f"checkpoint {path} was produced for a different spline space")
        est = cls(space, projector, beta1=hyper["beta1"],
                  gamma=hyper["gamma"], beta2=hyper["beta2"])
        est.c[:] = data["c"]
        est._P = np.asfortranarray(data["P"])
        est.step_count = int(hyper["step_count"])
        return est

    # -- internals ----------------------------------------------------------------

    def _as_sparse(self, row) -> tuple[np.ndarray, np.ndarray]:
        if isinstance(row, BasisRow):
            if row.size != self.space.ahat:
                raise InvalidParam(
                    f"regressor has size {row.size}, expected {self.space.ahat}")
            vals = row.values
            idx = np.arange(row.offset, row.offset + len(vals))
        else:
            x = np.asarray(row, dtype=float)
            if x.shape != (self.space.ahat,):
                raise InvalidParam(
                    f"regressor has shape {x.shape}, expected ({self.space.ahat},)")
            idx = np.flatnonzero(x)
            vals = x[idx]
        if not np.all(np.isfinite(vals)):
            raise NumericalFailure(f"non-finite regressor at step {self.step_count}")
        return idx, vals

    def _check_denominator(self, q: float) -> None:
        if not np.isfinite(q) or abs(q) < DENOMINATOR_TOL:
            raise NumericalFailure(
                f"update denominator {q:g} at step {self.step_count}")

    def _finish_step(self) -> None:
        self.step_count += 1
        if np.max(np.abs(self.c)) > DIVERGENCE_LIMIT:
            raise EstimatorDiverged(
                f"coefficient sup-norm exceeded {DIVERGENCE_LIMIT:g} "
                f"at step {self.step_count}")
