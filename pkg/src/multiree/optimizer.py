"""Relative entropy of entanglement over the fully separable set.

The minimization of S(sigma||rho) runs over finite mixtures of product pure
states. Each outer step is a conditional-gradient (Frank-Wolfe) step: the
gradient of rho -> S(sigma||rho) is the Frechet derivative of the matrix
logarithm applied to sigma, the linear subproblem over product states is
solved by alternating local eigenvector updates from several starts, and the
weights of the active terms are periodically re-optimized with exponentiated
gradient.

The reported gap is the Frank-Wolfe duality gap at the final iterate plus the
bias introduced by the support floor. Because the product-state subproblem is
nonconvex and solved heuristically, the gap is a certificate only as good as
that inner search.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from .states import (
    PartyStructure,
    PureState,
    QuantumState,
    binary_entropy,
    complex_gaussian,
    entropy_of_spectrum,
    haar_random_unitary,
    partial_trace,
    relative_entropy_matrices,
    von_neumann_entropy,
)

LN2 = math.log(2.0)
PRUNE_WEIGHT = 1e-12
CORRECTIVE_EVERY = 10
WEIGHT_SOLVE_TOL = 1e-10
WEIGHT_SOLVE_MAX_ITER = 100
AGREEMENT_TOL = 1e-4
DUPLICATE_FIDELITY = 1.0 - 1e-10
SLIDE_MAX_ITER = 200


@dataclass(frozen=True)
class OptimizerConfig:
    ensemble_size: int | None = None  # None means 4 * D
    max_outer_iterations: int = 2000
    value_tolerance: float = 1e-7
    restarts: int = 8
    inner_starts: int = 16
    seed: int = 0
    support_floor: float = 1e-9

    def __post_init__(self):
        if self.ensemble_size is not None and self.ensemble_size < 1:
            raise ValueError("ensemble_size must be positive")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be positive")
        if not self.value_tolerance > 0:
            raise ValueError("value_tolerance must be > 0")
        if self.restarts < 1 or self.inner_starts < 1:
            raise ValueError("restarts and inner_starts must be positive")
        if not 0 < self.support_floor < 1:
            raise ValueError("support_floor must lie in (0, 1)")

    def size_for(self, dimension: int) -> int:
        return 4 * dimension if self.ensemble_size is None else self.ensemble_size


@dataclass(frozen=True, eq=False)
class SeparableEnsemble:
    """Finite mixture of product pure states.

    ``factors[j]`` has shape ``(K, d_j)``: row ``k`` is the local vector of
    party ``j`` in term ``k``.
    """

    structure: PartyStructure
    weights: np.ndarray
    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        structure = self.structure
        if not isinstance(structure, PartyStructure):
            structure = PartyStructure(tuple(structure))
        weights = np.array(self.weights, dtype=float).reshape(-1)
        factors = tuple(np.array(f, dtype=complex) for f in self.factors)
        k = weights.shape[0]
        if k == 0:
            raise ValueError("an ensemble needs at least one term")
        if len(factors) != structure.n_parties:
            raise ValueError("one factor array per party is required")
        for j, (f, d) in enumerate(zip(factors, structure.dims)):
            if f.shape != (k, d):
                raise ValueError(f"party {j} factors have shape {f.shape}, expected {(k, d)}")
            norms = np.linalg.norm(f, axis=1)
            if np.max(np.abs(norms - 1.0)) > 1e-10:
                raise ValueError(f"party {j} has unnormalized factors")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-10:
            raise ValueError(f"weights sum to {weights.sum()!r}, expected 1")
        for a in (weights, *factors):
            a.flags.writeable = False
        object.__setattr__(self, "structure", structure)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "factors", factors)

    def __len__(self) -> int:
        return self.weights.shape[0]

    @property
    def terms(self) -> list[tuple[float, tuple[np.ndarray, ...]]]:
        return [
            (float(w), tuple(f[k] for f in self.factors))
            for k, w in enumerate(self.weights)
        ]

    @classmethod
    def from_terms(cls, structure, terms) -> "SeparableEnsemble":
        structure = structure if isinstance(structure, PartyStructure) else PartyStructure(tuple(structure))
        weights = [w for w, _ in terms]
        factors = tuple(
            np.array([np.asarray(fs[j], dtype=complex) for _, fs in terms])
            for j in range(structure.n_parties)
        )
        return cls(structure, weights, factors)

    def product_vectors(self) -> np.ndarray:
        return _product_vectors(self.factors)

    def density(self) -> np.ndarray:
        phi = self.product_vectors()
        return phi.T @ (self.weights[:, None] * phi.conj())


def _product_vectors(factors) -> np.ndarray:
    vec = factors[0]
    for f in factors[1:]:
        vec = (vec[:, :, None] * f[:, None, :]).reshape(vec.shape[0], -1)
    return vec


def ensemble_to_state(e: SeparableEnsemble) -> QuantumState:
    """Density matrix sum_k p_k (x)_j |a_k^j><a_k^j|."""
    return QuantumState(e.structure, e.density())


def regularized_density(e: SeparableEnsemble, support_floor: float) -> QuantumState:
    """(1 - eps) rho + eps I/D, the state the optimizer actually scores."""
    d = e.structure.dimension
    mat = (1 - support_floor) * e.density() + support_floor * np.eye(d) / d
    return QuantumState(e.structure, mat)


def random_separable_ensemble(structure, rng: np.random.Generator, n_terms: int) -> SeparableEnsemble:
    """Random product pure states with Dirichlet(1) weights."""
    structure = structure if isinstance(structure, PartyStructure) else PartyStructure(tuple(structure))
    factors = []
    for d in structure.dims:
        f = complex_gaussian(rng, (n_terms, d))
        factors.append(f / np.linalg.norm(f, axis=1, keepdims=True))
    weights = rng.dirichlet(np.ones(n_terms))
    return SeparableEnsemble(structure, weights / weights.sum(), tuple(factors))


@dataclass(frozen=True, eq=False)
class ReeResult:
    value: float
    closest: SeparableEnsemble
    gap_estimate: float
    iterations_used: int
    restarts_agreeing: int
    support_floor: float = 1e-9
    restart_values: tuple[float, ...] = field(default=())

    def to_dict(self, include_ensemble: bool = True) -> dict:
        out = {
            "value": self.value,
            "gap_estimate": self.gap_estimate,
            "iterations_used": self.iterations_used,
            "restarts_agreeing": self.restarts_agreeing,
            "support_floor": self.support_floor,
            "restart_values": list(self.restart_values),
        }
        if include_ensemble:
            e = self.closest
            out["closest"] = {
                "dims": list(e.structure.dims),
                "weights": [float(w) for w in e.weights],
                "factors": [
                    [[[float(z.real), float(z.imag)] for z in row] for row in f]
                    for f in e.factors
                ],
            }
        return out


class _Objective:
    """S(sigma||(1-eps) rho + eps I/D) and its derivative, in bits."""

    def __init__(self, sigma: np.ndarray, dims: tuple[int, ...], eps: float):
        self.sigma = sigma
        self.dims = dims
        self.dim = sigma.shape[0]
        self.eps = eps
        self.sigma_entropy = entropy_of_spectrum(np.linalg.eigvalsh(sigma))
        self._floor = (eps / self.dim) * np.eye(self.dim)

    def _floored(self, rho):
        return (1 - self.eps) * rho + self._floor

    def decompose(self, rho):
        mu, u = np.linalg.eigh(self._floored(rho))
        mu = np.clip(mu, self.eps / self.dim * 1e-3, None)
        st = u.conj().T @ self.sigma @ u
        return mu, u, st

    def value_from(self, mu, st) -> float:
        cross = float(np.sum(np.real(np.diagonal(st)) * np.log(mu))) / LN2
        return -self.sigma_entropy - cross

    def value(self, rho) -> float:
        mu, _, st = self.decompose(rho)
        return self.value_from(mu, st)

    @staticmethod
    def log_divided_differences(mu):
        a = mu[:, None]
        b = mu[None, :]
        x = (a - b) / b
        small = np.abs(x) < 1e-8
        with np.errstate(divide="ignore", invalid="ignore"):
            big = np.log1p(np.where(small, 0.0, x)) / np.where(small, 1.0, a - b)
        return np.where(small, (1 - 0.5 * x) / b, big)

    def log_derivative(self, mu, u, st):
        """D log[rho_eps](sigma) in natural units, as a matrix in the original basis."""
        return u @ (st * self.log_divided_differences(mu)) @ u.conj().T


@functools.lru_cache(maxsize=None)
def _eye(d: int) -> np.ndarray:
    out = np.eye(d)
    out.flags.writeable = False
    return out


def _isometries(factors, j):
    """Batch of maps |k>_j -> (x)_{i != j} |phi_i> (x) |k>_j, shape (B, D, d_j)."""
    n = len(factors)
    b = factors[0].shape[0]
    dj = factors[j].shape[1]
    a = np.ones((b,) + (1,) * n + (dj,), dtype=complex)
    for i, f in enumerate(factors):
        shape = [b] + [1] * n + [1]
        if i == j:
            eye_shape = [1] * (n + 2)
            eye_shape[1 + i] = dj
            eye_shape[-1] = dj
            a = a * _eye(dj).reshape(eye_shape)
        else:
            shape[1 + i] = f.shape[1]
            a = a * f.reshape(shape)
    return a.reshape(b, -1, dj)


def best_product_state(m: np.ndarray, dims: tuple[int, ...], rng: np.random.Generator,
                       starts: int, warm: list[tuple[np.ndarray, ...]] = (),
                       max_sweeps: int = 60, tol: float = 1e-11, keep: int = 4):
    """Maximize <phi|m|phi> over normalized product vectors.

    Alternating updates: with all other parties fixed the optimal local
    vector is the top eigenvector of the effective local operator, so each
    sweep is monotone. After a few sweeps only the ``keep`` most promising
    starts are refined further. Returns ``(value, factors)`` of the best start.
    """
    n = len(dims)
    factors = []
    for j, d in enumerate(dims):
        f = complex_gaussian(rng, (starts, d))
        if warm:
            f = np.concatenate([np.array([w[j] for w in warm]), f])
        factors.append(f / np.linalg.norm(f, axis=1, keepdims=True))
    prev = -math.inf
    for sweep in range(max_sweeps):
        for j in range(n):
            iso = _isometries(factors, j)
            eff = np.conj(np.swapaxes(iso, 1, 2)) @ m @ iso
            eff = 0.5 * (eff + np.conj(np.swapaxes(eff, 1, 2)))
            vals, vecs = np.linalg.eigh(eff)
            factors[j] = vecs[:, :, -1]
            top = vals[:, -1]
        best_val = float(np.max(top))
        if best_val - prev <= tol * max(1.0, abs(best_val)):
            break
        prev = best_val
        if sweep == 2 and len(top) > keep:
            order = np.argsort(top)[::-1][:keep]
            factors = [f[order] for f in factors]
            top = top[order]
    best = int(np.argmax(top))
    return float(top[best]), tuple(f[best].copy() for f in factors)


class _Run:
    """One restart of the conditional-gradient loop."""

    def __init__(self, obj: _Objective, cfg: OptimizerConfig, rng: np.random.Generator,
                 weights: np.ndarray, factors: list[np.ndarray]):
        self.obj = obj
        self.cfg = cfg
        self.rng = rng
        self.max_terms = cfg.size_for(obj.dim)
        self.weights = weights
        self.factors = factors
        self.phi = _product_vectors(factors)

    # ensemble bookkeeping
    def rho(self, weights=None):
        w = self.weights if weights is None else weights
        return self.phi.T @ (w[:, None] * self.phi.conj())

    def _drop(self, keep: np.ndarray):
        self.weights = self.weights[keep]
        self.weights = self.weights / self.weights.sum()
        self.factors = [f[keep] for f in self.factors]
        self.phi = self.phi[keep]

    def prune(self):
        keep = self.weights > PRUNE_WEIGHT
        if not np.all(keep):
            self._drop(keep)
        while len(self.weights) > self.max_terms:
            k = int(np.argmin(self.weights))
            fid = np.abs(self.phi.conj() @ self.phi[k]) ** 2
            fid[k] = -1.0
            target = int(np.argmax(fid))
            self.weights[target] += self.weights[k]
            keep = np.ones(len(self.weights), dtype=bool)
            keep[k] = False
            self._drop(keep)

    def add_term(self, gamma: float, new_factors):
        vec = _product_vectors([f[None, :] for f in new_factors])[0]
        fid = np.abs(self.phi.conj() @ vec) ** 2
        self.weights = (1 - gamma) * self.weights
        k = int(np.argmax(fid))
        if fid[k] > DUPLICATE_FIDELITY:
            self.weights[k] += gamma
            return
        self.weights = np.append(self.weights, gamma)
        self.factors = [np.vstack([f, nf[None, :]]) for f, nf in zip(self.factors, new_factors)]
        self.phi = np.vstack([self.phi, vec[None, :]])

    # optimization steps
    def line_search(self, rho, s, gap_direction: float) -> float:
        obj = self.obj
        diff = s - rho

        def slope(gamma):
            mu, u, st = obj.decompose(rho + gamma * diff)
            m = obj.log_derivative(mu, u, st)
            return -(1 - obj.eps) * float(np.real(np.vdot(m, diff))) / LN2

        if gap_direction <= 0:
            return 0.0
        if slope(1.0) <= 0:
            return 1.0
        return brentq(slope, 0.0, 1.0, xtol=1e-15, rtol=1e-12, maxiter=200)

    def solve_weights(self):
        """Exponentiated-gradient descent on the weights of the active terms."""
        obj = self.obj
        w = self.weights.copy()
        mu, u, st = obj.decompose(self.rho(w))
        f = obj.value_from(mu, st)
        eta = 1.0
        for _ in range(WEIGHT_SOLVE_MAX_ITER):
            m = obj.log_derivative(mu, u, st)
            c = np.real(np.einsum("kd,de,ke->k", self.phi.conj(), m, self.phi))
            c = (1 - obj.eps) * c / LN2  # minus the gradient, in bits
            local_gap = float(np.max(c) - w @ c)
            if local_gap < WEIGHT_SOLVE_TOL:
                break
            accepted = False
            while eta > 1e-12:
                step = w * np.exp(eta * (c - np.max(c)))
                step /= step.sum()
                mu2, u2, st2 = obj.decompose(self.rho(step))
                f2 = obj.value_from(mu2, st2)
                if f2 < f:
                    w, mu, u, st, f = step, mu2, u2, st2, f2
                    eta *= 2.0
                    accepted = True
                    break
                eta *= 0.5
            if not accepted:
                break
        self.weights = w

    def slide(self, maxiter: int = SLIDE_MAX_ITER):
        """Jointly refine weights and local vectors of all terms (L-BFGS).

        The ensemble is parametrized by unnormalized product vectors
        v_k = (x)_j x_k^j with rho = sum_k |v_k><v_k| / sum_k |v_k|^2, which
        removes the simplex and normalization constraints.
        """
        obj = self.obj
        shapes = [f.shape for f in self.factors]
        sizes = [int(np.prod(sh)) for sh in shapes]
        xs0 = [f.copy() for f in self.factors]
        xs0[0] = xs0[0] * np.sqrt(self.weights)[:, None]
        z0 = np.concatenate([x.reshape(-1) for x in xs0]).view(float)
        eye = np.eye(obj.dim)

        def unpack(z):
            flat = z.view(complex)
            out, pos = [], 0
            for sh, size in zip(shapes, sizes):
                out.append(flat[pos:pos + size].reshape(sh))
                pos += size
            return out

        def fun(z):
            xs = unpack(z)
            v = _product_vectors(xs)
            norm2 = float(np.sum(np.abs(v) ** 2))
            rho = v.T @ v.conj() / norm2
            mu, u, st = obj.decompose(rho)
            f = obj.value_from(mu, st)
            m = obj.log_derivative(mu, u, st)
            g = -(1 - obj.eps) / LN2 * (m - float(np.real(np.vdot(m, rho))) * eye) / norm2
            gv = v @ g.T
            grads = []
            for j in range(len(xs)):
                iso = _isometries(xs, j)
                w = np.einsum("kdj,kd->kj", iso.conj(), gv)
                grads.append(2.0 * w.reshape(-1))
            return f, np.concatenate(grads).view(float)

        res = minimize(fun, z0, jac=True, method="L-BFGS-B",
                       options={"maxiter": maxiter, "ftol": 1e-15, "gtol": 1e-12})
        xs = unpack(np.asarray(res.x, dtype=float).copy())
        v = _product_vectors(xs)
        w = np.sum(np.abs(v) ** 2, axis=1)
        if not np.all(np.isfinite(w)) or w.sum() <= 0 or res.fun > obj.value(self.rho()):
            return
        norms = [np.linalg.norm(x, axis=1, keepdims=True) for x in xs]
        ok = np.all(np.hstack(norms) > 0, axis=1)
        self.factors = [np.where(nm > 0, x / np.where(nm > 0, nm, 1.0), 0.0) for x, nm in zip(xs, norms)]
        self.weights = w / w.sum()
        self.phi = _product_vectors(self.factors)
        if not np.all(ok):
            self._drop(ok)

    def _fw_gap(self, rho, mu, u, st, last_best, starts):
        obj = self.obj
        m = obj.log_derivative(mu, u, st)
        top, best = best_product_state(m, obj.dims, self.rng, starts,
                                       self._warm_starts(last_best))
        tr_rho_m = float(np.real(np.vdot(m, rho)))
        return max(0.0, (1 - obj.eps) * (top - tr_rho_m) / LN2), best

    def run(self):
        """Returns (value, certified gap, iterations)."""
        obj, cfg = self.obj, self.cfg
        checkpoint = obj.value(self.rho())
        # f(rho_t) - gap_t lower-bounds the minimum at every iterate t
        lower = -math.inf
        it = 0
        last_best = None
        while it < cfg.max_outer_iterations:
            it += 1
            rho = self.rho()
            mu, u, st = obj.decompose(rho)
            value = obj.value_from(mu, st)
            gap, best = self._fw_gap(rho, mu, u, st, last_best, cfg.inner_starts)
            last_best = best
            lower = max(lower, value - gap)
            if value - lower <= cfg.value_tolerance:
                break
            s_vec = _product_vectors([f[None, :] for f in best])[0]
            gamma = self.line_search(rho, np.outer(s_vec, s_vec.conj()), gap)
            if gamma > 0:
                self.add_term(gamma, best)
            if it % CORRECTIVE_EVERY == 0:
                self.solve_weights()
                self.prune()
                self.slide()
                self.prune()
                value = obj.value(self.rho())
                if checkpoint - value < cfg.value_tolerance:
                    break
                checkpoint = value
            else:
                self.prune()
        self.solve_weights()
        self.prune()
        rho = self.rho()
        mu, u, st = obj.decompose(rho)
        value = obj.value_from(mu, st)
        gap, _ = self._fw_gap(rho, mu, u, st, last_best, 2 * cfg.inner_starts)
        lower = max(lower, value - gap)
        return value, max(0.0, value - lower), it

    def _warm_starts(self, last_best):
        order = np.argsort(self.weights)[::-1][:4]
        warm = [tuple(f[k] for f in self.factors) for k in order]
        if last_best is not None:
            warm.append(last_best)
        return warm

    def ensemble(self, structure: PartyStructure) -> SeparableEnsemble:
        factors = tuple(f / np.linalg.norm(f, axis=1, keepdims=True) for f in self.factors)
        w = np.clip(self.weights, 0.0, None)
        return SeparableEnsemble(structure, w / w.sum(), factors)


def _initial_ensemble(dims, rng, restart_index):
    """Product basis with uniform weights (restart 0) or random local bases."""
    grids = np.meshgrid(*[np.arange(d) for d in dims], indexing="ij")
    idx = [g.reshape(-1) for g in grids]
    if restart_index == 0:
        factors = [np.eye(d, dtype=complex)[i] for d, i in zip(dims, idx)]
        weights = np.full(len(idx[0]), 1.0 / len(idx[0]))
    else:
        factors = [haar_random_unitary(d, rng).T[i] for d, i in zip(dims, idx)]
        weights = 0.5 * rng.dirichlet(np.ones(len(idx[0]))) + 0.5 / len(idx[0])
    return weights, factors


def _single_restart(sigma: QuantumState, cfg: OptimizerConfig, seed_seq: np.random.SeedSequence,
                    restart_index: int):
    rng = np.random.default_rng(seed_seq)
    obj = _Objective(sigma.matrix, sigma.structure.dims, cfg.support_floor)
    weights, factors = _initial_ensemble(sigma.structure.dims, rng, restart_index)
    run = _Run(obj, cfg, rng, weights, factors)
    run.prune()
    value, gap, iters = run.run()
    return value, gap, iters, run.ensemble(sigma.structure)


def floor_bias(eps: float, dimension: int) -> float:
    """Bound on |S(sigma||rho) - S(sigma||(1-eps) rho + eps I/D)| folded into the gap."""
    return eps * math.log2(dimension) + binary_entropy(eps)


def relative_entropy_of_entanglement(sigma: QuantumState | PureState,
                                     cfg: OptimizerConfig | None = None) -> ReeResult:
    """min over fully separable rho of S(sigma||rho), in bits."""
    cfg = cfg or OptimizerConfig()
    if isinstance(sigma, PureState):
        from .states import from_pure

        sigma = from_pure(sigma)
    if sigma.structure.n_parties < 2:
        raise ValueError("entanglement needs at least two parties")
    return _cached_ree(sigma.matrix.tobytes(), sigma.structure.dims, cfg)


@functools.lru_cache(maxsize=512)
def _cached_ree(matrix_bytes: bytes, dims: tuple[int, ...], cfg: OptimizerConfig) -> ReeResult:
    d = math.prod(dims)
    sigma = QuantumState(PartyStructure(dims), np.frombuffer(matrix_bytes, dtype=complex).reshape(d, d))
    if cfg.size_for(d) < d:
        warnings.warn(
            f"ensemble_size {cfg.size_for(d)} is below the dimension {d}; "
            "the closest separable state may not be representable",
            stacklevel=3,
        )
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    runs = [_single_restart(sigma, cfg, child, r) for r, child in enumerate(children)]
    values = [r[0] for r in runs]
    best = min(range(len(runs)), key=lambda i: (runs[i][0], runs[i][1], len(runs[i][3])))
    value, gap, iters, ens = runs[best]
    agreeing = sum(1 for v in values if abs(v - value) <= AGREEMENT_TOL)
    return ReeResult(
        value=max(0.0, value),
        closest=ens,
        gap_estimate=gap + floor_bias(cfg.support_floor, d),
        iterations_used=iters,
        restarts_agreeing=agreeing,
        support_floor=cfg.support_floor,
        restart_values=tuple(values),
    )


def pure_state_ree_oracle(psi: PureState, cut) -> float:
    """Entropy of entanglement across a bipartition (REE of a bipartite pure state)."""
    blocks = [set(int(i) for i in b) for b in cut]
    n = psi.structure.n_parties
    if len(blocks) != 2 or not blocks[0] or not blocks[1]:
        raise ValueError("cut must consist of exactly two nonempty blocks")
    if blocks[0] & blocks[1] or blocks[0] | blocks[1] != set(range(n)):
        raise ValueError(f"{cut} is not a bipartition of {n} parties")
    return von_neumann_entropy(partial_trace(psi, blocks[0]))
