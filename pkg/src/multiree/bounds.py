"""Upper and lower bounds on multipartite REE in terms of smaller subsystems.

For a pure n-party state the bounds compare E_n against

* lower: max over a party X of E_{n-1}(rest) + S(rest), where "rest" is the
  state with X traced out;
* upper: min over a "preparing" party X of the sum of the single-party
  entropies of everybody else (the ebit cost of preparing locally and
  teleporting compressed shares);
* their averages over X, and the half-sum 0.5 * sum_X S(X).

At n = 3 these are exactly the pairwise bounds of the tripartite theorem.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from itertools import combinations

import numpy as np

from .optimizer import (
    OptimizerConfig,
    ReeResult,
    SeparableEnsemble,
    random_separable_ensemble,
    relative_entropy_of_entanglement,
)
from .states import (
    PureState,
    QuantumState,
    _reduced_matrix,
    partial_trace,
    random_mixed_state,
    relative_entropy_matrices,
    von_neumann_entropy,
)

SATURATION_TOL = 5e-3
INEQUALITY_TOL = 1e-8
# Bound candidates closer than this are ties; the first in canonical order wins.
TIE_TOL = 1e-6


@dataclass(frozen=True)
class BoundsReport:
    state_label: str
    e3_estimate: float
    lower_thm1: float
    lower_witness: str
    upper_thm1: float
    upper_witness: str
    corollary_lower: float
    corollary_upper: float
    conjecture_half_sum: float
    slack_lower: float
    slack_upper: float
    saturated_lower: bool
    saturated_upper: bool
    gap_estimate: float
    n_parties: int

    @property
    def tolerance(self) -> float:
        return self.gap_estimate + SATURATION_TOL

    def sandwich_holds(self) -> bool:
        tol = self.tolerance
        return (self.lower_thm1 - tol <= self.e3_estimate <= self.upper_thm1 + tol)

    def corollary_holds(self) -> bool:
        tol = self.tolerance
        return (self.corollary_lower - tol <= self.e3_estimate <= self.corollary_upper + tol)

    def conjecture_holds(self) -> bool:
        return self.e3_estimate <= self.conjecture_half_sum + self.tolerance

    def to_dict(self) -> dict:
        return asdict(self)


def as_pure(state, n_parties: int | None = None) -> PureState:
    """Accept a PureState or a rank-one QuantumState; reject mixed input."""
    if isinstance(state, QuantumState):
        if not state.is_pure():
            raise ValueError("bounds are defined for pure states; got a mixed state")
        vals, vecs = np.linalg.eigh(state.matrix)
        state = PureState.normalized(state.structure, vecs[:, -1])
    if not isinstance(state, PureState):
        raise TypeError(f"expected a pure state, got {type(state).__name__}")
    if n_parties is not None and state.structure.n_parties != n_parties:
        raise ValueError(
            f"expected {n_parties} parties, got {state.structure.n_parties}"
        )
    return state


def _first_best(candidates, better):
    """First (value, label) whose value is within TIE_TOL of the optimum."""
    target = better(v for v, _ in candidates)
    for value, label in candidates:
        if abs(value - target) <= TIE_TOL:
            return target, label
    raise AssertionError("unreachable")


def single_party_entropies(psi: PureState) -> list[float]:
    return [von_neumann_entropy(partial_trace(psi, {x}))
            for x in range(psi.structure.n_parties)]


def peeled_terms(psi: PureState, cfg: OptimizerConfig) -> list[tuple[int, ReeResult, float]]:
    """For each party X: (X, REE of the rest, entropy of the rest).

    Parties are visited last to first so the kept sets come out in
    lexicographic order (AB, AC, BC for three parties).
    """
    n = psi.structure.n_parties
    out = []
    for x in reversed(range(n)):
        rest = partial_trace(psi, set(range(n)) - {x})
        out.append((x, relative_entropy_of_entanglement(rest, cfg), von_neumann_entropy(rest)))
    return out


def lower_bound_theorem1(psi, cfg: OptimizerConfig | None = None) -> tuple[float, str]:
    """max over pairs P of E_2(psi_P) + S(psi_P), with the maximizing pair."""
    psi = as_pure(psi, 3)
    cfg = cfg or OptimizerConfig()
    terms = []
    for pair in combinations(range(3), 2):
        red = partial_trace(psi, pair)
        e2 = relative_entropy_of_entanglement(red, cfg).value
        terms.append((e2 + von_neumann_entropy(red), psi.structure.label(pair)))
    return _first_best(terms, max)


def upper_bound_theorem1(psi) -> tuple[float, str]:
    """min over pairs {X, Y} of S(X) + S(Y), with the minimizing pair."""
    psi = as_pure(psi, 3)
    s = single_party_entropies(psi)
    terms = [(s[a] + s[b], psi.structure.label((a, b))) for a, b in combinations(range(3), 2)]
    return _first_best(terms, min)


def corollary_bounds(psi, cfg: OptimizerConfig | None = None) -> tuple[float, float]:
    psi = as_pure(psi, 3)
    cfg = cfg or OptimizerConfig()
    s_total = sum(single_party_entropies(psi))
    e2_total = sum(
        relative_entropy_of_entanglement(partial_trace(psi, pair), cfg).value
        for pair in combinations(range(3), 2)
    )
    return e2_total / 3 + s_total / 3, 2 * s_total / 3


def conjecture_half_sum(psi) -> float:
    psi = as_pure(psi, 3)
    return 0.5 * sum(single_party_entropies(psi))


@dataclass(frozen=True)
class ConjectureCheck:
    e3_estimate: float
    half_sum: float
    gap_estimate: float
    rerun: bool
    violated: bool

    @property
    def excess(self) -> float:
        return self.e3_estimate - self.half_sum


def conjecture_check(psi, cfg: OptimizerConfig | None = None,
                     rerun_factor: int = 4) -> ConjectureCheck:
    """Compare E_3 with the half-sum, re-running suspected violations.

    A value above half-sum + gap + 5e-3 is recomputed with ``rerun_factor``
    times the restarts; only a violation that survives is flagged.
    """
    psi = as_pure(psi, 3)
    cfg = cfg or OptimizerConfig()
    half = conjecture_half_sum(psi)
    res = relative_entropy_of_entanglement(psi, cfg)
    rerun = False
    if res.value > half + res.gap_estimate + SATURATION_TOL:
        rerun = True
        res = relative_entropy_of_entanglement(
            psi, replace(cfg, restarts=rerun_factor * cfg.restarts))
    violated = res.value > half + res.gap_estimate + SATURATION_TOL
    return ConjectureCheck(res.value, half, res.gap_estimate, rerun, violated)


def nparty_bounds(psi, cfg: OptimizerConfig | None = None, label: str = "") -> BoundsReport:
    """Full bounds report for a pure state of n >= 3 parties."""
    psi = as_pure(psi)
    n = psi.structure.n_parties
    if n < 3:
        raise ValueError(f"bounds need at least three parties, got {n}")
    cfg = cfg or OptimizerConfig()
    everyone = set(range(n))
    s = single_party_entropies(psi)

    peeled = peeled_terms(psi, cfg)
    lower_terms = [(r.value + s_rest, psi.structure.label(everyone - {x}))
                   for x, r, s_rest in peeled]
    lower, lower_witness = _first_best(lower_terms, max)
    lower_gap = max(r.gap_estimate for _, r, _ in peeled)

    # preparer x pays S(y) for every other party y
    upper_terms = [(sum(s) - s[x], psi.structure.label(everyone - {x}))
                   for x in reversed(range(n))]
    upper, upper_witness = _first_best(upper_terms, min)

    full = relative_entropy_of_entanglement(psi, cfg)
    e = full.value
    gap = full.gap_estimate + lower_gap
    return BoundsReport(
        state_label=label,
        e3_estimate=e,
        lower_thm1=lower,
        lower_witness=lower_witness,
        upper_thm1=upper,
        upper_witness=upper_witness,
        corollary_lower=sum(v for v, _ in lower_terms) / n,
        corollary_upper=sum(v for v, _ in upper_terms) / n,
        conjecture_half_sum=0.5 * sum(s),
        slack_lower=e - lower,
        slack_upper=upper - e,
        saturated_lower=abs(e - lower) < SATURATION_TOL,
        saturated_upper=abs(upper - e) < SATURATION_TOL,
        gap_estimate=gap,
        n_parties=n,
    )


def _chain_expression(sigma: QuantumState, rho: SeparableEnsemble, keep: tuple[int, ...]) -> float:
    """[S(s||r) - S(s_K||r_K)] - [S(s_K) - S(s)] for the kept parties K."""
    if not isinstance(rho, SeparableEnsemble):
        raise TypeError("rho must be a SeparableEnsemble")
    if sigma.structure != rho.structure:
        raise ValueError(
            f"party structures differ: {sigma.structure.dims} vs {rho.structure.dims}"
        )
    dims = sigma.structure.dims
    r = rho.density()
    s_k = _reduced_matrix(sigma.matrix, dims, keep)
    r_k = _reduced_matrix(r, dims, keep)
    full = relative_entropy_matrices(sigma.matrix, r)
    if math.isinf(full):
        return math.inf
    part = relative_entropy_matrices(s_k, r_k)
    ent_full = von_neumann_entropy(sigma)
    ent_k = von_neumann_entropy(QuantumState(sigma.structure.restrict(keep), s_k))
    return (full - part) - (ent_k - ent_full)


def verify_inequality_bi(sigma: QuantumState, rho: SeparableEnsemble) -> float:
    """LHS - RHS of S(s_AB||r_AB) - S(s_A||r_A) >= S(s_A) - S(s_AB); must be >= -1e-8."""
    if sigma.structure.n_parties != 2:
        raise ValueError("verify_inequality_bi needs a bipartite state")
    return _chain_expression(sigma, rho, (0,))


def verify_inequality_tri(sigma: QuantumState, rho: SeparableEnsemble) -> float:
    """LHS - RHS of S(s_ABC||r_ABC) - S(s_AB||r_AB) >= S(s_AB) - S(s_ABC)."""
    if sigma.structure.n_parties != 3:
        raise ValueError("verify_inequality_tri needs a tripartite state")
    return _chain_expression(sigma, rho, (0, 1))


def random_inequality_pair(dims, rng: np.random.Generator) -> tuple[QuantumState, SeparableEnsemble]:
    """A random state of random rank and a full-rank random separable ensemble."""
    d = math.prod(dims)
    rank = int(rng.integers(1, d + 1))
    sigma = random_mixed_state(dims, rng, rank)
    rho = random_separable_ensemble(dims, rng, int(rng.integers(d, 2 * d + 1)))
    return sigma, rho
