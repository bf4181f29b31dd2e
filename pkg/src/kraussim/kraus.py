"""Time-perturbative Kraus series construction and application.

The channel generated by a Lindblad model whose Hamiltonian and jump
operators satisfy the four commutation conditions factorizes into Kraus
terms ``K = a * T(t) * L_{k_1} ... L_{k_m}`` sharing one contraction
``T(t) = exp(-i t H_eff)``.  Three constructions are provided:

* the general truncated series over all index vectors up to order M,
* the exact finite series for operators with power-law structure
  (``L^l = c I`` or ``L^l = 0`` plus commutativity up to phase),
* the factored single-operator form valid for the abelian case.

Weights use the accumulated jump weight ``x_n = gamma_n * f(t)`` where
``f(t) = t`` for the linear branch and ``(1 - exp(-alpha t)) / alpha``
otherwise.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .lindblad import (
    ConditionReport,
    LindbladModel,
    check_conditions,
    normalize_lindblads,
    _matrix_from_json,
    _matrix_to_json,
)
from .matkernel import DensityMatrix, classify_density, matexp, _as_matrix

ZERO_OPERATOR_TOL = 1e-14
CONTRACTION_TOL = 1e-10
GROUP_DETECT_TOL = 1e-10


class ConditionFallbackWarning(UserWarning):
    """Emitted when the eigenbasis construction falls back to a dense expm."""


class ConditionError(ValueError):
    """A construction requiring the commutation conditions was refused."""


@dataclass(frozen=True)
class KrausTerm:
    """One term of the series.

    ``indices`` is the application sequence of Lindblad-operator indices
    (leftmost applied last), ``weight`` the nonnegative scalar folded out of
    the operator product, and ``operator`` the materialized
    ``T(t) @ prod(L)`` product over unit-norm operators.  The full Kraus
    matrix is ``weight * operator``.
    """

    order: int
    indices: tuple[int, ...]
    weight: float
    operator: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.weight * self.operator


@dataclass(frozen=True)
class KrausSeries:
    terms: tuple[KrausTerm, ...]
    truncation_order: int
    tail_bound: float
    dim: int


@dataclass(frozen=True)
class GroupStructure:
    """Per-operator power law: ``L^period = c I`` with ``theta = |c|^2``,
    or ``L^period = 0`` with ``theta = 0``."""

    periods: tuple[int, ...]
    thetas: tuple[float, ...]

    @property
    def nilpotent(self) -> tuple[bool, ...]:
        return tuple(th == 0.0 for th in self.thetas)


def f_of_t(alpha: float, t: float) -> float:
    """Time weight of the series, ``t`` when alpha = 0 else ``(1-e^{-at})/a``.

    Continuous in alpha at 0; a short series is used when ``alpha * t`` is
    tiny so both branches agree to full precision.
    """
    if alpha < 0 or t < 0:
        raise ValueError("alpha and t must be nonnegative")
    if alpha < 1e-12:
        return float(t)
    x = alpha * t
    if x < 1e-8:
        return float(t * (1.0 - x / 2.0 + x * x / 6.0))
    return float(-np.expm1(-x) / alpha)


def effective_hamiltonian(model: LindbladModel) -> np.ndarray:
    """Non-Hermitian generator ``H - (i/2) sum_n gamma_n L_n^dag L_n``."""
    h_eff = model.hamiltonian.astype(complex).copy()
    for op, g in zip(model.lindblads, model.gammas):
        h_eff -= 0.5j * g * (op.conj().T @ op)
    return h_eff


def effective_spectrum(model: LindbladModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simultaneously diagonalize H and the weighted dissipator sum.

    Returns ``(u, energies, decays)`` with ``H = u diag(energies) u^dag`` and
    ``sum_n gamma_n L_n^dag L_n = u diag(decays) u^dag``.  Requires
    conditions (i) and (ii); degenerate H eigenspaces are split by
    diagonalizing the dissipator block inside each cluster.
    """
    h = model.hamiltonian
    weighted = np.zeros_like(h)
    for op, g in zip(model.lindblads, model.gammas):
        weighted += g * (op.conj().T @ op)
    energies, u = np.linalg.eigh(h)
    scale = max(1.0, float(np.abs(energies).max()) if energies.size else 1.0)
    decays = np.empty_like(energies)
    start = 0
    for stop in range(1, len(energies) + 1):
        if stop < len(energies) and energies[stop] - energies[start] < 1e-8 * scale:
            continue
        block = u[:, start:stop]
        sub = block.conj().T @ weighted @ block
        w_sub, v_sub = np.linalg.eigh((sub + sub.conj().T) / 2)
        u[:, start:stop] = block @ v_sub
        decays[start:stop] = w_sub
        start = stop
    residual = np.abs(u.conj().T @ weighted @ u - np.diag(decays)).max()
    if residual > 1e-8 * max(1.0, float(np.abs(weighted).max())):
        raise ConditionError(
            f"dissipator sum is not diagonal in the Hamiltonian eigenbasis (residual {residual})"
        )
    return u, energies, np.clip(decays, 0.0, None)


def effective_evolution(
    model: LindbladModel, t: float, report: ConditionReport | None = None
) -> np.ndarray:
    """Contraction ``T(t) = exp(-i t H_eff)`` built in the shared eigenbasis.

    Falls back to a dense matrix exponential with a warning when conditions
    (i) or (ii) fail.
    """
    if t < 0:
        raise ValueError("evolution time must be nonnegative")
    if report is None:
        report = check_conditions(model)
    if not (report.hamiltonian_commutes and report.dissipators_commute):
        warnings.warn(
            "commutation conditions unmet; using dense expm for T(t)",
            ConditionFallbackWarning,
        )
        return matexp(-1j * t * effective_hamiltonian(model))
    u, energies, decays = effective_spectrum(model)
    diag = np.exp(-1j * energies * t) * np.exp(-0.5 * decays * t)
    t_op = (u * diag) @ u.conj().T
    top = float(np.linalg.norm(t_op, 2))
    if top > 1.0 + CONTRACTION_TOL:
        raise ConditionError(f"T(t) is not a contraction (norm {top})")
    return t_op


def _require_conditions(report: ConditionReport) -> None:
    if not report.all_satisfied:
        raise ConditionError(
            "commutation conditions unsatisfied: " + ", ".join(report.failing())
        )


def _series_tail(x: float, order: int) -> float:
    """Upper bound sum_{m > order} x^m / m! = e^x P(order+1, x)."""
    if x <= 0.0:
        return 0.0
    return float(np.exp(x) * gammainc(order + 1, x))


def build_tp_series(model: LindbladModel, t: float, order: int) -> KrausSeries:
    """General truncated series over all index vectors of length <= order.

    The model is brought to unit-norm jump operators first (a generator
    invariant).  Terms whose operator vanishes numerically are pruned, so
    nilpotent systems terminate on their own.
    """
    if order < 0:
        raise ValueError("truncation order must be nonnegative")
    if t < 0:
        raise ValueError("evolution time must be nonnegative")
    norm_model = normalize_lindblads(model)
    report = check_conditions(norm_model)
    _require_conditions(report)
    t_op = effective_evolution(norm_model, t, report)
    f_t = f_of_t(report.alpha, t)
    n_ops = len(norm_model.lindblads)
    sqrt_gammas = [math.sqrt(g) for g in norm_model.gammas]

    terms: list[KrausTerm] = []
    frontier: list[tuple[tuple[int, ...], np.ndarray]] = [((), np.eye(model.dim, dtype=complex))]
    for m in range(order + 1):
        base = math.sqrt(f_t**m / math.factorial(m))
        if m > 0:
            frontier = [
                (indices + (k,), prod @ norm_model.lindblads[k])
                for indices, prod in frontier
                for k in range(n_ops)
            ]
            frontier = [
                (indices, prod)
                for indices, prod in frontier
                if np.abs(prod).max() >= ZERO_OPERATOR_TOL
            ]
        for indices, prod in frontier:
            weight = base * math.prod(sqrt_gammas[k] for k in indices)
            if weight == 0.0:
                continue
            terms.append(KrausTerm(m, tuple(indices), weight, t_op @ prod))
    # A vanishing frontier terminates the series exactly (every longer
    # product contains a vanishing factor), so no trace weight is discarded.
    next_frontier_zero = all(
        np.abs(prod @ norm_model.lindblads[k]).max() < ZERO_OPERATOR_TOL
        for _indices, prod in frontier
        for k in range(n_ops)
    )
    total_rate = sum(norm_model.gammas)
    tail = 0.0 if next_frontier_zero else _series_tail(f_t * total_rate, order)
    return KrausSeries(
        terms=tuple(terms),
        truncation_order=order,
        tail_bound=tail,
        dim=model.dim,
    )


def apply_series(series: KrausSeries, rho0, renormalize: bool = False) -> DensityMatrix:
    """Channel action ``sum_k K rho K^dag`` of a materialized series."""
    rho = _as_matrix(rho0)
    if rho.shape != (series.dim, series.dim):
        raise ValueError("state dimension does not match the series")
    out = np.zeros_like(rho)
    for term in series.terms:
        k = term.matrix
        out += k @ rho @ k.conj().T
    if renormalize:
        tr = float(np.trace(out).real)
        if tr <= 0.0:
            raise ValueError("cannot renormalize a trace-zero channel output")
        out = out / tr
    return classify_density(out)


def gen_hyperbolic(ell: int, m: int, theta: float, x: float) -> float:
    """Root-of-unity filtered exponential sum generalizing cosh and sinh.

    ``(1/l) theta^{-m/l} sum_k w^{-mk} exp(w^k theta^{1/l} x)`` with
    ``w = exp(2 pi i / l)``; for ``theta = 0`` the nilpotent convention
    ``x^m / m!`` applies.
    """
    if not 0 <= m < ell:
        raise ValueError("need 0 <= m < ell")
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if theta == 0.0:
        return float(x**m / math.factorial(m))
    root = np.exp(2j * np.pi / ell)
    ks = np.arange(ell)
    total = (root ** (-m * ks) * np.exp(root**ks * theta ** (1.0 / ell) * x)).sum()
    value = theta ** (-m / ell) * total / ell
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise ArithmeticError(f"imaginary residue {value.imag} in hyperbolic sum")
    return float(value.real)


def detect_group_structure(model: LindbladModel) -> GroupStructure | None:
    """Operator-level power-law detection on a unit-norm model.

    Looks for the smallest ``l <= dim`` with ``L^l`` proportional to the
    identity (theta = |c|^2) or zero (theta = 0), and verifies pairwise
    commutation up to a phase.  Returns None when any operator lacks the
    structure; absence is a valid outcome, not an error.
    """
    norm_model = normalize_lindblads(model)
    dim = norm_model.dim
    periods: list[int] = []
    thetas: list[float] = []
    for op in norm_model.lindblads:
        power = np.eye(dim, dtype=complex)
        found = False
        for ell in range(1, dim + 1):
            power = power @ op
            if np.abs(power).max() < GROUP_DETECT_TOL:
                periods.append(ell)
                thetas.append(0.0)
                found = True
                break
            c = np.trace(power) / dim
            if np.abs(power - c * np.eye(dim)).max() < GROUP_DETECT_TOL and abs(c) > GROUP_DETECT_TOL:
                periods.append(ell)
                thetas.append(float(abs(c) ** 2))
                found = True
                break
        if not found:
            return None
    for a in range(len(norm_model.lindblads)):
        for b in range(a + 1, len(norm_model.lindblads)):
            ab = norm_model.lindblads[a] @ norm_model.lindblads[b]
            ba = norm_model.lindblads[b] @ norm_model.lindblads[a]
            if np.abs(ab).max() < GROUP_DETECT_TOL and np.abs(ba).max() < GROUP_DETECT_TOL:
                continue
            if np.abs(ab).max() < GROUP_DETECT_TOL or np.abs(ba).max() < GROUP_DETECT_TOL:
                return None
            idx = np.unravel_index(np.abs(ba).argmax(), ba.shape)
            phase = ab[idx] / ba[idx]
            if abs(abs(phase) - 1.0) > GROUP_DETECT_TOL:
                return None
            if np.abs(ab - phase * ba).max() > GROUP_DETECT_TOL:
                return None
    return GroupStructure(tuple(periods), tuple(thetas))


def _group_rescaled(model: LindbladModel) -> tuple[LindbladModel, GroupStructure]:
    """Unit-norm model polished so every non-nilpotent theta is exactly 1."""
    norm_model = normalize_lindblads(model)
    structure = detect_group_structure(norm_model)
    if structure is None:
        raise ConditionError("no finite group or semigroup structure detected")
    ops = []
    gammas = []
    for op, g, ell, theta in zip(
        norm_model.lindblads, norm_model.gammas, structure.periods, structure.thetas
    ):
        if theta == 0.0:
            ops.append(op)
            gammas.append(g)
        else:
            b = theta ** (1.0 / (2 * ell))
            ops.append(op / b)
            gammas.append(b * b * g)
    polished = LindbladModel(model.hamiltonian, tuple(ops), tuple(gammas))
    thetas = tuple(0.0 if th == 0.0 else 1.0 for th in structure.thetas)
    return polished, GroupStructure(structure.periods, thetas)


def build_reduced_series(model: LindbladModel, t: float) -> KrausSeries:
    """Exact finite series for power-law structured operator sets.

    One term per power vector ``(m_1 .. m_N)`` with ``m_n < period_n`` and
    weight ``prod_n sqrt(F_{l,m}^theta(gamma_n f(t)))``; the argument is the
    accumulated jump weight, which reduces to ``gamma_n t`` on the linear
    branch.  The tail bound is zero.
    """
    if t < 0:
        raise ValueError("evolution time must be nonnegative")
    work, structure = _group_rescaled(model)
    report = check_conditions(work)
    _require_conditions(report)
    t_op = effective_evolution(work, t, report)
    f_t = f_of_t(report.alpha, t)

    terms: list[KrausTerm] = []
    for powers in itertools.product(*(range(ell) for ell in structure.periods)):
        weight = 1.0
        op = t_op
        indices: list[int] = []
        for n, m_n in enumerate(powers):
            hyp = gen_hyperbolic(structure.periods[n], m_n, structure.thetas[n], work.gammas[n] * f_t)
            weight *= math.sqrt(max(hyp, 0.0))
            for _ in range(m_n):
                op = op @ work.lindblads[n]
            indices.extend([n] * m_n)
        if weight == 0.0 or np.abs(op).max() < ZERO_OPERATOR_TOL:
            continue
        terms.append(KrausTerm(len(indices), tuple(indices), weight, op))
    max_order = sum(ell - 1 for ell in structure.periods)
    return KrausSeries(tuple(terms), max_order, 0.0, model.dim)


def build_factored_evolution(model: LindbladModel, t: float) -> np.ndarray:
    """Factored evolution operator for the abelian (all theta > 0) case.

    ``S(t) = e^{G t / 2} T(t) prod_n sum_m sqrt(e^{-g_n t} F_{l,m}(g_n t)) L_n^m``
    over the power-law rescaled operators.  The factors define the channel
    one operator at a time; applying the flat product as ``S rho S^dag``
    reintroduces cross terms between powers and is only a channel action on
    states left invariant by those cross terms (see
    :func:`apply_factored_evolution` for the channel itself).
    """
    work, structure, report = _abelian_work_model(model, t)
    total_rate = sum(work.gammas)
    s = np.exp(total_rate * t / 2) * effective_evolution(work, t, report)
    for factor in _evolution_factors(work, structure, t):
        s = s @ factor
    return s


def _abelian_work_model(model: LindbladModel, t: float):
    if t < 0:
        raise ValueError("evolution time must be nonnegative")
    work, structure = _group_rescaled(model)
    if any(structure.nilpotent):
        raise ConditionError("factored evolution requires every theta > 0")
    report = check_conditions(work)
    _require_conditions(report)
    # Factoring pulls the decay of T(t) out as exp(sum gamma_n t / 2), which
    # requires the weighted dissipator sum to be a uniform multiple of I.
    _, _, decays = effective_spectrum(work)
    total_rate = sum(work.gammas)
    if np.ptp(decays) > 1e-10 * max(1.0, total_rate):
        raise ConditionError("factored evolution requires a uniform dissipator spectrum")
    return work, structure, report


def _evolution_factors(work: LindbladModel, structure: GroupStructure, t: float) -> list[np.ndarray]:
    factors = []
    for op, g, ell in zip(work.lindblads, work.gammas, structure.periods):
        factor = np.zeros((work.dim, work.dim), dtype=complex)
        power = np.eye(work.dim, dtype=complex)
        for m, w in enumerate(factor_weights(g, ell, t)):
            factor += math.sqrt(w) * power
            power = power @ op
        factors.append(factor)
    return factors


def factor_weights(work_gamma: float, period: int, t: float) -> np.ndarray:
    """Probability weights ``e^{-g t} F_{l,m}(g t)`` of one abelian factor."""
    w = np.array(
        [math.exp(-work_gamma * t) * gen_hyperbolic(period, m, 1.0, work_gamma * t) for m in range(period)]
    )
    return np.clip(w, 0.0, None)


def apply_factored_evolution(model: LindbladModel, t: float, rho0) -> DensityMatrix:
    """Channel defined by the factored evolution, one factor at a time.

    Each factor acts as the finite Kraus sum ``sum_m w_m L^m rho (L^m)^dag``
    with the hyperbolic weights; composing the factors reproduces the
    reduced series exactly (the per-factor registers of the corresponding
    circuit keep the powers from interfering).
    """
    work, structure, report = _abelian_work_model(model, t)
    rho = _as_matrix(rho0)
    if rho.shape != (work.dim, work.dim):
        raise ValueError("state dimension does not match the model")
    u, energies, _ = effective_spectrum(work)
    unitary = (u * np.exp(-1j * energies * t)) @ u.conj().T
    out = unitary @ rho @ unitary.conj().T
    for op, g, ell in zip(work.lindblads, work.gammas, structure.periods):
        acc = np.zeros_like(out)
        power = np.eye(work.dim, dtype=complex)
        for m, w in enumerate(factor_weights(g, ell, t)):
            acc += w * (power @ out @ power.conj().T)
            power = power @ op
        out = acc
    return classify_density(out)


def series_to_json(series: KrausSeries) -> str:
    doc = {
        "dim": series.dim,
        "truncation_order": series.truncation_order,
        "tail_bound": series.tail_bound,
        "terms": [
            {
                "order": term.order,
                "indices": list(term.indices),
                "weight": term.weight,
                "operator": _matrix_to_json(term.operator),
            }
            for term in series.terms
        ],
    }
    return json.dumps(doc, sort_keys=True)


def series_from_json(text: str) -> KrausSeries:
    doc = json.loads(text)
    terms = tuple(
        KrausTerm(
            item["order"],
            tuple(item["indices"]),
            float(item["weight"]),
            _matrix_from_json(item["operator"]),
        )
        for item in doc["terms"]
    )
    return KrausSeries(terms, doc["truncation_order"], doc["tail_bound"], doc["dim"])
