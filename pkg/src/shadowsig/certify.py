"""Certification mathematics.

Conditional target states, per-shot overlap scores, the averaged-projector
operator whose fixed point is the hypothesis state, relaxation times,
sample-complexity planners, concentration bounds, and noise-aware
thresholds. Dense spectral work is capped at ``sim.SPECTRAL_CAP`` qubits.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import minimize_scalar

from . import sim
from .circuits import Circuit
from .errors import (DataError, InfiniteTauError, NoGapError, ParameterError,
                     ResourceError, StructuralError, ZeroBranchError)
from .shadows import CLIFFORD, PAULI, ShadowRecord, ShadowSet
from .sim import StateVector

VAR_BOUND_CLIFFORD = 3.25  # per-shot variance cap for the Clifford rule

IMPROVED = "improved"
BASELINE = "baseline"

MEAN_RULE = "mean"
LOWER_BOUND_RULE = "lower_bound"

DEPOLARIZING = "depolarizing"
GENERAL = "general"


# ---------------------------------------------------------------------------
# result containers

@dataclass
class OverlapEstimate:
    omega_hat: float
    per_shot: np.ndarray
    T: int
    variance_hat: float
    skipped: int = 0


@dataclass(frozen=True)
class MarkovAnalysis:
    tau: float
    lambda2: float
    spectrum_size: int


@dataclass(frozen=True)
class NoiseBound:
    model: str
    adv_fidelity_bound: float
    eps_noisy: float


@dataclass
class SecurityParams:
    eps_CNL: float
    eps_hon: float
    eps: float                 # certification error (noise-aware)
    eps_prime: float           # threshold slack; omega threshold = 1 - eps_prime
    tau_star: float
    delta: float
    m: int
    T: int
    noise_model: str = DEPOLARIZING

    def __post_init__(self):
        if not 0 < self.eps_prime <= self.eps / self.tau_star + 1e-12:
            raise ParameterError(
                f"eps_prime={self.eps_prime} violates 0 < eps' <= eps/tau*"
                f" = {self.eps / self.tau_star}")

    @property
    def threshold(self) -> float:
        return 1.0 - self.eps_prime

    @classmethod
    def plan(cls, eps_CNL, eps_hon, n, tau_star, delta, m,
             noise_model=DEPOLARIZING, eps_prime=None):
        """Derive the noise-aware certification error, threshold, and T."""
        nb = noise_bound(eps_CNL, eps_hon, n, noise_model)
        eps = nb.eps_noisy
        if eps_prime is None:
            eps_prime = 3.0 * eps / (4.0 * tau_star)
        T = sample_complexity("certification", m, eps, delta, tau=tau_star)
        return cls(eps_CNL, eps_hon, eps, eps_prime, tau_star, delta, m, T,
                   noise_model)


@dataclass
class CertificationReport:
    omega_hat: float
    phi_hat: float
    lower_bound: float
    threshold: float
    verdict: str                     # "Certified" | "Failed"
    rule: str
    T: int
    skipped: int
    variance_hat: float
    params: SecurityParams | None = None

    def to_text(self) -> str:
        lines = [
            "shadowsig-report v1",
            f"omega_hat={self.omega_hat:.10g}",
            f"phi_hat={self.phi_hat:.10g}",
            f"lower_bound={self.lower_bound:.10g}",
            f"threshold={self.threshold:.10g}",
            f"verdict={self.verdict}",
            f"rule={self.rule}",
            f"T={self.T}",
            f"skipped={self.skipped}",
            f"variance_hat={self.variance_hat:.10g}",
        ]
        if self.params is not None:
            p = self.params
            lines.append(
                f"params eps_CNL={p.eps_CNL:.10g} eps_hon={p.eps_hon:.10g} "
                f"eps={p.eps:.10g} eps_prime={p.eps_prime:.10g} "
                f"tau_star={p.tau_star:.10g} delta={p.delta:.10g} m={p.m} "
                f"T={p.T} noise={p.noise_model}")
        return "\n".join(lines) + "\n"

    CSV_HEADER = ("omega_hat,phi_hat,lower_bound,threshold,verdict,rule,"
                  "T,skipped,variance_hat")

    def csv_row(self) -> str:
        return (f"{self.omega_hat:.10g},{self.phi_hat:.10g},"
                f"{self.lower_bound:.10g},{self.threshold:.10g},"
                f"{self.verdict},{self.rule},{self.T},{self.skipped},"
                f"{self.variance_hat:.10g}")


# ---------------------------------------------------------------------------
# conditional states and per-shot overlaps

def conditional_state(psi: StateVector, subset, z_off: str) -> np.ndarray:
    """Normalized amplitudes of the target conditioned on off-subset bits.

    ``z_off`` lists the outcomes of the qubits outside ``subset`` in
    increasing qubit order. Raises ZeroBranchError on zero mass.
    """
    n = psi.n
    subset = tuple(subset)
    m = len(subset)
    t = psi.amps.reshape([2] * n)
    t = np.moveaxis(t, subset, range(m)).reshape(2**m, -1)
    col = int(z_off, 2) if z_off else 0
    v = t[:, col]
    mass = float(np.vdot(v, v).real)
    if mass <= 1e-24:
        raise ZeroBranchError(f"no amplitude on branch z={z_off} of {subset}")
    return np.array(v / math.sqrt(mass))


def _off_bits(record: ShadowRecord, n: int) -> str:
    return "".join(record.outcome[q] for q in range(n) if q not in record.subset)


_EIGENSTATE = {
    ("Z", "0"): np.array([1.0, 0.0], dtype=complex),
    ("Z", "1"): np.array([0.0, 1.0], dtype=complex),
    ("X", "0"): np.array([1.0, 1.0], dtype=complex) / math.sqrt(2),
    ("X", "1"): np.array([1.0, -1.0], dtype=complex) / math.sqrt(2),
    ("Y", "0"): np.array([1.0, 1.0j], dtype=complex) / math.sqrt(2),
    ("Y", "1"): np.array([1.0, -1.0j], dtype=complex) / math.sqrt(2),
}


def omega_pauli(record: ShadowRecord, psi: StateVector) -> float:
    """Overlap score <cond| (x) (3|s_i><s_i| - I) |cond> for one Pauli record."""
    m = len(record.subset)
    v = conditional_state(psi, record.subset, _off_bits(record, psi.n))
    w = v.reshape([2] * m) if m > 1 else v
    for j, basis in enumerate(record.setting):
        s = _EIGENSTATE[(basis, record.outcome[record.subset[j]])]
        factor = 3.0 * np.outer(s, s.conj()) - np.eye(2)
        if m == 1:
            w = factor @ w
        else:
            w = np.tensordot(factor, w, axes=([1], [j]))
            w = np.moveaxis(w, 0, j)
    return float(np.vdot(v, w.reshape(-1)).real)


def omega_clifford(record: ShadowRecord, psi: StateVector) -> float:
    """Overlap score (2^m + 1)|<b|U|cond>|^2 - 1 for one Clifford record."""
    m = len(record.subset)
    v = conditional_state(psi, record.subset, _off_bits(record, psi.n))
    b_idx = int("".join(record.outcome[q] for q in record.subset), 2)
    amp = record.setting.dense()[b_idx] @ v
    return float((2**m + 1) * (amp.real**2 + amp.imag**2) - 1.0)


def estimate_overlap(shadows: ShadowSet, psi: StateVector,
                     zero_branch_tolerance: float = 1e-3) -> OverlapEstimate:
    """Empirical shadow overlap across a shadow set.

    Zero-mass branches are skipped and counted; more than
    ``zero_branch_tolerance`` of the shots failing is a data error.
    """
    if shadows.n != psi.n:
        raise StructuralError(f"shadows n={shadows.n} but state n={psi.n}")
    score = omega_pauli if shadows.rule == PAULI else omega_clifford
    per_shot = []
    skipped = 0
    # group by (subset, off-bits): the conditional state is shared
    cond_cache: dict[tuple, np.ndarray] = {}
    for rec in shadows.records:
        key = (rec.subset, _off_bits(rec, shadows.n))
        try:
            if key not in cond_cache:
                if len(cond_cache) > 100000:
                    cond_cache.clear()
                cond_cache[key] = conditional_state(psi, rec.subset, key[1])
            per_shot.append(_score_cached(score, rec, psi, cond_cache[key]))
        except ZeroBranchError:
            skipped += 1
    if skipped > max(1, int(zero_branch_tolerance * shadows.T)):
        raise DataError(f"{skipped}/{shadows.T} shots hit zero-mass branches")
    if skipped:
        warnings.warn(f"skipped {skipped} zero-branch shots", stacklevel=2)
    arr = np.asarray(per_shot)
    return OverlapEstimate(float(arr.mean()), arr, len(arr),
                           float(arr.var()), skipped)


def _score_cached(score, rec, psi, cond):
    if score is omega_clifford:
        m = len(rec.subset)
        b_idx = int("".join(rec.outcome[q] for q in rec.subset), 2)
        amp = rec.setting.dense()[b_idx] @ cond
        return float((2**m + 1) * (amp.real**2 + amp.imag**2) - 1.0)
    m = len(rec.subset)
    w = cond.reshape([2] * m) if m > 1 else cond
    for j, basis in enumerate(rec.setting):
        s = _EIGENSTATE[(basis, rec.outcome[rec.subset[j]])]
        factor = 3.0 * np.outer(s, s.conj()) - np.eye(2)
        if m == 1:
            w = factor @ w
        else:
            w = np.tensordot(factor, w, axes=([1], [j]))
            w = np.moveaxis(w, 0, j)
    return float(np.vdot(cond, w.reshape(-1)).real)


# ---------------------------------------------------------------------------
# dense operator constructions

def _check_spectral(n: int):
    if n > sim.SPECTRAL_CAP:
        raise ResourceError(f"n={n} exceeds spectral cap {sim.SPECTRAL_CAP}")


def _conditional_matrix(psi: StateVector, subset) -> np.ndarray:
    """(2^{n-m}, 2^m) matrix: row z_off holds the on-subset amplitudes."""
    n, m = psi.n, len(subset)
    t = psi.amps.reshape([2] * n)
    t = np.moveaxis(t, subset, range(n - m, n))
    return np.ascontiguousarray(t).reshape(-1, 2**m)


def _accumulate_blockdiag(L: np.ndarray, blocks: np.ndarray, subset, n: int):
    """Add the permuted-basis block-diagonal operator into natural-order L."""
    m = len(subset)
    z = 2 ** (n - m)
    d = np.zeros((z, 2**m, z, 2**m), dtype=complex)
    idx = np.arange(z)
    d[idx, :, idx, :] = blocks
    order = [q for q in range(n) if q not in subset] + list(subset)
    t = d.reshape([2] * (2 * n))
    t = np.moveaxis(t, list(range(n)), order)
    t = np.moveaxis(t, [n + i for i in range(n)], [n + q for q in order])
    L += t.reshape(2**n, 2**n)


def build_L(psi: StateVector, m: int) -> np.ndarray:
    """Averaged conditional-projector operator (improved construction).

    L = C(n,m)^{-1} sum_k sum_z |z><z| (x) |cond_{k,z}><cond_{k,z}|; the
    hypothesis state is a +1 fixed point and all eigenvalues lie in [0,1].
    Zero-mass branches contribute nothing.
    """
    n = psi.n
    _check_spectral(n)
    L = np.zeros((2**n, 2**n), dtype=complex)
    for subset in combinations(range(n), m):
        mat = _conditional_matrix(psi, subset)
        mass = (np.abs(mat) ** 2).sum(axis=1)
        safe = np.where(mass > 1e-24, mass, 1.0)
        v = mat / np.sqrt(safe)[:, None]
        v[mass <= 1e-24] = 0.0
        blocks = v[:, :, None] * v.conj()[:, None, :]
        _accumulate_blockdiag(L, blocks, subset, n)
    return L / math.comb(n, m)


def build_L_baseline(psi: StateVector, m: int) -> np.ndarray:
    """Prior-art operator: antipodal two-point projectors over levels 1..m.

    Kept for relaxation-time comparison; coincides with :func:`build_L`
    at m = 1.
    """
    n = psi.n
    _check_spectral(n)
    L = np.zeros((2**n, 2**n), dtype=complex)
    terms = sum(math.comb(n, r) for r in range(1, m + 1))
    for r in range(1, m + 1):
        for subset in combinations(range(n), r):
            mat = _conditional_matrix(psi, subset)
            z = mat.shape[0]
            dim = 2**r
            blocks = np.zeros((z, dim, dim), dtype=complex)
            for l1 in range(dim // 2):
                l2 = dim - 1 - l1  # bitwise complement of l1 within r bits
                pair = mat[:, [l1, l2]]
                mass = (np.abs(pair) ** 2).sum(axis=1)
                safe = np.where(mass > 1e-24, mass, 1.0)
                w = pair / np.sqrt(safe)[:, None]
                w[mass <= 1e-24] = 0.0
                outer = w[:, :, None] * w.conj()[:, None, :]
                blocks[:, [[l1], [l2]], [l1, l2]] += outer
            _accumulate_blockdiag(L, blocks, subset, n)
    return L / terms


def relaxation_time(psi: StateVector, m: int, variant: str = IMPROVED) -> MarkovAnalysis:
    """tau = 1/(1 - lambda_2) from the spectrum of the averaged operator.

    The chain's transition matrix is a similarity transform of L, so the
    spectrum (hence tau) is read off L directly. Raises InfiniteTauError
    when the top eigenvalue is degenerate (disconnected chain).
    """
    L = build_L(psi, m) if variant == IMPROVED else build_L_baseline(psi, m)
    w = np.linalg.eigvalsh(0.5 * (L + L.conj().T))
    lam_max, lam2 = float(w[-1]), float(w[-2])
    if abs(lam_max - 1.0) > 1e-8:
        raise StructuralError(f"top eigenvalue {lam_max} differs from 1")
    if lam2 >= 1.0 - 1e-12:
        raise InfiniteTauError(f"second eigenvalue {lam2} is degenerate with 1")
    return MarkovAnalysis(tau=1.0 / (1.0 - lam2), lambda2=lam2, spectrum_size=2**psi.n)


# ---------------------------------------------------------------------------
# planners and bounds

def sample_complexity(mode: str, m: int, eps: float, delta: float,
                      tau: float | None = None) -> int:
    """Shot budgets for the four estimator/certification regimes."""
    if eps <= 0 or not 0 < delta < 1:
        raise ParameterError("need eps > 0 and 0 < delta < 1")
    log2d = math.log(2.0 / delta)
    if mode == "baseline":
        t = 2.0 ** (4 * m - 1) / eps**2 * log2d
    elif mode == "pauli":
        t = 2.0 ** (2 * m + 1) / eps**2 * log2d
    elif mode == "clifford":
        t = (6.5 / eps**2 + 2.0 * 2**m / (3.0 * eps)) * log2d
    elif mode == "certification":
        if tau is None:
            raise ParameterError("certification mode requires tau")
        t = (104.0 * tau**2 / eps**2 + 8.0 * tau * 2**m / (3.0 * eps)) * log2d
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    return math.ceil(t)


def _bernstein_exponent(T: int, m: int, a: float) -> float:
    return T * a * a / (2 * VAR_BOUND_CLIFFORD + (2.0 / 3.0) * 2**m * a)


def soundness_delta(T: int, m: int, eps: float, tau: float, eps_prime: float) -> float:
    """One-sided risk that a low-fidelity state beats the threshold.

    Inverts T >= (6.5/a^2 + 2*2^m/(3a)) ln(1/delta) at a = eps/tau - eps'.
    """
    a = eps / tau - eps_prime
    if a <= 0:
        raise ParameterError("eps/tau must exceed eps_prime")
    return math.exp(-_bernstein_exponent(T, m, a))


def soundness_samples(m: int, eps: float, tau: float, eps_prime: float,
                      delta: float) -> int:
    a = eps / tau - eps_prime
    if a <= 0:
        raise ParameterError("eps/tau must exceed eps_prime")
    return math.ceil((6.5 / a**2 + 2.0 * 2**m / (3.0 * a)) * math.log(1.0 / delta))


def bernstein_lower_bound(est: OverlapEstimate, m: int, delta: float) -> float:
    """One-sided lower confidence bound on E[omega] under the variance cap.

    Solves exp(-T e^2 / (6.5 + (2/3) 2^m e)) = delta for e in closed form
    and returns omega_hat - e.
    """
    if est.T < 1:
        raise ParameterError("need at least one shot")
    if not 0 < delta <= 1:
        raise ParameterError("delta must lie in (0, 1]")
    ln = math.log(1.0 / delta)
    if ln == 0.0:
        return est.omega_hat
    b = (2.0 / 3.0) * 2**m * ln
    eps = (b + math.sqrt(b * b + 4.0 * est.T * 2 * VAR_BOUND_CLIFFORD * ln)) / (2.0 * est.T)
    return est.omega_hat - eps


def noise_bound(eps_CNL: float, eps_hon: float, n: int, model: str) -> NoiseBound:
    """Adversarial-fidelity ceiling against the noisy lab state.

    Depolarizing: 1 - (eps_CNL - eps_hon) + eps_hon 2^{-n}. General noise
    maximizes (sqrt((1-eps_hon)(1-e)) + sqrt(eps_hon e))^2 over the
    adversary's true infidelity e in [eps_CNL, 1] by bracketed search.
    eps_noisy = 1 - ceiling in both cases.
    """
    if not 0 <= eps_hon <= 1 or not 0 <= eps_CNL <= 1:
        raise ParameterError("infidelities must be probabilities")
    if eps_hon > eps_CNL:
        raise NoGapError(f"eps_hon={eps_hon} > eps_CNL={eps_CNL}: no certification gap")
    if model == DEPOLARIZING:
        bound = 1.0 - (eps_CNL - eps_hon) + eps_hon * 2.0 ** (-n)
    elif model == GENERAL:
        def neg(e):
            return -(math.sqrt((1 - eps_hon) * (1 - e)) + math.sqrt(eps_hon * e)) ** 2
        if eps_CNL >= 1.0:
            bound = -neg(1.0)
        else:
            res = minimize_scalar(neg, bounds=(eps_CNL, 1.0), method="bounded",
                                  options={"xatol": 1e-10})
            bound = max(-res.fun, -neg(eps_CNL), -neg(1.0))
    else:
        raise ParameterError(f"unknown noise model {model!r}")
    bound = min(bound, 1.0)
    return NoiseBound(model, bound, 1.0 - bound)


def fidelity_from_overlap(omega_hat: float, m: int) -> float:
    """Estimated fidelity 2^m/(2^m - 1) (omega - 2^{-m}); 2*omega-1 at m=1."""
    return 2**m / (2**m - 1) * (omega_hat - 2.0**(-m))


# ---------------------------------------------------------------------------
# the certification phase

def certify(shadows: ShadowSet, target: Circuit, params: SecurityParams,
            rule: str = MEAN_RULE) -> CertificationReport:
    """Score the shadow set against the state prepared by ``target``.

    Decision rules: ``mean`` certifies when omega_hat >= 1 - eps', and
    ``lower_bound`` when the one-sided Bernstein bound clears the same
    threshold.
    """
    if shadows.n != target.n:
        raise StructuralError(f"shadows n={shadows.n} but circuit n={target.n}")
    if rule not in (MEAN_RULE, LOWER_BOUND_RULE):
        raise ParameterError(f"unknown decision rule {rule!r}")
    psi = sim.run(target)
    est = estimate_overlap(shadows, psi)
    lower = bernstein_lower_bound(est, shadows.m, params.delta)
    stat = est.omega_hat if rule == MEAN_RULE else lower
    verdict = "Certified" if stat >= params.threshold else "Failed"
    return CertificationReport(
        omega_hat=est.omega_hat,
        phi_hat=fidelity_from_overlap(est.omega_hat, shadows.m),
        lower_bound=lower,
        threshold=params.threshold,
        verdict=verdict,
        rule=rule,
        T=est.T,
        skipped=est.skipped,
        variance_hat=est.variance_hat,
        params=params,
    )
