"""Classical-shadow collection and persistence (the public-key side).

Each shot measures a uniformly random m-qubit subset in a randomized
setting (per-qubit Pauli bases, or one m-qubit Clifford) and the remaining
qubits in Z. Records store the full n post-rotation computational bits.
Shots draw from per-shot derived streams, so collection order or any
parallel schedule cannot change the output.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import rng as rngmod
from .errors import ConfigurationError, ParseError
from .sim import MIXED, LabState, apply_unitary, sample_lab
from .tableau import CliffordOp, random_clifford_op

FORMAT_VERSION = "v1"
PAULI = "pauli"
CLIFFORD = "clifford"

_S_DAG = np.diag([1.0, -1j])
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_ROT = {"X": _H, "Y": _H @ _S_DAG, "Z": np.eye(2, dtype=complex)}
_BASES = "XYZ"


@dataclass(frozen=True)
class ShadowRecord:
    subset: tuple[int, ...]     # sorted, |subset| = m
    setting: object             # tuple of basis chars, or a CliffordOp
    outcome: str                # n bits, qubit 0 leftmost

    def __post_init__(self):
        if list(self.subset) != sorted(set(self.subset)):
            raise ValueError("subset must be strictly increasing")


@dataclass
class ShadowSet:
    n: int
    m: int
    rule: str
    records: list
    master_seed: int
    circuit_fingerprint: str | None = None

    def __post_init__(self):
        if self.rule not in (PAULI, CLIFFORD):
            raise ValueError(f"unknown rule {self.rule!r}")
        for r in self.records:
            if len(r.subset) != self.m or len(r.outcome) != self.n:
                raise ValueError("record does not match shadow-set header")

    @property
    def T(self) -> int:
        return len(self.records)


class _PermutedBase:
    """Base amplitudes reshaped to (on-subset, off-subset) per measured subset,
    with a permuted-index -> outcome-string table."""

    def __init__(self, amps: np.ndarray, n: int, m: int):
        self.amps = amps
        self.n, self.m = n, m
        self.cache: dict[tuple, tuple] = {}

    def get(self, subset: tuple) -> tuple:
        hit = self.cache.get(subset)
        if hit is None:
            n, m = self.n, self.m
            t = self.amps.reshape([2] * n)
            t = np.moveaxis(t, subset, range(m))
            mat = np.ascontiguousarray(t).reshape(2**m, -1)
            rest = [q for q in range(n) if q not in subset]
            order = list(subset) + rest
            table = []
            for idx in range(2**n):
                bits = [""] * n
                for j, q in enumerate(order):
                    bits[q] = "01"[(idx >> (n - 1 - j)) & 1]
                table.append("".join(bits))
            if len(self.cache) > 512:
                self.cache.clear()
            hit = self.cache[subset] = (mat, table)
        return hit


def _sample_rotated(perm_mat: np.ndarray, table, u: np.ndarray, n: int, srng) -> str:
    amps = (u @ perm_mat).reshape(-1)
    cdf = np.cumsum(amps.real**2 + amps.imag**2)
    idx = min(int(np.searchsorted(cdf, srng.random() * cdf[-1], side="right")), 2**n - 1)
    return table[idx]


def _draw_subset(srng, n: int, m: int) -> tuple:
    # Fisher-Yates prefix; cheaper than Generator.choice for small m
    pool = list(range(n))
    for j in range(m):
        i = j + int(srng.integers(0, n - j))
        pool[j], pool[i] = pool[i], pool[j]
    return tuple(sorted(pool[:m]))


_ROT_KRON_CACHE: dict[tuple, np.ndarray] = {}


def _pauli_rotation(bases: tuple) -> np.ndarray:
    hit = _ROT_KRON_CACHE.get(bases)
    if hit is None:
        u = np.array([[1.0 + 0j]])
        for b in bases:
            u = np.kron(u, _ROT[b])
        hit = _ROT_KRON_CACHE[bases] = u
    return hit


def _collect(lab: LabState, m: int, T: int, seed_or_rng, rule: str, fingerprint,
             force_identity=False) -> ShadowSet:
    n = lab.n
    if not 1 <= m <= n:
        raise ConfigurationError(f"level m={m} out of range for n={n}")
    if T <= 0:
        raise ConfigurationError("empty shadow set requested (T must be positive)")
    master = rngmod.master_seed(seed_or_rng)
    perm = _PermutedBase(lab.base.amps, n, m)
    ident = CliffordOp(m, np.eye(2 * m, dtype=np.uint8), np.zeros(2 * m, dtype=np.uint8))
    noisy = lab.eps_hon > 0.0
    records = []
    for shot in range(T):
        srng = rngmod.shot_stream(master, shot)
        subset = _draw_subset(srng, n, m)
        if rule == PAULI:
            setting = tuple(_BASES[i] for i in srng.integers(0, 3, size=m))
            u = _pauli_rotation(setting)
        else:
            setting = random_clifford_op(m, srng)
            if force_identity:
                setting = ident
            u = setting.dense()
        if noisy and sample_lab(lab, srng) is MIXED:
            outcome = "".join("01"[b] for b in srng.integers(0, 2, size=n))
        else:
            mat, table = perm.get(subset)
            outcome = _sample_rotated(mat, table, u, n, srng)
        records.append(ShadowRecord(subset, setting, outcome))
    return ShadowSet(n, m, rule, records, master, fingerprint)


def collect_pauli(lab: LabState, m: int, T: int, seed_or_rng, fingerprint=None) -> ShadowSet:
    """Level-m random-Pauli shadow collection.

    Per shot: a uniform m-subset k, Z measurement off k, uniform X/Y/Z
    basis on each qubit of k. Deterministic in the master seed.
    """
    return _collect(lab, m, T, seed_or_rng, PAULI, fingerprint)


def collect_clifford(lab: LabState, m: int, T: int, seed_or_rng, fingerprint=None,
                     force_identity: bool = False) -> ShadowSet:
    """Level-m shadow collection with one uniform m-qubit Clifford per shot.

    ``force_identity`` is a test hook that replaces every sampled Clifford
    with the identity (reducing the data to plain Z-basis statistics).
    """
    return _collect(lab, m, T, seed_or_rng, CLIFFORD, fingerprint,
                    force_identity=force_identity)


def subset_frequencies(s: ShadowSet) -> dict:
    """Observed counts per measured subset (all C(n, m) subsets keyed)."""
    counts = {k: 0 for k in combinations(range(s.n), s.m)}
    for r in s.records:
        counts[r.subset] += 1
    return counts


# ---------------------------------------------------------------------------
# persistence

def _setting_text(rule, setting) -> str:
    if rule == PAULI:
        return "set=" + "".join(setting)
    tab = "".join(str(b) for b in setting.symplectic.reshape(-1))
    ph = "".join(str(b) for b in setting.phase_bits)
    return f"tab={tab} ph={ph}"


def write_shadows(s: ShadowSet, path) -> None:
    """Line-delimited text dump; round-trips bit exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(shadows_text(s))


def shadows_text(s: ShadowSet) -> str:
    fp = s.circuit_fingerprint or "-"
    lines = [f"shadowsig-shadows {FORMAT_VERSION}",
             f"n={s.n} m={s.m} rule={s.rule} T={s.T} seed={s.master_seed} fingerprint={fp}"]
    for r in s.records:
        k = ",".join(map(str, r.subset))
        lines.append(f"rec k={k} {_setting_text(s.rule, r.setting)} z={r.outcome}")
    return "\n".join(lines) + "\n"


def read_shadows(path) -> ShadowSet:
    with open(path, encoding="utf-8") as fh:
        return parse_shadows(fh.read())


def parse_shadows(text: str) -> ShadowSet:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("shadowsig-shadows "):
        raise ParseError("missing shadow-set header", 1)
    if lines[0].split()[1] != FORMAT_VERSION:
        raise ParseError(f"unsupported version {lines[0].split()[1]!r}", 1)
    if len(lines) < 2:
        raise ParseError("missing metadata line", 2)
    meta = dict(tok.split("=", 1) for tok in lines[1].split())
    try:
        n, m, T = int(meta["n"]), int(meta["m"]), int(meta["T"])
        rule = meta["rule"]
        seed = int(meta["seed"])
        fp = None if meta["fingerprint"] == "-" else meta["fingerprint"]
    except (KeyError, ValueError) as e:
        raise ParseError(f"bad metadata: {e}", 2)
    records = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        if not line.startswith("rec "):
            raise ParseError(f"expected record, got {line!r}", lineno)
        f = dict(tok.split("=", 1) for tok in line[4:].split())
        try:
            subset = tuple(int(x) for x in f["k"].split(","))
            outcome = f["z"]
        except (KeyError, ValueError) as e:
            raise ParseError(f"bad record: {e}", lineno)
        if len(subset) != m:
            raise ParseError(f"subset size {len(subset)} != m={m}", lineno)
        if len(outcome) != n or set(outcome) - {"0", "1"}:
            raise ParseError(f"outcome {outcome!r} is not an n-bit string", lineno)
        if rule == PAULI:
            if "set" not in f or len(f["set"]) != m or set(f["set"]) - set(_BASES):
                raise ParseError("bad or missing Pauli basis setting", lineno)
            setting = tuple(f["set"])
        else:
            try:
                tab = np.array([int(b) for b in f["tab"]], dtype=np.uint8).reshape(2 * m, 2 * m)
                ph = np.array([int(b) for b in f["ph"]], dtype=np.uint8)
                if ph.size != 2 * m:
                    raise ValueError("phase length")
            except (KeyError, ValueError) as e:
                raise ParseError(f"bad Clifford tableau: {e}", lineno)
            setting = CliffordOp(m, tab, ph)
        records.append(ShadowRecord(subset, setting, outcome))
    if len(records) != T:
        raise ParseError(f"header T={T} but {len(records)} records present",
                         len(lines))
    return ShadowSet(n, m, rule, records, int(meta["seed"]), fp)
