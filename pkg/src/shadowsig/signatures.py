"""Single-bit and multi-bit digital signatures built on shadow certification.

Key generation samples secret circuits from a declared ensemble; the public
key is one shadow set per secret circuit. Signing reveals the circuits for
the transmitted codeword bits only; verification replays the certification
phase against the published shadows (spot-checking a random subset of
positions in the multi-bit protocol).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import certify as ct
from . import circuits as cc
from . import ecc
from . import rng as rngmod
from . import shadows as sh
from . import sim
from .errors import ConfigurationError, ParameterError, ParseError, StructuralError

FORMAT_VERSION = "v1"


@dataclass(frozen=True)
class EnsembleSpec:
    """Declared secret-circuit ensemble; sampling is uniform given a seed."""
    kind: str                  # experiment | brickwork | hypercube
    n: int
    blocks: int = 2
    depth: int = 2
    k_local: int = 2

    def sample(self, seed: int) -> cc.Circuit:
        if self.kind == "experiment":
            return cc.build_experiment_ansatz(self.n, self.blocks, self.depth, seed)
        if self.kind == "brickwork":
            return cc.build_brickwork(self.n, self.depth, seed)
        if self.kind == "hypercube":
            c = cc.build_hypercube_circuit(self.k_local, self.depth, seed=seed,
                                           instantiate="clifford")
            if c.n != self.n:
                raise ConfigurationError(f"hypercube gives n={c.n}, spec says {self.n}")
            return c
        raise ConfigurationError(f"unknown ensemble kind {self.kind!r}")

    def header(self) -> str:
        return (f"kind={self.kind} n={self.n} blocks={self.blocks} "
                f"depth={self.depth} k_local={self.k_local}")

    @classmethod
    def from_header(cls, fields: dict) -> "EnsembleSpec":
        return cls(fields["kind"], int(fields["n"]), int(fields["blocks"]),
                   int(fields["depth"]), int(fields["k_local"]))


@dataclass
class SecretKey:
    ensemble: EnsembleSpec
    bits: int                        # message length k (1 for single-bit)
    M: int                           # positions (1 for single-bit)
    circuits: dict                   # (b, j) -> Circuit
    master_seed: int
    code: ecc.LinearCode | None = None


@dataclass
class PublicKey:
    ensemble: EnsembleSpec
    bits: int
    M: int
    m: int
    rule: str
    T: int
    eps_hon: float
    shadow_sets: dict                # (b, j) -> ShadowSet
    code: ecc.LinearCode | None = None


@dataclass
class SignedMessage:
    codeword: np.ndarray             # M bits ([b] for single-bit)
    circuits: dict                   # j -> Circuit


@dataclass
class VerificationOutcome:
    verdict: str                     # Certified | Failed | Abort
    reason: str = ""
    reports: dict = field(default_factory=dict)
    checked: tuple = ()
    message: np.ndarray | None = None


def skgen(ensemble: EnsembleSpec, bits: int = 1,
          code: ecc.LinearCode | None = None, seed: int = 0) -> SecretKey:
    """Sample the secret circuits: 2 for a single bit, 2M with a code."""
    if bits == 1:
        M = 1
    else:
        if code is None:
            raise ConfigurationError("multi-bit keys need an error-detection code")
        if code.k != bits:
            raise ConfigurationError(f"code dimension {code.k} != message bits {bits}")
        M = code.M
    circuits = {}
    for b in (0, 1):
        for j in range(M):
            sub = int(rngmod.stream(seed, 1, b, j).integers(0, 2**63 - 1))
            circuits[(b, j)] = ensemble.sample(sub)
    return SecretKey(ensemble, bits, M, circuits, seed, code)


def pkgen(sk: SecretKey, m: int, T: int, eps_hon: float, seed: int,
          rule: str = sh.CLIFFORD) -> PublicKey:
    """Collect one shadow set per secret circuit from the declared lab state."""
    collect = sh.collect_pauli if rule == sh.PAULI else sh.collect_clifford
    sets = {}
    for (b, j), circ in sk.circuits.items():
        lab = sim.LabState(sim.run(circ), eps_hon)
        sub = int(rngmod.stream(seed, 2, b, j).integers(0, 2**63 - 1))
        sets[(b, j)] = collect(lab, m, T, sub, fingerprint=cc.fingerprint(circ))
    return PublicKey(sk.ensemble, sk.bits, sk.M, m, rule, T, eps_hon, sets, sk.code)


def sign(sk: SecretKey, msg) -> SignedMessage:
    """Reveal exactly the circuits for the transmitted codeword bits."""
    if sk.bits == 1:
        b = int(msg)
        if b not in (0, 1):
            raise ParameterError("single-bit message must be 0 or 1")
        return SignedMessage(np.array([b], dtype=np.uint8),
                             {0: sk.circuits[(b, 0)]})
    msg = np.asarray(msg, dtype=np.uint8)
    if msg.shape != (sk.bits,):
        raise ParameterError(f"message length {msg.shape} != k={sk.bits}")
    cw = ecc.encode(sk.code, msg)
    return SignedMessage(cw, {j: sk.circuits[(int(cw[j]), j)] for j in range(sk.M)})


def verify_single(pk: PublicKey, m_s: SignedMessage,
                  params: ct.SecurityParams,
                  rule: str = ct.MEAN_RULE) -> VerificationOutcome:
    """Certify the revealed circuit against the shadows of the signed bit."""
    b = int(m_s.codeword[0])
    try:
        report = ct.certify(pk.shadow_sets[(b, 0)], m_s.circuits[0], params, rule)
    except (StructuralError, ParseError) as e:
        return VerificationOutcome("Abort", reason=str(e))
    return VerificationOutcome(report.verdict, reports={0: report}, checked=(0,),
                               message=m_s.codeword[:1] if report.verdict == "Certified" else None)


def verify_multi(pk: PublicKey, m_s: SignedMessage, V: int,
                 params: ct.SecurityParams, seed_or_rng,
                 rule: str = ct.MEAN_RULE) -> VerificationOutcome:
    """Spot-check V positions of a multi-bit signature.

    Aborts on a non-codeword, certifies a uniformly random size-V subset
    (without replacement), and decodes on success.
    """
    if pk.code is None:
        raise ConfigurationError("public key carries no code; use verify_single")
    if V > pk.M:
        raise ParameterError(f"V={V} exceeds M={pk.M}")
    cw = np.asarray(m_s.codeword, dtype=np.uint8)
    if ecc.chk(pk.code, cw):
        return VerificationOutcome("Abort", reason="Chk: not a codeword")
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) \
        else np.random.default_rng(seed_or_rng)
    # Fisher-Yates prefix = uniform subset without replacement
    pool = list(range(pk.M))
    for j in range(V):
        i = j + int(rng.integers(0, pk.M - j))
        pool[j], pool[i] = pool[i], pool[j]
    checked = tuple(sorted(pool[:V]))
    reports = {}
    for j in checked:
        if j not in m_s.circuits:
            return VerificationOutcome("Abort", reason=f"position {j} missing",
                                       reports=reports, checked=checked)
        try:
            rep = ct.certify(pk.shadow_sets[(int(cw[j]), j)], m_s.circuits[j],
                             params, rule)
        except (StructuralError, ParseError) as e:
            return VerificationOutcome("Abort", reason=f"position {j}: {e}",
                                       reports=reports, checked=checked)
        reports[j] = rep
        if rep.verdict != "Certified":
            return VerificationOutcome("Abort",
                                       reason=f"certification failed at position {j}",
                                       reports=reports, checked=checked)
    return VerificationOutcome("Certified", reports=reports, checked=checked,
                               message=ecc.decode(pk.code, cw))


@dataclass(frozen=True)
class SecurityPlan:
    V: int
    delta1_max: float    # per-check risk budget on altered bits
    delta2_max: float    # per-check risk budget on honest bits


def plan_security(eps_target: float, code: ecc.LinearCode,
                  d: int | None = None) -> SecurityPlan:
    """Spot-check budget: V = max{2, ceil(ln(2/eps)/d_r)} plus per-check deltas."""
    if not 0 < eps_target < 1:
        raise ParameterError("eps_target must lie in (0, 1)")
    dr = (d if d is not None else
          (code.d_known if code.d_known is not None else ecc.min_distance(code))) / code.M
    V = max(2, math.ceil(math.log(2.0 / eps_target) / dr))
    return SecurityPlan(V, eps_target / 2.0, eps_target / V)


# ---------------------------------------------------------------------------
# key/signature bundles (structured text)

def _bundle(sections) -> str:
    out = []
    for name, header, body in sections:
        out.append(f"begin-{name} {header}".rstrip())
        out.append(body.rstrip("\n"))
        out.append(f"end-{name}")
    return "\n".join(out) + "\n"


def _split_bundle(lines, start):
    """Yield (name, fields, body_lines) for begin/end sections."""
    i = start
    while i < len(lines):
        line = lines[i]
        if not line.strip():
            i += 1
            continue
        if not line.startswith("begin-"):
            raise ParseError(f"expected begin- section, got {line!r}", i + 1)
        head = line.split()
        name = head[0][len("begin-"):]
        fields = dict(tok.split("=", 1) for tok in head[1:])
        j = i + 1
        body = []
        while j < len(lines) and lines[j] != f"end-{name}":
            body.append(lines[j])
            j += 1
        if j >= len(lines):
            raise ParseError(f"unterminated section {name}", i + 1)
        yield name, fields, body
        i = j + 1


def write_sk(sk: SecretKey, path) -> None:
    sections = []
    if sk.code is not None:
        sections.append(("code", "", ecc.code_text(sk.code)))
    for (b, j), circ in sorted(sk.circuits.items()):
        sections.append(("circuit", f"b={b} j={j}", cc.serialize(circ)))
    head = (f"shadowsig-sk {FORMAT_VERSION}\n"
            f"bits={sk.bits} M={sk.M} seed={sk.master_seed} {sk.ensemble.header()}\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(head + _bundle(sections))


def read_sk(path) -> SecretKey:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("shadowsig-sk "):
        raise ParseError("missing sk header", 1)
    meta = dict(tok.split("=", 1) for tok in lines[1].split())
    ens = EnsembleSpec.from_header(meta)
    code = None
    circuits = {}
    for name, fields, body in _split_bundle(lines, 2):
        if name == "code":
            code = ecc.parse_code("\n".join(body) + "\n")
        elif name == "circuit":
            circuits[(int(fields["b"]), int(fields["j"]))] = cc.parse("\n".join(body) + "\n")
        else:
            raise ParseError(f"unexpected section {name!r} in sk file")
    return SecretKey(ens, int(meta["bits"]), int(meta["M"]), circuits,
                     int(meta["seed"]), code)


def write_pk(pk: PublicKey, path) -> None:
    sections = []
    if pk.code is not None:
        sections.append(("code", "", ecc.code_text(pk.code)))
    for (b, j), ss in sorted(pk.shadow_sets.items()):
        sections.append(("shadows", f"b={b} j={j}", sh.shadows_text(ss)))
    head = (f"shadowsig-pk {FORMAT_VERSION}\n"
            f"bits={pk.bits} M={pk.M} m={pk.m} rule={pk.rule} T={pk.T} "
            f"eps_hon={pk.eps_hon:.17g} {pk.ensemble.header()}\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(head + _bundle(sections))


def read_pk(path) -> PublicKey:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("shadowsig-pk "):
        raise ParseError("missing pk header", 1)
    meta = dict(tok.split("=", 1) for tok in lines[1].split())
    ens = EnsembleSpec.from_header(meta)
    code = None
    sets = {}
    for name, fields, body in _split_bundle(lines, 2):
        if name == "code":
            code = ecc.parse_code("\n".join(body) + "\n")
        elif name == "shadows":
            sets[(int(fields["b"]), int(fields["j"]))] = \
                sh.parse_shadows("\n".join(body) + "\n")
        else:
            raise ParseError(f"unexpected section {name!r} in pk file")
    return PublicKey(ens, int(meta["bits"]), int(meta["M"]), int(meta["m"]),
                     meta["rule"], int(meta["T"]), float(meta["eps_hon"]),
                     sets, code)


def write_sig(m_s: SignedMessage, path) -> None:
    cw = "".join(str(int(b)) for b in m_s.codeword)
    sections = [("circuit", f"j={j}", cc.serialize(circ))
                for j, circ in sorted(m_s.circuits.items())]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"shadowsig-sig {FORMAT_VERSION}\ncodeword={cw}\n" + _bundle(sections))


def read_sig(path) -> SignedMessage:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("shadowsig-sig "):
        raise ParseError("missing sig header", 1)
    meta = dict(tok.split("=", 1) for tok in lines[1].split())
    cw = np.array([int(b) for b in meta["codeword"]], dtype=np.uint8)
    circuits = {}
    for name, fields, body in _split_bundle(lines, 2):
        if name != "circuit":
            raise ParseError(f"unexpected section {name!r} in sig file")
        circuits[int(fields["j"])] = cc.parse("\n".join(body) + "\n")
    return SignedMessage(cw, circuits)
