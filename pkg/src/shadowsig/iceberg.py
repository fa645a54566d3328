"""Multi-block error-detection compiler and noisy Monte-Carlo evaluator.

Each logical block of k qubits is encoded into k + l + 2 physical qubits
(two global stabilizers, optionally l promoted logicals acting as proxy
qubits). Logical rotations become two-qubit physical rotations against the
top/bottom (or proxy) qubits; in-block CZs stay inside a block and
between-block CZs compile to transversal CZ quadruples. Syndrome
"measurement" is terminal: stabilizer outcomes are sampled projectively at
the end of the circuit and failed shots are discarded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import circuits as cc
from . import rng as rngmod
from . import sim
from .errors import (ConfigurationError, InsufficientAcceptanceError,
                     ParameterError, StructuralError)

XPLUS = "Xplus"
ZZERO = "Zzero"

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULI = {"I": np.eye(2, dtype=complex), "X": _X, "Y": _Y, "Z": _Z}


def rx(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def rz(theta):
    return np.diag([np.exp(-1j * theta / 2), np.exp(1j * theta / 2)])


def rxx(theta):
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.eye(4) * c - 1j * s * np.kron(_X, _X)


def rzz(theta):
    return np.diag(np.exp(-1j * (theta / 2) * np.array([1, -1, -1, 1])))


def euler_zxz(u: np.ndarray):
    """Angles (c, b, d) with u ~ Rz(c) Rx(b) Rz(d) up to global phase."""
    det = np.linalg.det(u)
    su = u / np.sqrt(det)
    a00, a10 = su[0, 0], su[1, 0]
    b = 2.0 * math.atan2(abs(a10), abs(a00))
    if abs(a00) > 1e-12 and abs(a10) > 1e-12:
        cpd = -2.0 * np.angle(a00)
        cmd = 2.0 * (np.angle(a10) + math.pi / 2)
    elif abs(a10) <= 1e-12:
        cpd = -2.0 * np.angle(a00)
        cmd = 0.0
    else:
        cpd = 0.0
        cmd = 2.0 * (np.angle(a10) + math.pi / 2)
    return (cpd + cmd) / 2.0, b, (cpd - cmd) / 2.0


@dataclass(frozen=True)
class IcebergBlock:
    """One (optionally gauge-fixed) error-detection block.

    Physical layout within the block: qubit 0 is the top qubit t, then the
    k_logical data qubits, then the gauge qubits, and the bottom qubit b
    last. ``gauge`` lists (parent logical index, fix) pairs; parent logical
    indices run over data qubits first, gauge qubits after.
    """
    k_logical: int
    gauge: tuple = ()

    def __post_init__(self):
        if self.k_logical < 1:
            raise ConfigurationError("need at least one logical qubit")
        if (self.k_parent % 2) != 0:
            raise ConfigurationError(
                "the two global stabilizers commute only for an even number "
                f"of encoded qubits (got k_parent={self.k_parent})")
        kinds = [g[1] for g in self.gauge]
        if any(k not in (XPLUS, ZZERO) for k in kinds):
            raise ConfigurationError(f"unknown gauge fix in {self.gauge}")
        idx = [g[0] for g in self.gauge]
        if len(set(idx)) != len(idx) or any(not self.k_logical <= i < self.k_parent
                                            for i in idx):
            raise ConfigurationError("gauge fixes must name distinct trailing slots")

    @property
    def k_parent(self) -> int:
        return self.k_logical + len(self.gauge)

    @property
    def physical(self) -> int:
        return self.k_parent + 2

    @property
    def top(self) -> int:
        return 0

    @property
    def bottom(self) -> int:
        return self.physical - 1

    def data(self, i: int) -> int:
        """Physical index of parent logical slot i (data or gauge)."""
        return 1 + i

    def proxy(self, kind: str):
        for i, k in self.gauge:
            if k == kind:
                return self.data(i)
        return None

    def stabilizers(self):
        """(name, pauli string over the block register) pairs."""
        n = self.physical
        out = [("SX", "X" * n), ("SZ", "Z" * n)]
        for i, kind in self.gauge:
            s = ["I"] * n
            if kind == XPLUS:
                s[self.top] = "X"
                s[self.data(i)] = "X"
                out.append((f"GX{i}", "".join(s)))
            else:
                s[self.bottom] = "Z"
                s[self.data(i)] = "Z"
                out.append((f"GZ{i}", "".join(s)))
        return out

    def check_weights(self):
        return {name: sum(1 for p in s if p != "I") for name, s in self.stabilizers()}


def _pauli_string_matrix_apply(amps, pauli: str, offset: int, n: int):
    for j, p in enumerate(pauli):
        if p != "I":
            amps = sim.apply_unitary(amps, _PAULI[p], (offset + j,), n)
    return amps


def _gate(support, u, layer, label=cc.CLIFF2):
    return cc.Gate(tuple(support), u, label, layer)


def _layered(gates_with_prefs, n):
    """ASAP-schedule a gate sequence into layers."""
    lists: list[list] = []
    free = [0] * n
    for support, u, label in gates_with_prefs:
        at = max(free[q] for q in support)
        while len(lists) <= at:
            lists.append([])
        lists[at].append((support, u, label))
        for q in support:
            free[q] = at + 1
    layers = []
    for li, row in enumerate(lists):
        layers.append(tuple(cc.Gate(tuple(s), u, lab, li) for s, u, lab in row))
    return tuple(layers)


def encoder_arbitrary(k: int) -> cc.Circuit:
    """Encode an arbitrary k-qubit state (on wires 1..k) into the block.

    Parity of the data accumulates on the top qubit, then the bottom qubit
    fans out the global X stabilizer: 2k + 1 CNOTs in total.
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    blk = IcebergBlock(k)
    seq = []
    for i in range(k):
        seq.append(((blk.data(i), blk.top), CNOT, cc.CLIFF2))
    seq.append(((blk.bottom,), cc.H_MAT, cc.H))
    seq.append(((blk.bottom, blk.top), CNOT, cc.CLIFF2))
    for i in range(k):
        seq.append(((blk.bottom, blk.data(i)), CNOT, cc.CLIFF2))
    return cc.Circuit(blk.physical, _layered(seq, blk.physical), "encoder", 0)


def encoder_ft_plus(k: int) -> cc.Circuit:
    """Fault-tolerant all-plus initializer: k + 3 CNOTs, depth ceil(k/2) + 3.

    Bell pair between top and bottom, a flag ancilla (last wire,
    post-selected on 0) checking the pair, then a balanced fan-in of the
    plus-state data wires.
    """
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    blk = IcebergBlock(k)
    n = blk.physical + 1
    anc = n - 1
    seq = [((blk.top,), cc.H_MAT, cc.H)]
    for i in range(blk.k_parent):
        seq.append(((blk.data(i),), cc.H_MAT, cc.H))
    seq.append(((blk.top, blk.bottom), CNOT, cc.CLIFF2))
    seq.append(((blk.top, anc), CNOT, cc.CLIFF2))
    seq.append(((blk.bottom, anc), CNOT, cc.CLIFF2))
    targets = [blk.top, blk.bottom]
    for i in range(blk.k_parent):
        seq.append(((blk.data(i), targets[i % 2]), CNOT, cc.CLIFF2))
    return cc.Circuit(n, _layered(seq, n), "encoder", 0)


def encoder_ft_gauge(k: int) -> cc.Circuit:
    """Gauge-fixed initializer: slots k-2 -> |+_L>, k-1 -> |0_L>.

    The output factorizes into an even-weight register on (top, the first
    k-1 data slots) and a Bell pair on (the |0_L> slot, bottom): k + 4
    CNOTs and two-qubit depth ceil(k/2) + 4, with one flag ancilla tapping
    both halves while their internal parities are still deterministic.
    """
    if k < 3:
        raise ConfigurationError("gauge-fixed initializer needs k >= 3")
    blk = IcebergBlock(k - 2, ((k - 2, XPLUS), (k - 1, ZZERO)))
    n = blk.physical + 1
    anc = n - 1
    gx, gz = blk.data(k - 2), blk.data(k - 1)
    layers = []
    ones = [((blk.top,), cc.H_MAT, cc.H), ((gz,), cc.H_MAT, cc.H)]
    ones += [((blk.data(i),), cc.H_MAT, cc.H) for i in range(k - 2)]
    layers.append(ones)
    layers.append([((blk.top, gx), CNOT, cc.CLIFF2), ((gz, blk.bottom), CNOT, cc.CLIFF2)])
    for src in (blk.top, gx, gz, blk.bottom):
        layers.append([((src, anc), CNOT, cc.CLIFF2)])
    targets = [blk.top, gx]
    row = []
    for i in range(k - 2):
        row.append(((blk.data(i), targets[i % 2]), CNOT, cc.CLIFF2))
        if len(row) == 2:
            layers.append(row)
            row = []
    if row:
        layers.append(row)
    gate_lists = [[cc.Gate(tuple(s), u, lab, li) for s, u, lab in layer]
                  for li, layer in enumerate(layers)]
    return cc.Circuit(n, tuple(tuple(l) for l in gate_lists), "encoder", 0)


def gauge_block(k_logical: int, n_proxies: int = 0) -> IcebergBlock:
    """Block with the requested number of proxy pairs appended.

    ``n_proxies`` = 0 gives the plain block; 1 adds one |+_L> and one
    |0_L> gauge qubit (an X proxy and a Z proxy).
    """
    gauge = []
    for p in range(n_proxies):
        gauge.append((k_logical + 2 * p, XPLUS))
        gauge.append((k_logical + 2 * p + 1, ZZERO))
    return IcebergBlock(k_logical, tuple(gauge))


def translate_logical(block: IcebergBlock, op, alternate_counter=None):
    """Physical realization of one logical operation within a block.

    ``op`` is one of ("RX", i, theta), ("RZ", i, theta),
    ("RXX", i, j, theta), ("RZZ", i, j, theta), ("CZ", i, j), ("H_ALL",).
    Returns a list of (support, unitary, label) with block-local indices.
    With gauge proxies available, X/Z-rotation partners alternate between
    the top/bottom qubit and the proxies so a width-w single-axis layer
    compiles to depth ceil(w / (1 + n_proxies)).
    """
    kind = op[0]
    counter = alternate_counter if alternate_counter is not None else {}
    if kind == "RX":
        _, i, theta = op
        partners = [block.top] + ([block.proxy(XPLUS)] if block.proxy(XPLUS) is not None else [])
        c = counter.get("x", 0)
        counter["x"] = c + 1
        partner = partners[c % len(partners)]
        return [((partner, block.data(i)), rxx(theta), cc.CUSTOM)]
    if kind == "RZ":
        _, i, theta = op
        partners = [block.bottom] + ([block.proxy(ZZERO)] if block.proxy(ZZERO) is not None else [])
        c = counter.get("z", 0)
        counter["z"] = c + 1
        partner = partners[c % len(partners)]
        return [((partner, block.data(i)), rzz(theta), cc.CUSTOM)]
    if kind == "RXX":
        _, i, j, theta = op
        return [((block.data(i), block.data(j)), rxx(theta), cc.CUSTOM)]
    if kind == "RZZ":
        _, i, j, theta = op
        return [((block.data(i), block.data(j)), rzz(theta), cc.CUSTOM)]
    if kind == "CZ":
        _, i, j = op
        di, dj, b = block.data(i), block.data(j), block.bottom
        return [((di, dj), cc.CZ_MAT, cc.CZ), ((di, b), cc.CZ_MAT, cc.CZ),
                ((dj, b), cc.CZ_MAT, cc.CZ), ((b,), _Z, cc.CUSTOM)]
    if kind == "H_ALL":
        out = [((block.top, block.bottom), SWAP, cc.CLIFF2)]
        for q in range(block.physical):
            out.append(((q,), cc.H_MAT, cc.H))
        return out
    raise ParameterError(f"unsupported logical operation {op!r}")


def inter_block_cz(block_a: IcebergBlock, off_a: int, i: int,
                   block_b: IcebergBlock, off_b: int, j: int):
    """Transversal CZ quadruple implementing a between-block logical CZ."""
    di = off_a + block_a.data(i)
    dj = off_b + block_b.data(j)
    ba = off_a + block_a.bottom
    bb = off_b + block_b.bottom
    return [((di, dj), cc.CZ_MAT, cc.CZ), ((di, bb), cc.CZ_MAT, cc.CZ),
            ((ba, dj), cc.CZ_MAT, cc.CZ), ((ba, bb), cc.CZ_MAT, cc.CZ)]


@dataclass
class PhysicalProgram:
    """Encoded realization of a logical circuit applied to |+>^n.

    The fault-tolerant initializers prepare every logical qubit in the
    plus state, so the reference (and the unencoded baseline) is the
    logical circuit acting on the all-plus input.
    """
    blocks: list
    offsets: list
    encoders: list               # block-local circuits incl. flag ancilla
    body: cc.Circuit             # on the full physical register
    stabilizers: list            # (name, pauli string on full register)
    decoders: list               # block-local inverse encoders (no ancilla)
    logical: cc.Circuit
    n_physical: int

    def ideal_logical_state(self) -> sim.StateVector:
        return sim.apply(self.logical, sim.plus_state(self.logical.n))

    def physical_two_qubit_count(self) -> int:
        enc = sum(sum(1 for g in e.gates() if g.width == 2) for e in self.encoders)
        dec = sum(sum(1 for g in d.gates() if g.width == 2) for d in self.decoders)
        return enc + dec + self.body.two_qubit_count()

    def physical_two_qubit_depth(self) -> int:
        enc = max((e.two_qubit_depth() for e in self.encoders), default=0)
        dec = max((d.two_qubit_depth() for d in self.decoders), default=0)
        return enc + dec + self.body.two_qubit_depth()


def _logical_ops(circuit: cc.Circuit, blocks: int):
    """Interpret a blocked ansatz circuit as per-block logical operations."""
    bs = circuit.n // blocks
    ops = []
    for layer in circuit.layers:
        row = []
        for g in layer:
            if g.width == 1:
                q = g.support[0]
                c, b, d = euler_zxz(g.unitary)
                steps = []
                if abs(d) > 1e-12:
                    steps.append(("RZ", q, d))
                if abs(b) > 1e-12:
                    steps.append(("RX", q, b))
                if abs(c) > 1e-12:
                    steps.append(("RZ", q, c))
                if not steps:
                    continue
                row.append(("1q", q, steps))
            elif g.label == cc.CZ:
                a, bq = g.support
                row.append(("cz", a, bq))
            else:
                raise StructuralError(
                    "assemble expects the blocked ansatz gate set (1q + CZ)")
        ops.append(row)
    return ops, bs


def assemble(blocks: list, logical: cc.Circuit) -> PhysicalProgram:
    """Compile a blocked logical circuit onto error-detection blocks.

    In-block CZs become CZ triples against the block's bottom qubit,
    between-block CZs become transversal CZ quadruples, and single-qubit
    gates become two-qubit rotations (partnered with top/bottom or proxy
    qubits). Every block's stabilizers are measured terminally and a
    decoder is appended.
    """
    nblocks = len(blocks)
    ops, bs = _logical_ops(logical, nblocks)
    if any(b.k_logical != bs for b in blocks):
        raise ConfigurationError("block sizes do not match the logical circuit")
    offsets = []
    off = 0
    for b in blocks:
        offsets.append(off)
        off += b.physical
    n_phys = off

    seq = []
    counters = [{} for _ in blocks]
    for row in ops:
        for op in row:
            if op[0] == "1q":
                _, q, steps = op
                blk = q // bs
                for step in steps:
                    kind, _, theta = step
                    for sup, u, lab in translate_logical(
                            blocks[blk], (kind, q % bs, theta), counters[blk]):
                        seq.append((tuple(offsets[blk] + s for s in sup), u, lab))
            else:
                _, a, bq = op
                ba, bb = a // bs, bq // bs
                if ba == bb:
                    for sup, u, lab in translate_logical(blocks[ba], ("CZ", a % bs, bq % bs)):
                        seq.append((tuple(offsets[ba] + s for s in sup), u, lab))
                else:
                    seq.extend(inter_block_cz(blocks[ba], offsets[ba], a % bs,
                                              blocks[bb], offsets[bb], bq % bs))
    body = cc.Circuit(n_phys, _layered(seq, n_phys), "body", logical.seed)

    stabs = []
    for blk, off in zip(blocks, offsets):
        for name, s in blk.stabilizers():
            full = "I" * off + s + "I" * (n_phys - off - blk.physical)
            stabs.append((f"b{offsets.index(off)}:{name}", full))
    encoders = [encoder_ft_gauge(b.k_parent) if b.gauge else encoder_ft_plus(b.k_parent)
                for b in blocks]
    decoders = [_inverse(encoder_arbitrary(b.k_parent)) for b in blocks]
    return PhysicalProgram(blocks, offsets, encoders, body, stabs, decoders,
                           logical, n_phys)


def _inverse(circuit: cc.Circuit) -> cc.Circuit:
    seq = []
    for g in reversed(list(circuit.gates())):
        seq.append((g.support, g.unitary.conj().T, g.label))
    return cc.Circuit(circuit.n, _layered(seq, circuit.n), "decoder", circuit.seed)


# ---------------------------------------------------------------------------
# noisy evaluation

_PAULI_PAIRS = [(a, b) for a in "IXYZ" for b in "IXYZ"][1:]   # 15 non-identity


def _apply_pauli_pair(amps, pair, support, n):
    for p, q in zip(pair, support):
        if p != "I":
            amps = sim.apply_unitary(amps, _PAULI[p], (q,), n)
    return amps


@dataclass
class NoisyRunResult:
    shots: int
    accepted: int
    acceptance: float
    fidelity: float              # mean post-selected decoded fidelity
    fidelity_stderr: float
    per_shot_fidelity: list = field(default_factory=list)


def run_noisy(prog: PhysicalProgram, p2: float, shots: int, seed_or_rng) -> NoisyRunResult:
    """Monte-Carlo depolarizing run with terminal detection and decoding.

    After every two-qubit gate a uniform non-identity two-qubit Pauli is
    inserted with probability p2. Shots failing the flag, any terminal
    stabilizer, or the decoder's top/bottom/gauge post-selection are
    discarded; survivors contribute their exact decoded-state fidelity
    against the ideal logical state.
    """
    master = rngmod.master_seed(seed_or_rng)
    ideal_logical = prog.ideal_logical_state().amps

    body_2q = [g for g in prog.body.gates() if g.width == 2]
    enc_2q = [sum(1 for g in e.gates() if g.width == 2) for e in prog.encoders]

    cache: dict = {}
    accepted = 0
    fids = []
    for shot in range(shots):
        rng = rngmod.shot_stream(master, shot)
        enc_faults = []
        for bi, count in enumerate(enc_2q):
            f = {}
            for gidx in range(count):
                if p2 > 0 and rng.random() < p2:
                    f[gidx] = _PAULI_PAIRS[int(rng.integers(0, 15))]
            enc_faults.append(f)
        body_faults = {}
        for gidx in range(len(body_2q)):
            if p2 > 0 and rng.random() < p2:
                body_faults[gidx] = _PAULI_PAIRS[int(rng.integers(0, 15))]
        key = (tuple(tuple(sorted(f.items())) for f in enc_faults),
               tuple(sorted(body_faults.items())))
        hit = cache.get(key)
        if hit is None:
            if len(cache) > 20000:
                cache.clear()
            hit = cache[key] = _run_one(prog, enc_faults, body_faults,
                                        ideal_logical)
        outcome = hit
        if outcome["deterministic"]:
            ok, fid = outcome["accept"], outcome["fidelity"]
        else:
            ok, fid = _sample_outcome(outcome, rng)
        if ok:
            accepted += 1
            fids.append(fid)
    if accepted == 0:
        raise InsufficientAcceptanceError("no shots survived post-selection")
    fids = np.asarray(fids)
    return NoisyRunResult(shots, accepted, accepted / shots, float(fids.mean()),
                          float(fids.std() / math.sqrt(len(fids))), list(fids))


def _sample_outcome(outcome, rng):
    if rng.random() >= outcome["p_accept"]:
        return False, 0.0
    return True, outcome["fidelity"]


def _run_one(prog: PhysicalProgram, enc_faults, body_faults, ideal_logical):
    """Deterministic part of one shot: final acceptance probability and the
    post-selected decoded fidelity (both independent of sampling order)."""
    n = prog.n_physical
    bs = prog.blocks[0].k_logical
    # encode blocks (flag acceptance folded into p_accept)
    amps = np.array([1.0 + 0j])
    p_accept = 1.0
    for blk, enc, faults in zip(prog.blocks, prog.encoders, enc_faults):
        ne = enc.n
        block_amps = sim.zero_state(ne).amps
        g2 = 0
        for g in enc.gates():
            block_amps = sim.apply_unitary(block_amps, g.unitary, g.support, ne)
            if g.width == 2:
                if g2 in faults:
                    block_amps = _apply_pauli_pair(block_amps, faults[g2], g.support, ne)
                g2 += 1
        t = block_amps.reshape([2] * ne)
        flag0 = np.ascontiguousarray(t[..., 0]).reshape(-1)
        p0 = float(np.vdot(flag0, flag0).real)
        p_accept *= p0
        if p0 < 1e-12:
            return {"deterministic": True, "accept": False, "fidelity": 0.0,
                    "p_accept": 0.0}
        amps = np.kron(amps, flag0 / math.sqrt(p0))
    # body
    g2 = 0
    for g in prog.body.gates():
        amps = sim.apply_unitary(amps, g.unitary, g.support, n)
        if g.width == 2:
            if g2 in body_faults:
                amps = _apply_pauli_pair(amps, body_faults[g2], g.support, n)
            g2 += 1
    # terminal stabilizer projections (commuting; accumulate acceptance)
    for _, pauli in prog.stabilizers:
        s_amps = amps
        for j, p in enumerate(pauli):
            if p != "I":
                s_amps = sim.apply_unitary(s_amps, _PAULI[p], (j,), n)
        p_plus = float((0.5 * (1.0 + np.vdot(amps, s_amps))).real)
        p_plus = min(max(p_plus, 0.0), 1.0)
        p_accept *= p_plus
        if p_plus < 1e-12:
            return {"deterministic": True, "accept": False, "fidelity": 0.0,
                    "p_accept": 0.0}
        amps = 0.5 * (amps + s_amps)
        amps = amps / np.linalg.norm(amps)
    # decode blocks and post-select top/bottom/gauge wires
    for bi, (blk, off, dec) in enumerate(zip(prog.blocks, prog.offsets, prog.decoders)):
        for g in dec.gates():
            amps = sim.apply_unitary(amps, g.unitary,
                                     tuple(off + q for q in g.support), n)
    project = []
    for blk, off in zip(prog.blocks, prog.offsets):
        project.append((off + blk.top, np.array([1.0, 0.0], dtype=complex)))
        project.append((off + blk.bottom, np.array([1.0, 0.0], dtype=complex)))
        for i, kind in blk.gauge:
            vec = (np.array([1.0, 1.0], dtype=complex) / math.sqrt(2)
                   if kind == XPLUS else np.array([1.0, 0.0], dtype=complex))
            project.append((off + blk.data(i), vec))
    t = amps.reshape([2] * n)
    # contract ancillary wires in descending order so axis indices stay valid;
    # the surviving axes are the logical data wires in ascending order
    for q, vec in sorted(project, reverse=True):
        t = np.tensordot(vec.conj(), t, axes=([0], [q]))
    flat = t.reshape(-1)
    p_dec = float(np.vdot(flat, flat).real)
    p_accept *= p_dec
    if p_dec < 1e-12:
        return {"deterministic": True, "accept": False, "fidelity": 0.0,
                "p_accept": 0.0}
    flat = flat / math.sqrt(p_dec)
    # remaining axes are the logical wires in ascending physical order,
    # which matches the logical circuit's qubit order block by block
    fid = float(abs(np.vdot(ideal_logical, flat)) ** 2)
    return {"deterministic": False, "accept": None, "fidelity": fid,
            "p_accept": p_accept}


def run_unencoded(logical: cc.Circuit, p2: float, shots: int, seed_or_rng) -> NoisyRunResult:
    """Baseline: the bare logical circuit on |+>^n under the same noise model.

    Every shot is accepted (no detection); fidelity is the exact overlap
    with the ideal output state.
    """
    master = rngmod.master_seed(seed_or_rng)
    n = logical.n
    ideal = sim.apply(logical, sim.plus_state(n)).amps
    two_q = [g for g in logical.gates() if g.width == 2]
    cache: dict = {}
    fids = []
    for shot in range(shots):
        rng = rngmod.shot_stream(master, shot)
        faults = {}
        for gidx in range(len(two_q)):
            if p2 > 0 and rng.random() < p2:
                faults[gidx] = _PAULI_PAIRS[int(rng.integers(0, 15))]
        key = tuple(sorted(faults.items()))
        hit = cache.get(key)
        if hit is None:
            if len(cache) > 20000:
                cache.clear()
            amps = sim.plus_state(n).amps
            g2 = 0
            for g in logical.gates():
                amps = sim.apply_unitary(amps, g.unitary, g.support, n)
                if g.width == 2:
                    if g2 in faults:
                        amps = _apply_pauli_pair(amps, faults[g2], g.support, n)
                    g2 += 1
            hit = cache[key] = float(abs(np.vdot(ideal, amps)) ** 2)
        fids.append(hit)
    fids = np.asarray(fids)
    return NoisyRunResult(shots, shots, 1.0, float(fids.mean()),
                          float(fids.std() / math.sqrt(len(fids))), list(fids))
