"""Circuit data model, random ensembles, and light-cone graph analysis."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from . import tableau
from .errors import ConfigurationError, ParseError, StructuralError

FORMAT_VERSION = "v1"

# gate labels
H = "H"
ZPXH = "ZPXH"        # Z^p X^(1/2), p in {-1, -3/4, ..., 3/4}
CZ = "CZ"
CLIFF1 = "CLIFF1"
CLIFF2 = "CLIFF2"
HAAR4 = "HAAR4"
CUSTOM = "CUSTOM"
LABELS = (H, ZPXH, CZ, CLIFF1, CLIFF2, HAAR4, CUSTOM)
_IMPLIED = (H, ZPXH, CZ)  # matrix derivable from label (+param); others carry it

ZPXH_EXPONENTS = tuple(Fraction(i - 4, 4) for i in range(8))

H_MAT = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CZ_MAT = np.diag([1, 1, 1, -1]).astype(complex)
X_HALF = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])


def zpxhalf(p: Fraction) -> np.ndarray:
    """Matrix of Z^p X^(1/2) (half X rotation followed by a Z power)."""
    zp = np.diag([1.0, np.exp(1j * np.pi * float(p))])
    return zp @ X_HALF


@dataclass(frozen=True, eq=False)
class Gate:
    support: tuple[int, ...]
    unitary: np.ndarray
    label: str
    layer: int
    param: Fraction | None = None

    def __post_init__(self):
        u = np.ascontiguousarray(self.unitary, dtype=complex)
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)
        object.__setattr__(self, "support", tuple(int(q) for q in self.support))

    @property
    def width(self) -> int:
        return len(self.support)

    def same_values(self, other: "Gate") -> bool:
        return (
            self.support == other.support
            and self.label == other.label
            and self.layer == other.layer
            and self.param == other.param
            and np.array_equal(self.unitary, other.unitary)
        )


@dataclass(frozen=True)
class Circuit:
    n: int
    layers: tuple[tuple[Gate, ...], ...]
    ensemble_tag: str = "custom"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(tuple(l) for l in self.layers))
        for li, layer in enumerate(self.layers):
            used = set()
            for g in layer:
                if g.layer != li:
                    raise StructuralError(f"gate layer index {g.layer} != position {li}")
                if len(set(g.support)) != g.width or any(q < 0 or q >= self.n for q in g.support):
                    raise StructuralError(f"bad support {g.support} for n={self.n}")
                if used & set(g.support):
                    raise StructuralError(f"overlapping supports in layer {li}")
                used |= set(g.support)
                dim = 2**g.width
                if g.unitary.shape != (dim, dim):
                    raise StructuralError(f"unitary shape {g.unitary.shape} for width {g.width}")
                if np.abs(g.unitary @ g.unitary.conj().T - np.eye(dim)).max() > 1e-10:
                    raise StructuralError(f"gate at layer {li} is not unitary to 1e-10")

    def gates(self):
        for layer in self.layers:
            yield from layer

    @property
    def num_gates(self) -> int:
        return sum(len(l) for l in self.layers)

    def two_qubit_depth(self) -> int:
        return sum(1 for l in self.layers if any(g.width >= 2 for g in l))

    def two_qubit_count(self) -> int:
        return sum(1 for g in self.gates() if g.width >= 2)

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return (
            self.n == other.n
            and self.ensemble_tag == other.ensemble_tag
            and self.seed == other.seed
            and len(self.layers) == len(other.layers)
            and all(
                len(a) == len(b) and all(x.same_values(y) for x, y in zip(a, b))
                for a, b in zip(self.layers, other.layers)
            )
        )

    def __hash__(self):
        return hash((self.n, self.ensemble_tag, self.seed, self.num_gates))


def _relayer(gate_lists: list[list[Gate]]) -> tuple[tuple[Gate, ...], ...]:
    """Drop empty layers and renumber gate.layer to match positions."""
    out = []
    for layer in gate_lists:
        if not layer:
            continue
        li = len(out)
        out.append(tuple(g if g.layer == li else replace(g, layer=li) for g in layer))
    return tuple(out)


def _one_qubit_clifford(idx: int) -> np.ndarray:
    sp_idx, pauli = divmod(int(idx), 4)
    op = tableau.CliffordOp(1, tableau.symplectic_from_index(sp_idx, 1),
                            np.array([pauli & 1, (pauli >> 1) & 1], dtype=np.uint8))
    return op.dense()


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def build_experiment_ansatz(n: int, blocks: int, depth: int, seed: int) -> Circuit:
    """Blocked random circuit in the shape used for key generation.

    ``depth`` counts two-qubit CZ layers. Each CZ layer is preceded by a
    pair of single-qubit layers (a uniformly random one-qubit Clifford per
    qubit, then a Z^p X^(1/2) with uniformly random exponent), and the CZ
    layers alternate between random in-block pairings and random
    between-block pairings; a trailing single-qubit double layer closes the
    circuit. Deterministic in ``seed``.
    """
    if n % blocks != 0:
        raise ConfigurationError(f"n={n} not divisible by blocks={blocks}")
    if depth < 1:
        raise ConfigurationError("depth must be >= 1")
    bs = n // blocks
    rng = np.random.default_rng(seed)
    gate_lists: list[list[Gate]] = []

    def single_qubit_double():
        li = len(gate_lists)
        idx = rng.integers(0, 24, size=n)
        gate_lists.append([Gate((q,), _one_qubit_clifford(idx[q]), CLIFF1, li) for q in range(n)])
        li = len(gate_lists)
        pidx = rng.integers(0, 8, size=n)
        gate_lists.append(
            [Gate((q,), zpxhalf(ZPXH_EXPONENTS[pidx[q]]), ZPXH, li, ZPXH_EXPONENTS[pidx[q]])
             for q in range(n)]
        )

    def cz_layer(pairs):
        li = len(gate_lists)
        gate_lists.append([Gate(tuple(sorted(p)), CZ_MAT, CZ, li) for p in pairs])

    for r in range(depth):
        single_qubit_double()
        if blocks == 1 or r % 2 == 0:
            pairs = []
            for b in range(blocks):
                perm = rng.permutation(np.arange(b * bs, (b + 1) * bs))
                pairs += [(int(perm[2 * i]), int(perm[2 * i + 1])) for i in range(bs // 2)]
        else:
            order = rng.permutation(blocks)
            pairs = []
            for i in range(0, blocks - 1, 2):
                a, b = int(order[i]), int(order[i + 1])
                pa = rng.permutation(np.arange(a * bs, (a + 1) * bs))
                pb = rng.permutation(np.arange(b * bs, (b + 1) * bs))
                pairs += [(int(x), int(y)) for x, y in zip(pa, pb)]
        cz_layer(pairs)
    single_qubit_double()
    return Circuit(n, _relayer(gate_lists), "experiment", seed)


def build_cz_rounds(n: int, blocks: int, depth: int, seed: int) -> Circuit:
    """CZ-only variant of the blocked ansatz (no single-qubit layers).

    Useful when comparing encoded against unencoded execution under a
    noise model that only charges two-qubit gates.
    """
    full = build_experiment_ansatz(n, blocks, depth, seed)
    lists = [[g for g in layer if g.label == CZ] for layer in full.layers]
    return Circuit(n, _relayer(lists), "experiment-cz", seed)


def build_hypercube_circuit(k: int, d: int, extra_layers: int = 0, seed: int = 0,
                            instantiate: str = "identity") -> Circuit:
    """Depth-d circuit on k^d qubits whose light cones saturate exactly at depth d.

    Layer ``l`` groups qubits that agree in every base-k digit except digit
    ``l`` (least significant is digit 0) and applies one k-qubit gate per
    group. Gates default to identity placeholders; ``instantiate`` may be
    "haar" or "clifford" when the circuit will actually be simulated.
    ``extra_layers`` appends further layers cycling through the digits.
    """
    if k < 2:
        raise ConfigurationError("hypercube locality k must be >= 2")
    if d < 1:
        raise ConfigurationError("hypercube depth d must be >= 1")
    n = k**d
    rng = np.random.default_rng(seed)
    gate_lists: list[list[Gate]] = []
    for li in range(d + extra_layers):
        digit = li % d
        stride = k**digit
        gates = []
        for base in range(n):
            if (base // stride) % k != 0:
                continue
            support = tuple(base + v * stride for v in range(k))
            if instantiate == "haar":
                u = haar_unitary(2**k, rng)
                label = HAAR4 if k == 2 else CUSTOM
            elif instantiate == "clifford":
                u = tableau.random_clifford_op(k, rng).dense()
                label = CLIFF2 if k == 2 else CUSTOM
            else:
                u = np.eye(2**k, dtype=complex)
                label = CUSTOM
            gates.append(Gate(support, u, label, li))
        gate_lists.append(gates)
    return Circuit(n, _relayer(gate_lists), "hypercube", seed)


def build_brickwork(n: int, depth: int, seed: int, gate_family=None) -> Circuit:
    """Brickwork circuit; gates Haar-random or drawn from a finite family.

    ``gate_family`` is a sequence of 4x4 unitaries; drawing is uniform.
    """
    rng = np.random.default_rng(seed)
    gate_lists: list[list[Gate]] = []
    for li in range(depth):
        off = li % 2
        gates = []
        for a in range(off, n - 1, 2):
            if gate_family is not None:
                u = gate_family[int(rng.integers(0, len(gate_family)))]
                label = CLIFF2
            else:
                u = haar_unitary(4, rng)
                label = HAAR4
            gates.append(Gate((a, a + 1), u, label, li))
        gate_lists.append(gates)
    return Circuit(n, _relayer(gate_lists), "brickwork", seed)


# ---------------------------------------------------------------------------
# light cones and pivots

@dataclass(frozen=True)
class CausalSets:
    forward: tuple[frozenset, ...]
    backward: tuple[frozenset, ...]
    forward_prefix: tuple[tuple[frozenset, ...], ...]   # [q][num layers crossed]
    backward_prefix: tuple[tuple[frozenset, ...], ...]


def _cone(layers, n, q, reverse=False):
    seq = reversed(layers) if reverse else layers
    cur = {q}
    prefix = [frozenset(cur)]
    for layer in seq:
        for g in layer:
            if cur & set(g.support):
                cur = cur | set(g.support)
        prefix.append(frozenset(cur))
    return prefix


def causal_sets(c: Circuit) -> CausalSets:
    """Forward and backward light cones with per-layer prefixes (BFS on the gate DAG)."""
    fwd = tuple(tuple(_cone(c.layers, c.n, q)) for q in range(c.n))
    bwd = tuple(tuple(_cone(c.layers, c.n, q, reverse=True)) for q in range(c.n))
    return CausalSets(
        forward=tuple(p[-1] for p in fwd),
        backward=tuple(p[-1] for p in bwd),
        forward_prefix=fwd,
        backward_prefix=bwd,
    )


FRONT = "front"
BACK = "back"


@dataclass(frozen=True)
class PivotReport:
    gate: Gate | None
    pivot_pair: tuple[int, int] | None
    side: str
    exists: bool
    # per gate wire, the output (front) / input (back) qubits reachable only
    # through the gate; supplementary detail for the inversion test
    lost_map: dict | None = None


def outer_gates(c: Circuit, side: str) -> list[Gate]:
    """Gates with no other gate before (front) / after (back) on any of their wires."""
    out = []
    for li, layer in enumerate(c.layers):
        for g in layer:
            others = c.layers[:li] if side == FRONT else c.layers[li + 1:]
            if not any(set(h.support) & set(g.support) for ly in others for h in ly):
                out.append(g)
    return out


def _without(c: Circuit, gate: Gate) -> list:
    return [[h for h in layer if h is not gate] for layer in c.layers]


def find_pivot(c: Circuit, side: str = FRONT) -> PivotReport:
    """First outer gate whose removal disconnects one of its wires from some qubit.

    The returned pair (q, q') has q at the input boundary and q' at the
    output boundary; every path q -> q' runs through the gate. Expects a
    compressed circuit (no consecutive same-support gates).
    """
    for g in outer_gates(c, side):
        reduced = _without(c, g)
        lost_map = {}
        first_pair = None
        for q in g.support:
            rev = side == BACK
            full = _cone(c.layers, c.n, q, reverse=rev)[-1]
            part = _cone(reduced, c.n, q, reverse=rev)[-1]
            lost = tuple(sorted(full - part))
            if lost:
                lost_map[q] = lost
                if first_pair is None:
                    first_pair = (q, lost[0]) if side == FRONT else (lost[0], q)
        if first_pair is not None:
            return PivotReport(g, first_pair, side, True, lost_map)
    return PivotReport(None, None, side, False)


# ---------------------------------------------------------------------------
# compression

def _compress_runs(c: Circuit):
    """Group maximal runs of same-support consecutive gates, in time order."""
    runs: list[list[Gate]] = []
    last_on_wire: dict[int, int] = {}
    for g in c.gates():
        idxs = {last_on_wire.get(q) for q in g.support}
        prev = idxs.pop() if len(idxs) == 1 else None
        if prev is not None and runs[prev][-1].support == g.support:
            runs[prev].append(g)
        else:
            runs.append([g])
            prev = len(runs) - 1
        for q in g.support:
            last_on_wire[q] = prev
    return runs


def compress(c: Circuit) -> Circuit:
    """Merge consecutive same-support gates into composite gates (matrix product)."""
    runs = _compress_runs(c)
    merged: dict[int, Gate] = {}
    for i, run in enumerate(runs):
        if len(run) == 1:
            merged[id(run[0])] = run[0]
        else:
            u = run[0].unitary
            for g in run[1:]:
                u = g.unitary @ u
            merged[id(run[0])] = Gate(run[0].support, u, CUSTOM, run[0].layer)
    keep = {id(run[0]) for run in runs}
    gate_lists = [[merged[id(g)] for g in layer if id(g) in keep] for layer in c.layers]
    return Circuit(c.n, _relayer(gate_lists), c.ensemble_tag, c.seed)


def decompress(c: Circuit, template: Circuit) -> Circuit:
    """Spread composite gates of ``c`` over the layer layout of ``template``.

    Each composite lands on the first slot of its run, identity gates pad
    the rest; single gates map one to one.
    """
    if c.n != template.n:
        raise StructuralError(f"qubit count mismatch: {c.n} vs {template.n}")
    runs = _compress_runs(template)
    seq = list(c.gates())
    if len(seq) != len(runs) or any(g.support != run[0].support for g, run in zip(seq, runs)):
        raise StructuralError("gate support sequence does not match template runs")
    assign: dict[int, Gate] = {}
    for g, run in zip(seq, runs):
        assign[id(run[0])] = replace(g, layer=run[0].layer)
        for extra in run[1:]:
            assign[id(extra)] = Gate(extra.support, np.eye(2**extra.width, dtype=complex),
                                     CUSTOM, extra.layer)
    gate_lists = [[assign[id(g)] for g in layer] for layer in template.layers]
    return Circuit(c.n, _relayer(gate_lists), template.ensemble_tag, c.seed)


# ---------------------------------------------------------------------------
# serialization

def _fmt_complex(z: complex) -> str:
    return f"{z.real:.17g},{z.imag:.17g}"


def _fmt_matrix(u: np.ndarray) -> str:
    return ";".join("_".join(_fmt_complex(z) for z in row) for row in u)


def serialize(c: Circuit) -> str:
    """Canonical structured-text form; matrices stored to 17 significant digits."""
    lines = [f"shadowsig-circuit {FORMAT_VERSION}",
             f"n={c.n} ensemble={c.ensemble_tag} seed={c.seed}"]
    for g in c.gates():
        rec = f"gate layer={g.layer} support={','.join(map(str, g.support))} label={g.label}"
        if g.label == ZPXH:
            rec += f" p={g.param}"
        elif g.label not in _IMPLIED:
            rec += f" matrix={_fmt_matrix(g.unitary)}"
        lines.append(rec)
    return "\n".join(lines) + "\n"


def _parse_fields(body: str, lineno: int) -> dict:
    out = {}
    for tok in body.split(" "):
        if "=" not in tok:
            raise ParseError(f"expected key=value, got {tok!r}", lineno)
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def _parse_matrix(text: str, width: int, lineno: int) -> np.ndarray:
    dim = 2**width
    rows = text.split(";")
    if len(rows) != dim:
        raise ParseError(f"matrix has {len(rows)} rows, expected {dim}", lineno)
    out = np.empty((dim, dim), dtype=complex)
    for i, row in enumerate(rows):
        ents = row.split("_")
        if len(ents) != dim:
            raise ParseError(f"matrix row {i} has {len(ents)} entries, expected {dim}", lineno)
        for j, ent in enumerate(ents):
            try:
                re, im = ent.split(",")
                out[i, j] = complex(float(re), float(im))
            except ValueError:
                raise ParseError(f"bad complex entry {ent!r}", lineno)
    return out


def parse(text: str) -> Circuit:
    """Inverse of :func:`serialize`, with line diagnostics on malformed input."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("shadowsig-circuit "):
        raise ParseError("missing circuit header", 1)
    if lines[0].split()[1] != FORMAT_VERSION:
        raise ParseError(f"unsupported version {lines[0].split()[1]!r}", 1)
    if len(lines) < 2:
        raise ParseError("missing metadata line", 2)
    meta = _parse_fields(lines[1], 2)
    try:
        n, seed = int(meta["n"]), int(meta["seed"])
        ensemble = meta["ensemble"]
    except (KeyError, ValueError) as e:
        raise ParseError(f"bad metadata: {e}", 2)
    gate_lists: list[list[Gate]] = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        if not line.startswith("gate "):
            raise ParseError(f"expected gate record, got {line!r}", lineno)
        f = _parse_fields(line[len("gate "):], lineno)
        try:
            layer = int(f["layer"])
            support = tuple(int(x) for x in f["support"].split(","))
            label = f["label"]
        except (KeyError, ValueError) as e:
            raise ParseError(f"bad gate record: {e}", lineno)
        if label not in LABELS:
            raise ParseError(f"unknown label {label!r}", lineno)
        param = None
        if label == H:
            u = H_MAT
        elif label == CZ:
            u = CZ_MAT
        elif label == ZPXH:
            if "p" not in f:
                raise ParseError("ZPXH gate missing p=", lineno)
            param = Fraction(f["p"])
            u = zpxhalf(param)
        else:
            if "matrix" not in f:
                raise ParseError(f"label {label} requires matrix=", lineno)
            u = _parse_matrix(f["matrix"], len(support), lineno)
        while len(gate_lists) <= layer:
            gate_lists.append([])
        gate_lists[layer].append(Gate(support, u, label, layer, param))
    try:
        return Circuit(n, tuple(tuple(l) for l in gate_lists), ensemble, seed)
    except StructuralError as e:
        raise ParseError(str(e))


def fingerprint(c: Circuit) -> str:
    """Stable content hash of a circuit's serialized form."""
    return hashlib.sha256(serialize(c).encode()).hexdigest()[:16]
