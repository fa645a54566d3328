"""Attack algorithms used as security evidence.

Light-cone proper learning by local gate inversion, the signal-propagation
probe, brute-force spoofing against published shadows, and variational
spoofing with an exact loss/gradient oracle. Access models are separated
by type: shadow-only attackers hold a ShadowSet and nothing else, so no
code path can issue a unitary query.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import certify as ct
from . import circuits as cc
from . import rng as rngmod
from . import sim
from .errors import ConfigurationError, ParameterError
from .shadows import ShadowSet
from .tableau import random_clifford_op

FORWARD_ONLY = "forward_only"
ALTERNATING = "alternating"

_PAULI_EIGENSTATES = {
    ("X", +1): np.array([1, 1], dtype=complex) / math.sqrt(2),
    ("X", -1): np.array([1, -1], dtype=complex) / math.sqrt(2),
    ("Y", +1): np.array([1, 1j], dtype=complex) / math.sqrt(2),
    ("Y", -1): np.array([1, -1j], dtype=complex) / math.sqrt(2),
    ("Z", +1): np.array([1, 0], dtype=complex),
    ("Z", -1): np.array([0, 1], dtype=complex),
}


# ---------------------------------------------------------------------------
# access models

class UnitaryQueryAccess:
    """Black-box query access to an unknown circuit's unitary.

    The attacker may choose product input states, prepend/append gates,
    and read single-qubit output tomograms. ``queries_used`` counts
    invocations of the underlying unitary.
    """

    def __init__(self, circuit: cc.Circuit, shots: int | None = None, seed: int = 0):
        self._circuit = circuit
        self.n = circuit.n
        self.shots = shots          # None = exact tomography
        self.queries_used = 0
        self._seed = seed
        self._pre: list[tuple] = []   # (support, unitary), applied before the circuit
        self._post: list[tuple] = []  # applied after

    def prepend(self, support, unitary):
        self._pre.append((tuple(support), np.asarray(unitary, dtype=complex)))

    def append(self, support, unitary):
        self._post.append((tuple(support), np.asarray(unitary, dtype=complex)))

    def _run(self, inputs: dict) -> np.ndarray:
        amps = np.array([1.0 + 0j])
        for q in range(self.n):
            amps = np.kron(amps, inputs.get(q, np.array([1.0 + 0j, 0.0])))
        for support, u in self._pre:
            amps = sim.apply_unitary(amps, u, support, self.n)
        for g in self._circuit.gates():
            amps = sim.apply_unitary(amps, g.unitary, g.support, self.n)
        for support, u in self._post:
            amps = sim.apply_unitary(amps, u, support, self.n)
        return amps

    def output_tomograms(self, q_primes, inputs: dict) -> dict:
        """Single-qubit output states of the given qubits for one input setting.

        ``inputs`` maps qubit -> pure state vector or "mixed" (a maximally
        mixed input, realized by branch averaging). Counts as one query.
        """
        self.queries_used += 1
        mixed = [q for q, v in inputs.items() if isinstance(v, str)]
        branches = [dict(inputs)]
        for q in mixed:
            nxt = []
            for br in branches:
                for vec in (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)):
                    b2 = dict(br)
                    b2[q] = vec
                    nxt.append(b2)
            branches = nxt
        out = {q: np.zeros((2, 2), dtype=complex) for q in q_primes}
        for br in branches:
            amps = self._run(br)
            state = sim.StateVector(self.n, amps)
            for q in q_primes:
                out[q] += sim.reduced_density(state, [q])
        for q in q_primes:
            out[q] /= len(branches)
        if self.shots is not None:
            rng = np.random.default_rng((self._seed, self.queries_used))
            for q in q_primes:
                est = np.eye(2, dtype=complex) / 2
                for mat in (np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]),
                            np.array([[1, 0], [0, -1]])):
                    p_up = float(np.real(np.trace(out[q] @ (np.eye(2) + mat) / 2)))
                    p_up = min(max(p_up, 0.0), 1.0)
                    mean = 2.0 * rng.binomial(self.shots, p_up) / self.shots - 1.0
                    est += mean * mat / 2
                out[q] = est
        return out

    def output_tomogram(self, q_prime: int, inputs: dict) -> np.ndarray:
        return self.output_tomograms([q_prime], inputs)[q_prime]


class ShadowsOnlyAccess:
    """Attacker sees a published shadow set and nothing else."""

    def __init__(self, shadows: ShadowSet):
        self.shadows = shadows
        self.omega_evals = 0


@dataclass
class LearnOutcome:
    circuit: cc.Circuit | None
    success: bool
    failure_reason: str = ""
    inverted_prefix: int = 0
    queries_used: int = 0
    fidelity_vs_target: float | None = None   # filled by the harness


# ---------------------------------------------------------------------------
# single gate inversion

def frobenius(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b))


def operator_schmidt_rank(u: np.ndarray, tol: float = 1e-9) -> int:
    """Operator Schmidt rank of a two-qubit unitary (1 = product of locals)."""
    r = u.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    s = np.linalg.svd(r, compute_uv=False)
    return int((s > tol * s[0]).sum())


def _choose_env_qubit(gate: cc.Gate, q: int, side: str, n: int) -> int:
    if side == cc.FRONT:
        others = [w for w in gate.support if w != q]
        if others:
            return others[0]
    return next(w for w in range(n) if w != q)


def _generic_state(w: int) -> np.ndarray:
    # fixed generic product environment; incommensurate angles avoid the
    # structured zero-influence conspiracies of Clifford circuits
    theta = 0.7548776662 * (w + 1) % 1.0 * math.pi
    phi = 0.5698402910 * (w + 1) % 1.0 * 2 * math.pi
    return np.array([math.cos(theta / 2),
                     np.exp(1j * phi) * math.sin(theta / 2)], dtype=complex)


def _probe_list(pivot: cc.PivotReport):
    """(input qubit, output qubits) pairs severed by removing the pivot gate."""
    if pivot.lost_map:
        if pivot.side == cc.FRONT:
            return [(q, outs) for q, outs in sorted(pivot.lost_map.items())]
        grouped: dict[int, list] = {}
        for q_out, ins in sorted(pivot.lost_map.items()):
            for q in ins:
                grouped.setdefault(q, []).append(q_out)
        return [(q, tuple(outs)) for q, outs in sorted(grouped.items())]
    q, q_prime = pivot.pivot_pair
    return [(q, (q_prime,))]


def single_invert(access: UnitaryQueryAccess, pivot: cc.PivotReport,
                  trial_set, eps_f: float = 1e-6):
    """First trial gate whose inverse severs the pivot gate's influence.

    The inverse is prepended (front gate) or appended (back gate). For
    every severed (q, q') pair and all 12 input-setting pairs the output
    tomograms at q' must agree below ``eps_f``; probing every severed
    output keeps trials honest even when a downstream gate reroutes the
    signal away from one particular wire. Returns None when the trial set
    is exhausted (the protocol-failure branch). The access object is left
    as found; the caller installs the accepted inverse.
    """
    if not pivot.exists:
        raise ParameterError("single_invert needs an existing pivot")
    gate = pivot.gate
    probes = _probe_list(pivot)
    stash_pre, stash_post = list(access._pre), list(access._post)
    for trial in trial_set:
        trial = np.asarray(trial, dtype=complex)
        inv = trial.conj().T
        if pivot.side == cc.FRONT:
            access._pre = [(gate.support, inv)] + stash_pre
        else:
            access._post = stash_post + [(gate.support, inv)]
        ok = True
        for q, outs in probes:
            q2 = _choose_env_qubit(gate, q, pivot.side, access.n)
            fixed = {w: _generic_state(w) for w in range(access.n) if w not in (q, q2)}
            for sigma in ("X", "Y", "Z"):
                for sigma2 in ("I", "X", "Y", "Z"):
                    env = "mixed" if sigma2 == "I" else _PAULI_EIGENSTATES[(sigma2, +1)]
                    base = dict(fixed)
                    if q2 != q:
                        base[q2] = env
                    up = access.output_tomograms(outs, {**base, q: _PAULI_EIGENSTATES[(sigma, +1)]})
                    dn = access.output_tomograms(outs, {**base, q: _PAULI_EIGENSTATES[(sigma, -1)]})
                    if any(frobenius(up[o], dn[o]) >= eps_f for o in outs):
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        access._pre, access._post = list(stash_pre), list(stash_post)
        if ok:
            return trial
    return None


# ---------------------------------------------------------------------------
# full light-cone learner

def _skeleton(template: cc.Circuit) -> cc.Circuit:
    """The circuit graph only: same supports/layers, identity unitaries."""
    lists = [[cc.Gate(g.support, np.eye(2**g.width, dtype=complex), cc.CUSTOM, g.layer)
              for g in layer] for layer in template.layers]
    return cc.Circuit(template.n, tuple(tuple(l) for l in lists), "skeleton", template.seed)


def _trial_products(trial_set, run_len: int):
    if run_len == 1:
        return list(trial_set)
    if run_len == 2:
        return [b @ a for a in trial_set for b in trial_set]
    return None


def _compressed_view(remaining: list, n: int):
    """Runs of same-support consecutive gates plus the compressed graph.

    Returns (runs, graph circuit, map from graph-gate id to run index).
    """
    seq = sorted(remaining, key=lambda g: (g.layer, g.support))
    runs: list[list] = []
    last_on_wire: dict[int, int] = {}
    for g in seq:
        idxs = {last_on_wire.get(q) for q in g.support}
        prev = idxs.pop() if len(idxs) == 1 else None
        if prev is not None and runs[prev][-1].support == g.support:
            runs[prev].append(g)
        else:
            runs.append([g])
            prev = len(runs) - 1
        for q in g.support:
            last_on_wire[q] = prev
    by_layer: dict[int, list[int]] = {}
    for i, run in enumerate(runs):
        by_layer.setdefault(run[0].layer, []).append(i)
    layer_map = {old: new for new, old in enumerate(sorted(by_layer))}
    lists: list[list] = [[] for _ in layer_map]
    gate_to_run: dict[int, int] = {}
    for old, idxs in sorted(by_layer.items()):
        for i in idxs:
            leader = runs[i][0]
            g = cc.Gate(leader.support, np.eye(2**leader.width, dtype=complex),
                        cc.CUSTOM, layer_map[old])
            lists[layer_map[old]].append(g)
            gate_to_run[id(g)] = i
    graph = cc.Circuit(n, tuple(tuple(l) for l in lists), "skeleton", 0)
    return runs, graph, gate_to_run


def _reconstruct_local(access: UnitaryQueryAccess, q: int) -> np.ndarray:
    """Learn the residual single-qubit unitary on wire q from output tomograms.

    Exact for a product residual: |0> and |+> tomograms pin the columns up
    to a global phase. Degenerate tomograms (a non-product residual after
    a botched inversion) fall back to the nearest unitary.
    """
    rho0 = access.output_tomogram(q, {q: np.array([1, 0], dtype=complex)})
    rhop = access.output_tomogram(q, {q: np.array([1, 1], dtype=complex) / math.sqrt(2)})
    w0, v0 = np.linalg.eigh(rho0)
    a = v0[:, int(np.argmax(w0))]
    wp, vp = np.linalg.eigh(rhop)
    b = vp[:, int(np.argmax(wp))]
    ov = np.vdot(a, b)
    if abs(abs(ov) - 1.0 / math.sqrt(2)) > 1e-6:
        # tomograms inconsistent with a product residual; best effort
        perp = np.array([-np.conj(a[1]), np.conj(a[0])])
        return np.column_stack([a, perp])
    u1 = b / ov - a
    u1 = u1 / np.linalg.norm(u1)
    return np.column_stack([a, u1])


def forward_learn(access: UnitaryQueryAccess, template: cc.Circuit,
                  direction: str = FORWARD_ONLY, eps_f: float = 1e-6,
                  trial_set=None, drift_factor: float = 10.0) -> LearnOutcome:
    """Learn a circuit gate by gate through pivot inversions.

    The attacker knows the circuit graph (``template``) but not the gate
    unitaries. Iterates compress -> pivot search -> single inversion;
    ``alternating`` retries the opposite side when one side has no pivot.
    Residual single-qubit factors are learned at the end and folded into
    the last touched gate on each wire, so the output graph equals the
    template graph exactly.
    """
    if trial_set is None:
        raise ParameterError("a trial gate set is required")
    work = _skeleton(template)
    remaining = [g for layer in work.layers for g in layer]
    learned: list[tuple] = []   # (slots tuple, unitary, side)
    side = cc.FRONT
    inverted = 0
    while remaining:
        runs, graph, gate_to_run = _compressed_view(remaining, work.n)
        rep = cc.find_pivot(graph, side)
        if not rep.exists and direction == ALTERNATING:
            side = cc.BACK if side == cc.FRONT else cc.FRONT
            rep = cc.find_pivot(graph, side)
        if not rep.exists:
            return LearnOutcome(None, False, "no pivot on any allowed side",
                                inverted, access.queries_used)
        target_run = runs[gate_to_run[id(rep.gate)]]
        trials = _trial_products(trial_set, len(target_run))
        if trials is None:
            return LearnOutcome(None, False,
                                f"run of length {len(target_run)} not searchable",
                                inverted, access.queries_used)
        g_found = single_invert(access, rep, trials, eps_f)
        if g_found is None:
            return LearnOutcome(None, False, "trial set exhausted",
                                inverted, access.queries_used)
        if rep.side == cc.FRONT:
            access._pre = [(rep.gate.support, g_found.conj().T)] + access._pre
        else:
            access._post = access._post + [(rep.gate.support, g_found.conj().T)]
        learned.append((tuple(target_run), np.asarray(g_found, dtype=complex), rep.side))
        gone = {id(g) for g in target_run}
        remaining = [g for g in remaining if id(g) not in gone]
        inverted += 1
    # residual trivial parts: per-wire single-qubit unitaries
    residual = {q: _reconstruct_local(access, q) for q in range(work.n)}
    circuit = _assemble(template, learned, residual)
    return LearnOutcome(circuit, True, "", inverted, access.queries_used)


def _assemble(template, learned, residual):
    """Place learned composites on template slots and fold in residual locals.

    Each learned run puts its composite on the run's first slot with
    identity padding behind it. The residual local on wire q lands just
    after the last front-learned slot on q (or just before the earliest
    back-learned slot when the wire was only reached from the back),
    which is exactly the cut between the front and back inversions.
    """
    assign: dict[int, np.ndarray] = {}
    side_of: dict[int, str] = {}
    slots = []
    for run, u, side in learned:
        assign[id(run[0])] = u
        for extra in run[1:]:
            assign[id(extra)] = np.eye(2**extra.width, dtype=complex)
        for g in run:
            side_of[id(g)] = side
            slots.append(g)
    for q, r in residual.items():
        if np.abs(r - np.eye(2)).max() < 1e-9:
            continue
        fronts = [g for g in slots if q in g.support and side_of[id(g)] == cc.FRONT]
        backs = [g for g in slots if q in g.support and side_of[id(g)] == cc.BACK]
        if fronts:
            host = max(fronts, key=lambda g: g.layer)
            emb = _embed_local(r, host.support.index(q), host.width)
            assign[id(host)] = emb @ assign[id(host)]
        elif backs:
            host = min(backs, key=lambda g: g.layer)
            emb = _embed_local(r, host.support.index(q), host.width)
            assign[id(host)] = assign[id(host)] @ emb
    by_slot = {(g.layer, g.support): assign[id(g)] for g in slots}
    lists = []
    for layer in template.layers:
        row = [cc.Gate(g.support, by_slot[(g.layer, g.support)], cc.CUSTOM, g.layer)
               for g in layer]
        lists.append(row)
    return cc.Circuit(template.n, tuple(tuple(l) for l in lists),
                      template.ensemble_tag, template.seed)


def _embed_local(r: np.ndarray, pos: int, width: int) -> np.ndarray:
    mats = [np.eye(2, dtype=complex)] * width
    mats[pos] = r
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def harness_fidelity(outcome: LearnOutcome, target: cc.Circuit) -> LearnOutcome:
    """Harness-side check: output-state fidelity of the learned circuit."""
    if not outcome.success or outcome.circuit is None:
        return outcome
    f = sim.fidelity(sim.run(outcome.circuit), sim.run(target))
    outcome.fidelity_vs_target = f
    return outcome


# ---------------------------------------------------------------------------
# signal propagation probe

def signal_probe(circuit: cc.Circuit, q: int, q_prime: int) -> float:
    """Worst-case output/input Frobenius contraction of the q -> q' channel.

    Inputs off q sit at |0>; the minimum runs over all pairs of the six
    Pauli eigenstates on q.
    """
    states = [_PAULI_EIGENSTATES[(p, s)] for p in ("X", "Y", "Z") for s in (+1, -1)]
    outs = []
    for vec in states:
        amps = np.array([1.0 + 0j])
        for w in range(circuit.n):
            amps = np.kron(amps, vec if w == q else np.array([1.0 + 0j, 0.0]))
        for g in circuit.gates():
            amps = sim.apply_unitary(amps, g.unitary, g.support, circuit.n)
        outs.append(sim.reduced_density(sim.StateVector(circuit.n, amps), [q_prime]))
    best = math.inf
    for i in range(len(states)):
        for j in range(i + 1, len(states)):
            rin = np.outer(states[i], states[i].conj())
            rjn = np.outer(states[j], states[j].conj())
            denom = np.linalg.norm(rin - rjn)
            best = min(best, float(np.linalg.norm(outs[i] - outs[j])) / denom)
    return best


# ---------------------------------------------------------------------------
# brute-force spoofing

@dataclass
class SpoofResult:
    best_circuit: cc.Circuit | None
    best_omega: float
    passes: bool
    candidates_scored: int
    tl_tv_ratio: float
    scores: list = field(default_factory=list)


def brute_spoof(access: ShadowsOnlyAccess, candidates, params: ct.SecurityParams,
                budget: int | None = None) -> SpoofResult:
    """Score candidate circuits by shadow overlap against the public key.

    Enumerates up to ``budget`` candidates, returns the best scorer and
    whether it clears the certification threshold. The learning/verify
    cost ratio is candidates x (per-omega cost) / (one verification),
    which is just the candidate count here.
    """
    best, best_omega = None, -math.inf
    scores = []
    count = 0
    psi_cache = {}
    for cand in candidates:
        if budget is not None and count >= budget:
            break
        count += 1
        est = ct.estimate_overlap(access.shadows, sim.run(cand))
        access.omega_evals += est.T
        scores.append(est.omega_hat)
        if est.omega_hat > best_omega:
            best, best_omega = cand, est.omega_hat
    if best is None:
        raise ParameterError("no candidates supplied")
    return SpoofResult(best, best_omega, best_omega >= params.threshold,
                       count, float(count), scores)


# ---------------------------------------------------------------------------
# variational spoofing

_SU4_BASIS = None


def su4_basis() -> np.ndarray:
    """The 15 Hermitian traceless generators (Pauli pairs) of su(4)."""
    global _SU4_BASIS
    if _SU4_BASIS is None:
        paulis = [np.eye(2), np.array([[0, 1], [1, 0]]),
                  np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]
        mats = []
        for i in range(4):
            for j in range(4):
                if i == j == 0:
                    continue
                mats.append(np.kron(paulis[i], paulis[j]).astype(complex))
        _SU4_BASIS = np.stack(mats)
    return _SU4_BASIS


def variational_param_count(n: int, d_inner: int, d_outer: int) -> int:
    """p = 15 (n/2) d_inner d_outer."""
    return 15 * (n // 2) * d_inner * d_outer


def overparameterization_depth(n: int) -> int:
    """Total depth d_inner*d_outer where the parameter count reaches 2(2^n - 1)."""
    return math.ceil(2 ** (n + 2) / (15 * n))


@dataclass(frozen=True)
class VariationalAnsatz:
    """Blocked SU(4) ansatz: d_outer rounds of d_inner intra-block layers
    (b/2 parameterized gates per block) closed by a fixed inter-block CZ layer."""
    n: int
    b: int
    d_inner: int
    d_outer: int
    seed: int = 0

    def __post_init__(self):
        if self.n % self.b:
            raise ConfigurationError("block size must divide n")

    @property
    def param_count(self) -> int:
        return variational_param_count(self.n, self.d_inner, self.d_outer)

    def layout(self):
        """(parameterized gate supports per layer, inter-block CZ pairs per round)."""
        rng = np.random.default_rng((self.seed, 77))
        blocks = [list(range(i, i + self.b)) for i in range(0, self.n, self.b)]
        param_layers = []
        cz_layers = []
        for _ in range(self.d_outer):
            for _ in range(self.d_inner):
                layer = []
                for blk in blocks:
                    perm = rng.permutation(blk)
                    layer += [(int(perm[2 * i]), int(perm[2 * i + 1]))
                              for i in range(self.b // 2)]
                param_layers.append(layer)
            order = rng.permutation(len(blocks))
            pairs = []
            for i in range(0, len(blocks) - 1, 2):
                a, bb = blocks[int(order[i])], blocks[int(order[i + 1])]
                pa, pb = rng.permutation(a), rng.permutation(bb)
                pairs += [(int(x), int(y)) for x, y in zip(pa, pb)]
            if len(blocks) == 1:
                pairs = []
            cz_layers.append(pairs)
        return param_layers, cz_layers


@dataclass
class TrainingTrace:
    losses: list                  # per restart: list of per-step losses
    successes: list               # per restart: bool
    oracle_queries: int
    param_count: int
    threshold: float

    @property
    def success_rate(self) -> float:
        return sum(self.successes) / len(self.successes)


def _gate_and_derivs(theta_g: np.ndarray, basis: np.ndarray):
    h = np.tensordot(theta_g, basis, axes=(0, 0))
    lam, v = np.linalg.eigh(h)
    phase = np.exp(-1j * lam)
    diff = lam[:, None] - lam[None, :]
    num = phase[:, None] - phase[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(np.abs(diff) > 1e-12, num / diff, -1j * phase[:, None])
    u = (v * phase) @ v.conj().T
    w = np.einsum("ij,ajk,kl->ail", v.conj().T, basis, v)
    du = np.einsum("ij,ajk,kl->ail", v, w * phi, v.conj().T)
    return u, du


def variational_spoof(target: cc.Circuit | sim.StateVector, ansatz: VariationalAnsatz,
                      max_steps: int = 500, restarts: int = 10, seed: int = 0,
                      threshold: float = 0.1, step_size: float = 0.15) -> TrainingTrace:
    """Gradient-descent state spoofing against an exact overlap oracle.

    Loss is 1 - |<target|D(theta)|0>|^2; gradients are exact (the oracle
    grants loss and first derivatives, one query per step). Success means
    the loss drops below ``threshold`` within ``max_steps``.
    """
    if isinstance(target, cc.Circuit):
        target = sim.run(target)
    n = ansatz.n
    if n > 12:
        raise ConfigurationError("variational spoofing capped at n = 12")
    if target.n != n:
        raise ConfigurationError("target size does not match ansatz")
    basis = su4_basis()
    param_layers, cz_layers = ansatz.layout()
    gates_per_round = ansatz.d_inner * (n // 2)
    total_gates = gates_per_round * ansatz.d_outer
    cz = cc.CZ_MAT
    tvec = target.amps.conj()
    losses_all, success_all = [], []
    queries = 0
    for r in range(restarts):
        rng = rngmod.stream(seed, 3, r)
        theta = rng.uniform(-np.pi, np.pi, size=(total_gates, 15))
        losses = []
        ok = False
        ops = []   # ("param", gate index, support) or ("cz", pairs)
        gi = 0
        for round_i in range(ansatz.d_outer):
            for inner in range(ansatz.d_inner):
                for pair in param_layers[round_i * ansatz.d_inner + inner]:
                    ops.append(("param", gi, pair))
                    gi += 1
            ops.append(("cz", cz_layers[round_i]))
        for it in range(max_steps):
            us, dus = [], []
            for g in range(total_gates):
                u, du = _gate_and_derivs(theta[g], basis)
                us.append(u)
                dus.append(du)
            amps = sim.zero_state(n).amps
            states = [amps]
            for op in ops:
                if op[0] == "param":
                    amps = sim.apply_unitary(amps, us[op[1]], op[2], n)
                else:
                    for pair in op[1]:
                        amps = sim.apply_unitary(amps, cz, pair, n)
                states.append(amps)
            z = tvec @ states[-1]
            loss = 1.0 - (z.real**2 + z.imag**2)
            losses.append(float(loss))
            queries += 1
            if loss < threshold:
                ok = True
                break
            # backward pass: bra = <target| U_N ... U_{k+1}
            bra = tvec.copy()
            grad = np.zeros_like(theta)
            for idx in range(len(ops) - 1, -1, -1):
                op = ops[idx]
                pre = states[idx]
                if op[0] == "param":
                    g, pair = op[1], op[2]
                    k = _transfer(bra, pre, pair, n)
                    dz = np.einsum("aij,ij->a", dus[g], k)
                    grad[g] = -2.0 * (z.conj() * dz).real
                    bra = sim.apply_unitary(bra, us[g].T, pair, n)
                else:
                    for pair in op[1]:
                        bra = sim.apply_unitary(bra, cz.T, pair, n)
            theta = theta - step_size * grad
        losses_all.append(losses)
        success_all.append(ok)
    return TrainingTrace(losses_all, success_all, queries,
                         ansatz.param_count, threshold)


def _transfer(bra: np.ndarray, ket: np.ndarray, support, n: int) -> np.ndarray:
    """K_{ij} = <bra| (|i><j| on support x I) |ket> as a 4x4 matrix."""
    w = len(support)
    b = np.moveaxis(bra.reshape([2] * n), support, range(w)).reshape(2**w, -1)
    k = np.moveaxis(ket.reshape([2] * n), support, range(w)).reshape(2**w, -1)
    return b @ k.T


# ---------------------------------------------------------------------------
# fixtures

ALTERNATION_GRAPH = ((0, (0, 2)), (0, (1, 3)), (1, (0, 3)), (2, (1, 3)),
                     (3, (2, 3)), (4, (0, 3)))


def locally_ambiguous(u: np.ndarray, v: np.ndarray) -> bool:
    """True iff u and v differ by single-qubit factors on either side."""
    return (operator_schmidt_rank(v.conj().T @ u) == 1
            or operator_schmidt_rank(u @ v.conj().T) == 1)


def clifford_gate_family(size: int = 20, seed: int = 7) -> list:
    """Two-qubit Clifford family with no locally ambiguous pairs.

    No member equals another times single-qubit factors (on either side),
    so the only trial that can sever a family gate's connections is the
    gate itself and inversions never leave single-qubit debris behind.
    The two-qubit Clifford group has exactly 20 local cosets, which caps a
    fully separated family at 20 members.
    """
    if size > 20:
        raise ConfigurationError(
            "a family without locally ambiguous pairs has at most 20 members")
    rng = np.random.default_rng(seed)
    fam: list[np.ndarray] = []
    guard = 0
    while len(fam) < size:
        guard += 1
        if guard > 100000:
            raise ConfigurationError("family search did not converge")
        u = random_clifford_op(2, rng).dense()
        if not any(locally_ambiguous(u, v) for v in fam):
            fam.append(u)
    return fam


def alternation_fixture(seed: int = 7) -> cc.Circuit:
    """Circuit learnable only by alternating front and back inversions.

    The frozen six-gate graph has two front outer gates and one back outer
    gate; forward-only peeling gets stuck after one inversion, backward
    peeling is stuck immediately, and alternation clears the whole
    circuit. Gates are drawn from the separated Clifford family.
    """
    fam = clifford_gate_family(seed=seed)
    rng = np.random.default_rng((seed, 5))
    lists: dict[int, list] = {}
    for layer, support in ALTERNATION_GRAPH:
        u = fam[int(rng.integers(0, len(fam)))]
        lists.setdefault(layer, []).append(cc.Gate(support, u, cc.CLIFF2, layer))
    return cc.Circuit(4, tuple(tuple(lists[k]) for k in sorted(lists)), "custom", seed)
