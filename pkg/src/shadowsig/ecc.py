"""Classical linear error-detecting codes over GF(2) for the multi-bit protocol."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ParseError, StructuralError

FORMAT_VERSION = "v1"


def gf2_rank(mat: np.ndarray) -> int:
    a = mat.copy() % 2
    rank = 0
    rows, cols = a.shape
    for c in range(cols):
        pivot = None
        for r in range(rank, rows):
            if a[r, c]:
                pivot = r
                break
        if pivot is None:
            continue
        a[[rank, pivot]] = a[[pivot, rank]]
        for r in range(rows):
            if r != rank and a[r, c]:
                a[r] ^= a[rank]
        rank += 1
    return rank


@dataclass
class LinearCode:
    """[M, k] code in systematic form up to a recorded column permutation.

    ``H`` is the (M-k) x M parity check, ``G`` the k x M generator with
    G[:, perm[:k]] = I; ``chk`` flags anything outside the code space.
    """
    M: int
    k: int
    H: np.ndarray
    G: np.ndarray
    perm: np.ndarray              # column permutation: first k entries are message slots
    d_known: int | None = None

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=np.uint8) % 2
        self.G = np.asarray(self.G, dtype=np.uint8) % 2
        self.perm = np.asarray(self.perm, dtype=np.int64)
        if self.H.shape != (self.M - self.k, self.M) or self.G.shape != (self.k, self.M):
            raise StructuralError("H/G shapes inconsistent with (M, k)")
        if np.any(self.G @ self.H.T % 2):
            raise StructuralError("G H^T != 0 over GF(2)")
        if gf2_rank(self.H) != self.M - self.k:
            raise StructuralError("H is rank deficient")
        sub = self.G[:, self.perm[: self.k]]
        if not np.array_equal(sub, np.eye(self.k, dtype=np.uint8)):
            raise StructuralError("G is not systematic on the recorded columns")

    @property
    def d_r(self) -> float:
        """Relative distance d/M (exact d computed on demand)."""
        d = self.d_known if self.d_known is not None else min_distance(self)
        return d / self.M


def encode(code: LinearCode, msg) -> np.ndarray:
    msg = np.asarray(msg, dtype=np.uint8)
    if msg.shape != (code.k,):
        raise StructuralError(f"message length {msg.shape} != k={code.k}")
    return msg @ code.G % 2


def chk(code: LinearCode, word) -> bool:
    """True (detect) iff the word is outside the code space."""
    word = np.asarray(word, dtype=np.uint8)
    if word.shape != (code.M,):
        raise StructuralError(f"word length {word.shape} != M={code.M}")
    return bool(np.any(code.H @ word % 2))


def decode(code: LinearCode, word) -> np.ndarray:
    """Extract the systematic message bits; callers must chk first."""
    word = np.asarray(word, dtype=np.uint8)
    if chk(code, word):
        raise StructuralError("decode called on a non-codeword (run chk first)")
    return word[code.perm[: code.k]].copy()


def _systematic_form(h: np.ndarray):
    """Reduce H and derive (G, perm) with Gaussian elimination, column pivoting."""
    h = h.copy() % 2
    rows, M = h.shape
    pivots = []
    rank = 0
    for c in range(M):
        pivot = None
        for r in range(rank, rows):
            if h[r, c]:
                pivot = r
                break
        if pivot is None:
            continue
        h[[rank, pivot]] = h[[pivot, rank]]
        for r in range(rows):
            if r != rank and h[r, c]:
                h[r] ^= h[rank]
        pivots.append(c)
        rank += 1
        if rank == rows:
            break
    h = h[:rank]
    k = M - rank
    free = [c for c in range(M) if c not in pivots]
    # G rows: one per free column; parity filled from reduced H
    g = np.zeros((k, M), dtype=np.uint8)
    for i, c in enumerate(free):
        g[i, c] = 1
        for r, p in enumerate(pivots):
            g[i, p] = h[r, c]
    perm = np.array(free + pivots, dtype=np.int64)
    return h, g, perm


def from_parity_check(H, d_known=None) -> LinearCode:
    """Build a LinearCode from any parity-check matrix (rows may be dependent).

    Dependent rows are dropped (k adjusted); the surviving rows are stored
    verbatim so structural properties of the sampled matrix (e.g. LDPC
    regularity) remain visible. G comes from the reduced row-echelon form.
    """
    H = np.asarray(H, dtype=np.uint8) % 2
    keep = []
    rank = 0
    for i in range(H.shape[0]):
        cand = H[keep + [i]]
        r = gf2_rank(cand)
        if r > rank:
            keep.append(i)
            rank = r
    H_kept = H[keep]
    _, g, perm = _systematic_form(H_kept)
    M = H.shape[1]
    return LinearCode(M, M - rank, H_kept, g, perm, d_known)


def repetition_code(M: int) -> LinearCode:
    h = np.zeros((M - 1, M), dtype=np.uint8)
    for i in range(M - 1):
        h[i, i] = h[i, i + 1] = 1
    return from_parity_check(h, d_known=M)


def hamming_7_4() -> LinearCode:
    h = np.array([[1, 0, 1, 0, 1, 0, 1],
                  [0, 1, 1, 0, 0, 1, 1],
                  [0, 0, 0, 1, 1, 1, 1]], dtype=np.uint8)
    return from_parity_check(h, d_known=3)


def sample_gallager(var_degree: int, check_degree: int, M: int, seed: int) -> LinearCode:
    """Uniform-ish regular LDPC code via the configuration model.

    Multi-edges are removed by resampling edge pairs (degrees preserved);
    dependent parity rows are dropped with the dimension adjusted.
    """
    if (M * var_degree) % check_degree != 0:
        raise ConfigurationError(
            f"M*var_degree={M * var_degree} not divisible by check_degree={check_degree}")
    n_checks = M * var_degree // check_degree
    if var_degree < 1 or check_degree < 1 or n_checks < 1:
        raise ConfigurationError("degrees must be positive")
    rng = np.random.default_rng(seed)
    var_stubs = np.repeat(np.arange(M), var_degree)
    chk_stubs = np.repeat(np.arange(n_checks), check_degree)
    order = rng.permutation(var_stubs.size)
    pairs = list(zip(var_stubs[order], chk_stubs))
    for _ in range(10000):
        seen = {}
        dup = None
        for i, e in enumerate(pairs):
            if e in seen:
                dup = i
                break
            seen[e] = i
        if dup is None:
            break
        j = int(rng.integers(0, len(pairs)))
        pairs[dup], pairs[j] = (pairs[dup][0], pairs[j][1]), (pairs[j][0], pairs[dup][1])
    else:
        raise ConfigurationError("could not remove multi-edges")
    h = np.zeros((n_checks, M), dtype=np.uint8)
    for v, c in pairs:
        h[c, v] ^= 1
    return from_parity_check(h)


def min_distance(code: LinearCode, cap: int = 26) -> int:
    """Exact minimum distance by enumerating the 2^k - 1 nonzero codewords."""
    if code.M > cap:
        raise ConfigurationError(
            f"M={code.M} above brute-force cap {cap}; use estimate_distance")
    msgs = ((np.arange(1, 2**code.k)[:, None] >> np.arange(code.k)[::-1]) & 1).astype(np.uint8)
    words = msgs @ code.G % 2
    return int(words.sum(axis=1).min())


def estimate_distance(code: LinearCode, trials: int, seed: int) -> int:
    """Upper bound on d from random information sets (flagged approximate)."""
    rng = np.random.default_rng(seed)
    best = code.M
    for _ in range(trials):
        msg = rng.integers(0, 2, size=code.k).astype(np.uint8)
        if not msg.any():
            continue
        best = min(best, int(encode(code, msg).sum()))
    return best


# ---------------------------------------------------------------------------
# persistence

def code_text(code: LinearCode) -> str:
    lines = [f"shadowsig-code {FORMAT_VERSION}",
             f"M={code.M} k={code.k} d={code.d_known if code.d_known is not None else '-'}"]
    for row in code.H:
        lines.append("H " + "".join(map(str, row)))
    for row in code.G:
        lines.append("G " + "".join(map(str, row)))
    lines.append("perm " + ",".join(map(str, code.perm)))
    return "\n".join(lines) + "\n"


def write_code(code: LinearCode, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(code_text(code))


def parse_code(text: str) -> LinearCode:
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines or not lines[0].startswith("shadowsig-code "):
        raise ParseError("missing code header", 1)
    meta = dict(tok.split("=", 1) for tok in lines[1].split())
    M, k = int(meta["M"]), int(meta["k"])
    d = None if meta["d"] == "-" else int(meta["d"])
    hrows, grows, perm = [], [], None
    for lineno, line in enumerate(lines[2:], start=3):
        if line.startswith("H "):
            hrows.append([int(b) for b in line[2:]])
        elif line.startswith("G "):
            grows.append([int(b) for b in line[2:]])
        elif line.startswith("perm "):
            perm = [int(x) for x in line[5:].split(",")]
        else:
            raise ParseError(f"unexpected line {line!r}", lineno)
    if perm is None:
        raise ParseError("missing perm line")
    return LinearCode(M, k, np.array(hrows, dtype=np.uint8),
                      np.array(grows, dtype=np.uint8),
                      np.array(perm, dtype=np.int64), d)


def read_code(path) -> LinearCode:
    with open(path, encoding="utf-8") as fh:
        return parse_code(fh.read())
