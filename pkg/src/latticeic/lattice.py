"""Construction-A lattices: random linear codes over Z_p, scaled integer
cosets, nearest-point quantization and power-constrained codebooks.

All operations are pure functions of their inputs plus an explicit seed;
the types are immutable after construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

# Exhaustive decoding scans one candidate per codeword coset; this caps the
# supported desk scale (n <= 10, p <= 13 with moderate k).
MAX_COSETS = 2_000_000


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    d = 3
    while d * d <= p:
        if p % d == 0:
            return False
        d += 2
    return True


def _rref_mod_p(rows: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over Z_p. Returns (rref, pivot columns)."""
    m = rows.astype(np.int64) % p
    n_rows, n_cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        if r >= n_rows:
            break
        sel = None
        for i in range(r, n_rows):
            if m[i, c] % p != 0:
                sel = i
                break
        if sel is None:
            continue
        m[[r, sel]] = m[[sel, r]]
        inv = pow(int(m[r, c]), p - 2, p)
        m[r] = (m[r] * inv) % p
        for i in range(n_rows):
            if i != r and m[i, c] != 0:
                m[i] = (m[i] - m[i, c] * m[r]) % p
        pivots.append(c)
        r += 1
    return m, pivots


def rank_mod_p(rows: np.ndarray, p: int) -> int:
    if rows.size == 0:
        return 0
    _, pivots = _rref_mod_p(rows, p)
    return len(pivots)


@dataclass(frozen=True)
class LinearCode:
    """A linear (n, k) code over Z_p given by k independent generator rows."""

    n: int
    k: int
    p: int
    generators: np.ndarray  # shape (k, n), entries in {0, ..., p-1}

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if not 0 <= self.k <= self.n:
            raise ValueError(f"need 0 <= k <= n, got k={self.k}, n={self.n}")
        gens = np.asarray(self.generators, dtype=np.int64) % self.p
        if gens.shape != (self.k, self.n):
            raise ValueError(f"generator shape {gens.shape} != ({self.k}, {self.n})")
        if self.k > 0 and rank_mod_p(gens, self.p) != self.k:
            raise ValueError("generator rows are not independent over Z_p")
        object.__setattr__(self, "generators", gens)
        gens.setflags(write=False)

    @cached_property
    def _rref(self) -> tuple[np.ndarray, list[int]]:
        return _rref_mod_p(self.generators, self.p)

    def contains(self, word: np.ndarray) -> bool:
        """Membership of a residue vector (mod p) in the code."""
        w = np.asarray(word, dtype=np.int64) % self.p
        if w.shape != (self.n,):
            raise ValueError(f"word length {w.shape} != ({self.n},)")
        rref, pivots = self._rref
        for row, c in zip(rref, pivots):
            if w[c] % self.p != 0:
                w = (w - w[c] * row) % self.p
        return not w.any()

    @cached_property
    def codewords(self) -> np.ndarray:
        """All p**k codewords, shape (p**k, n)."""
        size = self.p ** self.k
        if size > MAX_COSETS:
            raise ValueError(f"p**k = {size} exceeds enumeration limit {MAX_COSETS}")
        if self.k == 0:
            return np.zeros((1, self.n), dtype=np.int64)
        # coefficient vectors in Z_p^k, odometer order
        coeffs = np.stack(
            np.meshgrid(*[np.arange(self.p)] * self.k, indexing="ij"), axis=-1
        ).reshape(-1, self.k)
        words = (coeffs @ self.generators) % self.p
        return np.unique(words, axis=0)


def make_linear_code(n: int, k: int, p: int, seed) -> LinearCode:
    """Sample a random (n, k) code over Z_p with independent generators.

    Deterministic given the seed; resamples until the rank condition holds.
    """
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    if k == 0:
        return LinearCode(n, 0, p, np.zeros((0, n), dtype=np.int64))
    while True:
        gens = rng.integers(0, p, size=(k, n), dtype=np.int64)
        if rank_mod_p(gens, p) == k:
            return LinearCode(n, k, p, gens)


@dataclass(frozen=True)
class Lattice:
    """The point set {gamma * v : v integer, v mod p in code}."""

    code: LinearCode
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")

    @property
    def n(self) -> int:
        return self.code.n

    @property
    def p(self) -> int:
        return self.code.p


def construction_a(code: LinearCode, gamma: float) -> Lattice:
    return Lattice(code, float(gamma))


def fundamental_volume(lat: Lattice) -> float:
    """Volume of the fundamental cell: gamma**n * p**(n-k)."""
    return lat.gamma ** lat.n * float(lat.p ** (lat.n - lat.code.k))


def is_lattice_point(lat: Lattice, w, tol: float = 1e-9) -> bool:
    """True iff w is within tol (inf-norm) of a lattice point.

    Exact for tol < gamma/2; the rounded integer vector is the only
    candidate in that regime.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    w = np.asarray(w, dtype=float)
    if w.shape != (lat.n,):
        raise ValueError(f"dimension mismatch: {w.shape} vs ({lat.n},)")
    u = w / lat.gamma
    v = np.round(u).astype(np.int64)
    if np.max(np.abs(w - lat.gamma * v)) > tol:
        return False
    return lat.code.contains(v % lat.p)


def _nearest_integer_vectors(u: np.ndarray, cosets: np.ndarray, p: int) -> np.ndarray:
    """Per coset c, the integer vector in c + p*Z^n closest to u.

    Separable per coordinate; exact ties take the smaller integer so the
    overall tie-break is lexicographic.
    """
    t = (u[None, :] - cosets) / p
    f = np.floor(t)
    z = np.where(t - f <= 0.5, f, f + 1.0)
    return cosets + p * z


def nearest_point(lat: Lattice, y) -> np.ndarray:
    """Euclidean-nearest lattice point to y; ties broken lexicographically
    on the integer coordinate vector (smallest first).

    Exact: every lattice coset of gamma*p*Z^n contributes its closed-form
    per-coordinate minimizer and the best candidate over all p**k cosets
    is returned.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (lat.n,):
        raise ValueError(f"dimension mismatch: {y.shape} vs ({lat.n},)")
    u = y / lat.gamma
    cands = _nearest_integer_vectors(u, lat.code.codewords.astype(float), lat.p)
    d2 = np.sum((u[None, :] - cands) ** 2, axis=1)
    best = d2.min()
    tied = cands[d2 == best]
    v = min(map(tuple, tied.astype(np.int64)))
    return lat.gamma * np.array(v, dtype=float)


def nearest_points_batch(lat: Lattice, ys: np.ndarray) -> np.ndarray:
    """Vectorized nearest_point over the rows of ys (trials, n)."""
    ys = np.asarray(ys, dtype=float)
    u = ys / lat.gamma
    cosets = lat.code.codewords.astype(float)
    t = (u[:, None, :] - cosets[None, :, :]) / lat.p
    f = np.floor(t)
    z = np.where(t - f <= 0.5, f, f + 1.0)
    cands = cosets[None, :, :] + lat.p * z
    d2 = np.sum((u[:, None, :] - cands) ** 2, axis=2)
    idx = np.argmin(d2, axis=1)
    return lat.gamma * cands[np.arange(len(ys)), idx]


def scale_lattice(lat: Lattice, c: float) -> Lattice:
    """The point set {c * lam : lam in lat}; sign is absorbed by symmetry."""
    if c == 0:
        raise ValueError("scale factor must be nonzero")
    return Lattice(lat.code, lat.gamma * abs(c))


@dataclass(frozen=True)
class Codebook:
    """(Lattice + shift) intersected with the sphere of per-dim power P."""

    lattice: Lattice
    shift: np.ndarray
    power: float
    words: np.ndarray  # shape (M, n)
    target_rate: float
    target_met: bool

    def __post_init__(self):
        object.__setattr__(self, "shift", np.asarray(self.shift, dtype=float))
        object.__setattr__(self, "words", np.asarray(self.words, dtype=float))

    def __len__(self) -> int:
        return len(self.words)

    @property
    def rate(self) -> float:
        """Achieved rate in bits per dimension."""
        if len(self.words) == 0:
            return -math.inf
        return math.log2(len(self.words)) / self.lattice.n


def _enumerate_shifted_sphere(lat: Lattice, shift: np.ndarray, power: float) -> np.ndarray:
    """All points of (lat + shift) with squared norm <= n * power."""
    n, p, gamma = lat.n, lat.p, lat.gamma
    r2 = n * power
    step = gamma * p
    words: list[np.ndarray] = []
    buf = np.empty(n)

    for c in lat.code.codewords:
        base = gamma * c + shift  # DFS over z: point = base + step * z

        def dfs(i: int, used: float):
            if i == n:
                words.append(buf.copy())
                return
            rem = r2 - used
            if rem < 0:
                return
            half = math.sqrt(rem)
            lo = math.ceil((-half - base[i]) / step)
            hi = math.floor((half - base[i]) / step)
            for z in range(lo, hi + 1):
                w = base[i] + step * z
                if used + w * w <= r2:
                    buf[i] = w
                    dfs(i + 1, used + w * w)

        dfs(0, 0.0)
    if not words:
        return np.zeros((0, n))
    return np.array(words)


def build_codebook(
    lat: Lattice,
    power: float,
    target_rate: float,
    shift_trials: int = 1,
    seed=0,
    shift=None,
) -> Codebook:
    """Search random shifts in the fundamental cell and keep the codebook of
    the best shift. `target_met` records whether |C| >= 2**(n*rate); the
    result is never silently truncated.

    An explicit `shift` bypasses the random search.
    """
    if power <= 0:
        raise ValueError("power must be positive")
    if target_rate < 0:
        raise ValueError("target_rate must be nonnegative")
    if shift_trials < 1:
        raise ValueError("shift_trials must be >= 1")
    n = lat.n
    target = 2.0 ** (n * target_rate)

    if shift is not None:
        shifts = [np.asarray(shift, dtype=float)]
    else:
        rng = np.random.default_rng(seed)
        # [0, gamma*p)^n tiles space by the sublattice gamma*p*Z^n, so the
        # codebook cardinality as a function of the shift is periodic over it.
        shifts = [rng.uniform(0, lat.gamma * lat.p, size=n) for _ in range(shift_trials)]

    best_words = None
    best_shift = None
    for s in shifts:
        words = _enumerate_shifted_sphere(lat, s, power)
        if best_words is None or len(words) > len(best_words):
            best_words, best_shift = words, s
    return Codebook(
        lattice=lat,
        shift=best_shift,
        power=float(power),
        words=best_words,
        target_rate=float(target_rate),
        target_met=len(best_words) >= target - 1e-9,
    )


def count_points_in_box(lat: Lattice, half_width: float) -> int:
    """Number of lattice points in the centered box [-L, L]^n (closed)."""
    L = half_width
    total = 0
    p, gamma = lat.p, lat.gamma
    for c in lat.code.codewords:
        per_coord = (
            np.floor((L / gamma - c) / p) - np.ceil((-L / gamma - c) / p) + 1
        )
        per_coord = np.maximum(per_coord, 0)
        total += int(np.prod(per_coord))
    return total


def lattice_to_json(lat: Lattice) -> str:
    doc = {
        "n": lat.n,
        "k": lat.code.k,
        "p": lat.p,
        "gamma": lat.gamma,
        "generators": lat.code.generators.tolist(),
    }
    return json.dumps(doc)


def lattice_from_json(text: str) -> Lattice:
    doc = json.loads(text)
    code = LinearCode(doc["n"], doc["k"], doc["p"], np.array(doc["generators"], dtype=np.int64).reshape(doc["k"], doc["n"]))
    return Lattice(code, float(doc["gamma"]))


def codebook_to_json(cb: Codebook) -> str:
    doc = {
        "n": cb.lattice.n,
        "k": cb.lattice.code.k,
        "p": cb.lattice.p,
        "gamma": cb.lattice.gamma,
        "generators": cb.lattice.code.generators.tolist(),
        "shift": cb.shift.tolist(),
        "power": cb.power,
    }
    return json.dumps(doc)
