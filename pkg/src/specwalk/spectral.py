"""Neighborhood Laplacian spectra and exact 1-D Wasserstein distances."""

from __future__ import annotations

import logging
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .graph import Graph, khop_vertices

logger = logging.getLogger(__name__)

RANGE_TOL = 1e-8


class NotSymmetricError(ValueError):
    pass


def normalized_laplacian(g: Graph, members) -> np.ndarray:
    """``I - D^-1/2 A D^-1/2`` of the subgraph induced by ``members``.

    Rows follow the order of ``members``. A vertex with no neighbor inside
    the subgraph gets an all-zero row.
    """
    members = [int(v) for v in members]
    k = len(members)
    pos = {v: i for i, v in enumerate(members)}
    A = np.zeros((k, k))
    for i, v in enumerate(members):
        for w in g.neighbors(v):
            j = pos.get(int(w))
            if j is not None:
                A[i, j] = 1.0
    deg = A.sum(axis=1)
    inv = np.zeros(k)
    nz = deg > 0
    inv[nz] = 1.0 / np.sqrt(deg[nz])
    L = -(inv[:, None] * A * inv[None, :])
    L[np.diag_indices(k)] = nz.astype(float)
    return L


@numba.njit(cache=True, nogil=True)
def _jacobi(a, tol, max_sweeps):
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if math.sqrt(2.0 * off) < tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for r in range(n):
                    arp = a[r, p]
                    arq = a[r, q]
                    a[r, p] = c * arp - s * arq
                    a[r, q] = s * arp + c * arq
                for r in range(n):
                    apr = a[p, r]
                    aqr = a[q, r]
                    a[p, r] = c * apr - s * aqr
                    a[q, r] = s * apr + c * aqr
    return -1


def symmetric_eigenvalues(matrix, tol: float = 1e-10, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a small dense symmetric matrix by cyclic Jacobi rotations.

    Iterates until the Frobenius norm of the off-diagonal part drops below
    ``tol``; returns the eigenvalues in ascending order.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if a.size and np.max(np.abs(a - a.T)) > tol:
        raise NotSymmetricError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    if _jacobi(a, tol, max_sweeps) < 0:
        raise ArithmeticError("Jacobi iteration did not converge")
    return np.sort(np.diag(a))


@dataclass(frozen=True, eq=False)
class SpectrumMeasure:
    """Uniform probability measure on the (ascending) eigenvalues."""

    atoms: np.ndarray

    def __post_init__(self):
        atoms = np.sort(np.asarray(self.atoms, dtype=np.float64).ravel())
        if atoms.size == 0:
            raise ValueError("a spectrum measure needs at least one atom")
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)

    @property
    def size(self) -> int:
        return len(self.atoms)

    @property
    def masses(self) -> np.ndarray:
        return np.full(self.size, 1.0 / self.size)

    def __eq__(self, other):
        return isinstance(other, SpectrumMeasure) and np.array_equal(self.atoms, other.atoms)

    def __len__(self):
        return self.size


def node_spectrum(g: Graph, v: int, hops: int = 2, cap: int = 30) -> SpectrumMeasure:
    members = khop_vertices(g, v, hops, cap)
    return SpectrumMeasure(symmetric_eigenvalues(normalized_laplacian(g, members)))


@numba.njit(cache=True, nogil=True)
def _wpp_uniform(x, y, p):
    # W_p^p between uniform measures on sorted x (n atoms) and y (m atoms).
    # Breakpoints i/n and j/m are compared in units of 1/(n*m) so the merge is exact.
    n = x.shape[0]
    m = y.shape[0]
    total = 0.0
    i = 0
    j = 0
    pos = 0
    nm = n * m
    while pos < nm:
        next_x = (i + 1) * m
        next_y = (j + 1) * n
        nxt = min(next_x, next_y)
        diff = abs(x[i] - y[j])
        if p == 1.0:
            total += (nxt - pos) * diff
        elif p == 2.0:
            total += (nxt - pos) * diff * diff
        else:
            total += (nxt - pos) * diff ** p
        pos = nxt
        if next_x == nxt:
            i += 1
        if next_y == nxt:
            j += 1
    return total / nm


@numba.njit(cache=True, nogil=True)
def _wpp_equal(x, y, p):
    k = x.shape[0]
    total = 0.0
    for i in range(k):
        total += abs(x[i] - y[i]) ** p
    return total / k


def _atoms(mu):
    if isinstance(mu, SpectrumMeasure):
        return mu.atoms
    return np.sort(np.asarray(mu, dtype=np.float64).ravel())


def wasserstein_1d(mu, nu, p: float = 2.0) -> float:
    """Exact p-Wasserstein distance between two uniform measures on the line.

    Integrates ``|F_mu^-1(t) - F_nu^-1(t)|^p`` over the merged quantile
    breakpoints of both measures, so unequal atom counts are handled exactly.
    Accepts :class:`SpectrumMeasure` objects or raw atom arrays.
    """
    if p < 1:
        raise ValueError("Wasserstein order p must be >= 1")
    x, y = _atoms(mu), _atoms(nu)
    if x.size == 0 or y.size == 0:
        raise ValueError("measures must be nonempty")
    return float(_wpp_uniform(x, y, float(p)) ** (1.0 / p))


def wasserstein_1d_equal(mu, nu, p: float = 2.0) -> float:
    """Sorted-matching form, valid only when both measures have the same atom count."""
    x, y = _atoms(mu), _atoms(nu)
    if x.size != y.size:
        raise ValueError("equal-count form needs measures of equal size")
    return float(_wpp_equal(x, y, float(p)) ** (1.0 / p))


@dataclass(frozen=True, eq=False)
class SpectraCache:
    """Per-vertex spectrum measures of one graph for fixed neighborhood parameters."""

    spectra: tuple
    hops: int
    cap: int
    digest: str
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.spectra)

    def __getitem__(self, v) -> SpectrumMeasure:
        return self.spectra[v]

    def check(self, g: Graph) -> None:
        if g.digest() != self.digest or g.n != self.n:
            raise ValueError(
                f"spectra cache was built for graph {self.digest}, not {g.digest()}")

    def distance(self, u: int, v: int, p: float = 2.0) -> float:
        return spectral_distance(self, u, v, p)

    def distances_from(self, v: int, p: float = 2.0) -> np.ndarray:
        x = self.spectra[v].atoms
        return np.array([_wpp_uniform(x, s.atoms, float(p)) for s in self.spectra]) ** (1.0 / p)

    def pairwise(self, p: float = 2.0) -> np.ndarray:
        """Dense ``n x n`` matrix of spectral distances."""
        atoms, offsets = self.packed()
        return _pairwise(atoms, offsets, float(p))

    def packed(self):
        sizes = np.array([s.size for s in self.spectra], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        return np.concatenate([s.atoms for s in self.spectra]), offsets


@numba.njit(cache=True)
def _pairwise(atoms, offsets, p):
    n = offsets.shape[0] - 1
    out = np.zeros((n, n))
    for u in range(n):
        x = atoms[offsets[u]:offsets[u + 1]]
        for v in range(u + 1, n):
            d = _wpp_uniform(x, atoms[offsets[v]:offsets[v + 1]], p) ** (1.0 / p)
            out[u, v] = d
            out[v, u] = d
    return out


def build_spectra(g: Graph, hops: int = 2, cap: int = 30, threads: int = 1) -> SpectraCache:
    """Compute every vertex's neighborhood spectrum once."""
    def one(v):
        return node_spectrum(g, v, hops, cap)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            spectra = tuple(ex.map(one, range(g.n)))
    else:
        spectra = tuple(one(v) for v in range(g.n))
    return SpectraCache(spectra, hops, cap, g.digest())


def spectral_distance(cache: SpectraCache, u: int, v: int, p: float = 2.0) -> float:
    n = cache.n
    if not (0 <= u < n and 0 <= v < n):
        raise KeyError(f"vertex pair ({u}, {v}) not in spectra cache")
    if u == v:
        return 0.0
    key = (min(u, v), max(u, v), float(p))
    d = cache._memo.get(key)
    if d is None:
        d = wasserstein_1d(cache.spectra[u], cache.spectra[v], p)
        cache._memo[key] = d
    return d


def wasserstein_ball(cache: SpectraCache, v: int, c: float, p: float = 2.0) -> set:
    """All cached vertices within spectral distance ``c`` of ``v`` (``v`` included)."""
    if c < 0:
        raise ValueError("radius must be non-negative")
    d = cache.distances_from(v, p)
    ball = set(np.flatnonzero(d <= c).tolist())
    ball.add(int(v))
    return ball


def check_measure(g: Graph, members, mu: SpectrumMeasure, tol: float = 1e-6) -> None:
    """Assert range, zero-eigenvalue and trace invariants of a neighborhood spectrum."""
    a = mu.atoms
    if a.min() < -RANGE_TOL or a.max() > 2 + RANGE_TOL:
        raise AssertionError("eigenvalue outside [0, 2]")
    if abs(a[0]) > RANGE_TOL:
        raise AssertionError("smallest eigenvalue is not 0")
    L = normalized_laplacian(g, members)
    active = int(np.sum(np.diag(L) > 0))
    if abs(a.sum() - active) > tol:
        raise AssertionError("trace identity violated")


_MAGIC = b"SPCB"


def save_spectra(cache: SpectraCache, dest, binary: bool = False) -> None:
    """Write the cache as canonical text, or as fixed-width float64 binary."""
    if binary:
        with open(dest, "wb") as fh:
            d = cache.digest.encode()
            fh.write(_MAGIC + struct.pack("<iiii", len(d), cache.hops, cache.cap, cache.n) + d)
            for s in cache.spectra:
                fh.write(struct.pack("<i", s.size))
                fh.write(s.atoms.astype("<f8").tobytes())
        return
    with open(dest, "w", encoding="utf-8") as fh:
        fh.write(f"# digest={cache.digest} hops={cache.hops} cap={cache.cap} n={cache.n}\n")
        for s in cache.spectra:
            fh.write(f"{s.size} " + " ".join(repr(float(x)) for x in s.atoms) + "\n")


def load_spectra(source) -> SpectraCache:
    with open(source, "rb") as fh:
        head = fh.read(4)
        if head == _MAGIC:
            ld, hops, cap, n = struct.unpack("<iiii", fh.read(16))
            digest = fh.read(ld).decode()
            spectra = []
            for _ in range(n):
                (k,) = struct.unpack("<i", fh.read(4))
                spectra.append(SpectrumMeasure(np.frombuffer(fh.read(8 * k), dtype="<f8")))
            return SpectraCache(tuple(spectra), hops, cap, digest)
    with open(source, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError("spectra file is missing its header")
        meta = dict(tok.split("=", 1) for tok in header[1:].split())
        spectra = []
        for line in fh:
            toks = line.split()
            if not toks:
                continue
            k = int(toks[0])
            if len(toks) != k + 1:
                raise ValueError("spectra file: atom count mismatch")
            spectra.append(SpectrumMeasure(np.array(toks[1:], dtype=np.float64)))
    if len(spectra) != int(meta["n"]):
        raise ValueError("spectra file: vertex count mismatch")
    return SpectraCache(tuple(spectra), int(meta["hops"]), int(meta["cap"]), meta["digest"])
