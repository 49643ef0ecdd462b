"""Dense linear algebra over F_ell and exact 0/1 determinants.

Everything is Gaussian elimination: an incremental rank tracker for the
relation sieve (stop as soon as enough independent rows exist), a verified
left-solver x*M = target for descent, and an exact integer determinant via
CRT over word-size primes for the design-matrix experiments.  When ell fits
comfortably in int64 the kernels are vectorized numpy; a plain-object
fallback keeps large moduli correct (only tests use those).
"""

import math

import numpy as np

from .errors import NoSolution, NotInRowSpan
from .gf import is_probable_prime

# int64 products a*b with a,b < ell stay below 2^62 for ell < 2^31; sums of
# up to 2^16 such products stay below 2^63 for ell < 2^23.  The moduli the
# package actually solves under are far smaller; guard anyway.
FAST_ELL = 1 << 31
_SUM_SAFE_ELL = 1 << 23


def _use_fast(ell, nsum=1):
    return ell < FAST_ELL and (nsum <= 1 or ell < _SUM_SAFE_ELL)


def _matmul_mod(A, B, ell):
    """(A @ B) % ell for int64 residue matrices, ell < 2^23.

    numpy routes float64 matmul through BLAS but not int64, so split A into
    12-bit halves: every intermediate stays below 2^47, exactly
    representable in float64 even after summing ~2^16 terms.
    """
    assert ell < _SUM_SAFE_ELL
    if A.dtype == object or B.dtype == object or A.shape[0] * A.shape[1] < 4096:
        return (A @ B) % ell
    Af = A.astype(np.float64)
    Bf = B.astype(np.float64)
    hi = np.floor_divide(Af, 4096.0)
    lo = Af - hi * 4096.0
    out = ((hi @ Bf) % ell) * 4096.0 + (lo @ Bf)
    return out.astype(np.int64) % ell


def _as_rows(M, ell):
    dtype = np.int64 if ell < FAST_ELL else object
    A = np.array([[int(x) % ell for x in row] for row in M], dtype=dtype)
    if A.ndim == 1:
        A = A.reshape(0, 0) if A.size == 0 else A.reshape(1, -1)
    return A


def rank_mod(M, ell):
    """Rank over F_ell by elimination with partial pivoting."""
    assert is_probable_prime(ell)
    A = _as_rows(M, ell)
    if A.size == 0:
        return 0
    nrows, ncols = A.shape
    r = 0
    for c in range(ncols):
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            A[[r, i]] = A[[i, r]]
        inv = pow(int(A[r, c]), ell - 2, ell)
        A[r] = A[r] * inv % ell
        below = A[r + 1:, c]
        mask = below != 0
        if mask.any():
            A[r + 1:][mask] = (A[r + 1:][mask]
                               - below[mask, None] * A[r][None, :]) % ell
        r += 1
        if r == nrows:
            break
    return r


class RankTracker:
    """Incremental rank over F_ell; stored rows are kept fully reduced.

    add_rows() eliminates a whole batch with two matrix products, so the
    sieve can poll rank cheaply between chunks.
    """

    def __init__(self, ncols, ell):
        assert is_probable_prime(ell)
        self.ncols = ncols
        self.ell = ell
        self._fast = _use_fast(ell, ncols)
        dtype = np.int64 if self._fast else object
        self._R = np.zeros((0, ncols), dtype=dtype)
        self.pivcols = []

    @property
    def rank(self):
        return len(self.pivcols)

    def _reduce_against_stored(self, B):
        if self.rank and B.size:
            coeff = B[:, self.pivcols]
            if self._fast:
                B = (B - _matmul_mod(coeff, self._R, self.ell)) % self.ell
            else:
                B = (B - coeff @ self._R) % self.ell
        return B

    def add_rows(self, rows):
        """Insert rows (iterable of length-ncols vectors); returns new rank."""
        dtype = np.int64 if self._fast else object
        B = np.array([[int(x) % self.ell for x in row] for row in rows],
                     dtype=dtype)
        if B.size == 0:
            return self.rank
        B = self._reduce_against_stored(B)
        ell = self.ell
        fresh = []
        fresh_piv = []
        for v in B:
            for pc, w in zip(fresh_piv, fresh):
                c = v[pc]
                if c:
                    v = (v - c * w) % ell
            nz = np.nonzero(v)[0]
            if nz.size == 0:
                continue
            pc = int(nz[0])
            v = v * pow(int(v[pc]), ell - 2, ell) % ell
            fresh.append(v)
            fresh_piv.append(pc)
        if not fresh:
            return self.rank
        # the fresh block must be internally reduced too, or the stored
        # matrix stops being a reduced echelon form and later batches
        # reduce incompletely
        for j in range(1, len(fresh)):
            w, pcj = fresh[j], fresh_piv[j]
            for i in range(j):
                c = fresh[i][pcj]
                if c:
                    fresh[i] = (fresh[i] - c * w) % ell
        F = np.stack(fresh) if self._fast else np.array(fresh, dtype=object)
        if self.rank:
            coeff = self._R[:, fresh_piv]
            if self._fast:
                self._R = (self._R - _matmul_mod(coeff, F, ell)) % ell
            else:
                self._R = (self._R - coeff @ F) % ell
        self._R = np.concatenate([self._R, F])
        self.pivcols.extend(fresh_piv)
        return self.rank

    def add_row(self, row):
        before = self.rank
        return self.add_rows([row]) > before

    def missing_columns(self):
        """Columns not yet covered by a pivot."""
        have = set(self.pivcols)
        return [c for c in range(self.ncols) if c not in have]


def _rref(A, ell, naug):
    """Full reduced row echelon of [coeffs | naug target columns]."""
    nrows, ncols = A.shape
    ncoef = ncols - naug
    pivots = []
    r = 0
    for c in range(ncoef):
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            A[[r, i]] = A[[i, r]]
        inv = pow(int(A[r, c]), ell - 2, ell)
        A[r] = A[r] * inv % ell
        col = A[:, c].copy()
        col[r] = 0
        mask = col != 0
        if mask.any():
            A[mask] = (A[mask] - col[mask, None] * A[r][None, :]) % ell
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return A, pivots


def solve_left(M, targets, ell):
    """Solve x * M = t over F_ell for each target row t.

    M is r x c; each target has length c; returns one length-r coefficient
    list per target (a single target may be passed bare).  Every solution is
    verified by multiplying back before it is returned.
    """
    single = not hasattr(targets[0], "__len__")
    tlist = [targets] if single else list(targets)
    A = _as_rows(M, ell)
    r, c = A.shape if A.size else (len(M), len(tlist[0]))
    # unknowns x are combinations of rows: eliminate on [M^T | t^T]
    aug = np.concatenate(
        [A.T, _as_rows(tlist, ell).T], axis=1) if A.size else None
    if aug is None:
        raise NoSolution("empty matrix")
    aug, pivots = _rref(aug, ell, len(tlist))
    sols = []
    for t_idx in range(len(tlist)):
        bcol = aug[:, r + t_idx]
        x = [0] * r
        for row_i, pc in enumerate(pivots):
            x[pc] = int(bcol[row_i])
        # rows beyond the pivot rows must have zero target residue
        if any(int(v) for v in bcol[len(pivots):]):
            raise NotInRowSpan(f"target {t_idx} outside row span")
        sols.append(x)
    # unconditional multiply-back check
    for x, t in zip(sols, tlist):
        if not _verify_left(x, A, t, ell):
            raise NotInRowSpan("verification failed after solve")
    return sols[0] if single else sols


def solve_right(M, rhs, ell):
    """Solve M * u = rhs over F_ell when the solution is unique.

    Requires full column rank (every unknown pivoted); raises RankDeficient
    otherwise and NoSolution on an inconsistent system.  The solution is
    verified by multiplying back before it is returned.
    """
    from .errors import RankDeficient

    A = _as_rows(M, ell)
    if A.size == 0:
        raise NoSolution("empty matrix")
    nrows, ncols = A.shape
    b = _as_rows([rhs], ell).T
    aug, pivots = _rref(np.concatenate([A, b], axis=1), ell, 1)
    if len(pivots) < ncols:
        missing = sorted(set(range(ncols)) - set(pivots))
        raise RankDeficient(
            f"column rank {len(pivots)} of {ncols}; "
            f"undetermined columns {missing[:8]}{'...' if len(missing) > 8 else ''}",
            rank=len(pivots), needed=ncols, rows=nrows)
    if any(int(v) for v in aug[len(pivots):, ncols]):
        raise NoSolution("inconsistent system")
    u = [0] * ncols
    for row_i, pc in enumerate(pivots):
        u[pc] = int(aug[row_i, ncols])
    uv = np.asarray(u, dtype=A.dtype)
    if _use_fast(ell, ncols):
        prod = _matmul_mod(A, uv.reshape(-1, 1), ell).ravel()
    else:
        prod = (A @ uv) % ell
    tv = [int(v) % ell for v in rhs]
    if any(int(a) != int(bb) for a, bb in zip(prod, tv)):
        raise NoSolution("verification failed after solve")
    return u


class LinearSystem:
    """Augmented system over F_ell grown in batches, kept fully reduced.

    Rows are (coefficients | rhs).  Pivots live in coefficient columns
    only, so the stored form stays a reduced echelon matrix whose rhs
    column reads off the unique solution once every column is pivoted.
    A row that reduces to zero coefficients with a nonzero rhs means the
    input relations contradict each other and raises NoSolution at once.
    """

    def __init__(self, ncols, ell):
        assert is_probable_prime(ell)
        assert ell < FAST_ELL, "batched reduction is int64 only"
        self.ncols = ncols
        self.ell = ell
        self._R = np.zeros((0, ncols + 1), dtype=np.int64)
        self.pivcols = []

    @property
    def rank(self):
        return len(self.pivcols)

    def missing_columns(self):
        have = set(self.pivcols)
        return [c for c in range(self.ncols) if c not in have]

    def add_rows(self, rows):
        """Insert rows (length ncols+1 each, rhs last); returns new rank."""
        B = np.asarray(rows, dtype=np.int64) % self.ell
        if B.size == 0:
            return self.rank
        assert B.ndim == 2 and B.shape[1] == self.ncols + 1
        A, pivots = _rref(np.concatenate([self._R, B]), self.ell, 1)
        tail = A[len(pivots):, self.ncols]
        if tail.size and tail.any():
            raise NoSolution("contradictory rows: zero row, nonzero rhs")
        self._R = np.ascontiguousarray(A[:len(pivots)])
        self.pivcols = pivots
        return self.rank

    def solution(self):
        """The unique solution vector; full column rank required."""
        from .errors import RankDeficient

        if self.rank < self.ncols:
            missing = self.missing_columns()
            raise RankDeficient(
                f"column rank {self.rank} of {self.ncols}; "
                f"undetermined columns {missing[:8]}"
                f"{'...' if len(missing) > 8 else ''}",
                rank=self.rank, needed=self.ncols, rows=int(self._R.shape[0]))
        u = [0] * self.ncols
        for row_i, pc in enumerate(self.pivcols):
            u[pc] = int(self._R[row_i, self.ncols])
        return u


def _verify_left(x, A, t, ell):
    xv = np.asarray(x, dtype=np.int64 if _use_fast(ell) else object)
    if _use_fast(ell, len(x)):
        prod = (xv @ A) % ell
    else:
        prod = np.zeros(A.shape[1], dtype=object)
        for xi, row in zip(x, A):
            if xi:
                prod = (prod + int(xi) * row) % ell
    tv = np.asarray([int(v) % ell for v in t])
    return all(int(a) == int(b) for a, b in zip(prod, tv))


# ------------------------------------------------------ determinants -------

_CRT_PRIMES = []


def _crt_primes(target_product):
    """Largest primes below 2^31, extended until their product exceeds
    target_product."""
    prod = 1
    for p in _CRT_PRIMES:
        prod *= p
        if prod > target_product:
            break
    cand = (_CRT_PRIMES[-1] - 2) if _CRT_PRIMES else (2 ** 31 - 1)
    while prod <= target_product:
        while not is_probable_prime(cand):
            cand -= 2
        _CRT_PRIMES.append(cand)
        prod *= cand
        cand -= 2
    out = []
    prod = 1
    for p in _CRT_PRIMES:
        out.append(p)
        prod *= p
        if prod > target_product:
            return out
    return out


def _det_mod(M, p):
    A = np.array(M, dtype=np.int64) % p
    n = A.shape[0]
    det = 1
    for c in range(n):
        nz = np.nonzero(A[c:, c])[0]
        if nz.size == 0:
            return 0
        i = c + int(nz[0])
        if i != c:
            A[[c, i]] = A[[i, c]]
            det = -det
        piv = int(A[c, c])
        det = det * piv % p
        inv = pow(piv, p - 2, p)
        below = A[c + 1:, c]
        mask = below != 0
        if mask.any():
            factor = below[mask, None] * inv % p
            A[c + 1:][mask] = (A[c + 1:][mask]
                               - factor * A[c][None, :]) % p
    return det % p


def det_exact(M):
    """Exact integer determinant of a 0/1 matrix via CRT residues."""
    A = np.asarray(M)
    assert A.ndim == 2 and A.shape[0] == A.shape[1]
    assert ((A == 0) | (A == 1)).all(), "entries must be 0/1"
    n = A.shape[0]
    if n == 0:
        return 1
    # instance Hadamard bound: for 0/1 rows the squared norm is the row sum
    had2 = 1
    for s in map(int, A.sum(axis=1)):
        had2 *= s
    had2c = 1
    for s in map(int, A.sum(axis=0)):
        had2c *= s
    hadamard = math.isqrt(min(had2, had2c)) + 1
    primes = _crt_primes(2 * hadamard)
    residues = _det_mod_batch(A, primes)
    # incremental CRT, then centered lift
    x, mod = 0, 1
    for p, r in zip(primes, map(int, residues)):
        # adjust x by a multiple of mod to also satisfy x = r mod p
        k = (r - x) * pow(mod % p, p - 2, p) % p
        x += mod * k
        mod *= p
    if x > mod // 2:
        x -= mod
    return int(x)


def _det_mod_batch(M, primes):
    """Determinant residues modulo each prime, one shared elimination
    sweep over a (primes, n, n) stack.  Row images diverge between primes
    only at the rare zero pivot, handled per prime."""
    k = len(primes)
    n = M.shape[0]
    P = np.array(primes, dtype=np.int64)
    A = np.broadcast_to(np.asarray(M, dtype=np.int64), (k, n, n)).copy()
    det = np.ones(k, dtype=np.int64)
    dead = np.zeros(k, dtype=bool)
    rows = np.arange(k)
    for c in range(n):
        col = A[:, c:, c]
        first = np.argmax(col != 0, axis=1)
        dead |= col[rows, first] == 0
        for j in np.nonzero((first > 0) & ~dead)[0]:
            i = c + int(first[j])
            A[j, [c, i]] = A[j, [i, c]]
            det[j] = -det[j]
        piv = A[:, c, c].copy()
        piv[dead] = 1
        det = det * piv % P
        inv = np.array([pow(int(piv[j]), int(P[j]) - 2, int(P[j]))
                        for j in range(k)], dtype=np.int64)
        if c + 1 < n:
            factor = A[:, c + 1:, c] * inv[:, None] % P[:, None]
            A[:, c + 1:, c:] -= factor[:, :, None] * A[:, c, None, c:]
            A[:, c + 1:, c:] %= P[:, None, None]
    det[dead] = 0
    return det % P
