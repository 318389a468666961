# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: integer determinants, binary annealing and the
incremental angle-annealing engine.

Random numbers are always drawn by the caller and passed in as arrays, so the
compiled and the pure-Python backends consume identical streams.
"""
from libc.math cimport cos, sin, exp, fabs, sqrt, fmod, M_PI, isfinite

import numpy as np

cdef enum:
    MAXN = 40
    MAXD = 16

cdef double GS_THRESHOLD = 1e-8


cdef long long _bareiss(long long[:, ::1] src, int n) nogil:
    cdef long long a[MAXN][MAXN]
    cdef long long prev = 1, tmp
    cdef int i, j, r, sign = 1, piv
    for i in range(n):
        for j in range(n):
            a[i][j] = src[i, j]
    for r in range(n - 1):
        if a[r][r] == 0:
            piv = -1
            for i in range(r + 1, n):
                if a[i][r] != 0:
                    piv = i
                    break
            if piv < 0:
                return 0
            for j in range(n):
                tmp = a[r][j]
                a[r][j] = a[piv][j]
                a[piv][j] = tmp
            sign = -sign
        for i in range(r + 1, n):
            for j in range(r + 1, n):
                a[i][j] = (a[i][j] * a[r][r] - a[i][r] * a[r][j]) // prev
        prev = a[r][r]
    return sign * a[n - 1][n - 1]


def bareiss_det(a):
    """Exact determinant of a small square integer matrix (64-bit)."""
    cdef long long[:, ::1] m = np.ascontiguousarray(a, dtype=np.int64)
    cdef int n = m.shape[0]
    if m.shape[1] != n:
        raise ValueError("square matrix required")
    if n == 0:
        return 1
    if n > MAXN:
        raise ValueError("matrix too large for the compiled kernel")
    return int(_bareiss(m, n))


cdef inline long long _iabs(long long x) nogil:
    return -x if x < 0 else x


def binary_anneal_stage(signed char[:, ::1] bits, long long cur, double temperature,
                        long long[::1] flips, double[::1] uniforms,
                        signed char[:, ::1] best_bits, long long best):
    """Run one fixed-temperature stage of bit-flip Metropolis on |det|.

    ``bits`` is k x (k+1); the always-yes row is appended internally.
    ``cur`` and ``best`` are absolute determinants. Returns ``(cur, best)``.
    """
    cdef int k = bits.shape[0]
    cdef int n = k + 1
    cdef long long[:, ::1] work = np.ones((n, n), dtype=np.int64)
    cdef Py_ssize_t s, nsteps = flips.shape[0]
    cdef int i, j, r, c
    cdef long long new
    for i in range(k):
        for j in range(n):
            work[i, j] = bits[i, j]
    with nogil:
        for s in range(nsteps):
            r = <int>(flips[s] // n)
            c = <int>(flips[s] % n)
            work[r, c] = 1 - work[r, c]
            new = _iabs(_bareiss(work, n))
            if new >= cur or uniforms[s] < exp((<double>(new - cur)) / temperature):
                cur = new
                bits[r, c] = <signed char>work[r, c]
                if cur > best:
                    best = cur
                    for i in range(k):
                        for j in range(n):
                            best_bits[i, j] = <signed char>work[i, j]
            else:
                work[r, c] = 1 - work[r, c]
    return cur, best


cdef double _lu_det(double[:, ::1] p, int n) nogil:
    cdef double a[MAXN][MAXN]
    cdef double det = 1.0, big, f, tmp
    cdef int i, j, r, piv
    for i in range(n):
        for j in range(n):
            a[i][j] = p[i, j]
    for r in range(n):
        piv = r
        big = fabs(a[r][r])
        for i in range(r + 1, n):
            if fabs(a[i][r]) > big:
                big = fabs(a[i][r])
                piv = i
        if big == 0.0:
            return 0.0
        if piv != r:
            for j in range(n):
                tmp = a[r][j]
                a[r][j] = a[piv][j]
                a[piv][j] = tmp
            det = -det
        det *= a[r][r]
        for i in range(r + 1, n):
            f = a[i][r] / a[r][r]
            for j in range(r + 1, n):
                a[i][j] -= f * a[r][j]
    return det


def lu_det(p):
    """Determinant by LU with partial pivoting (same arithmetic as the engine)."""
    cdef double[:, ::1] m = np.ascontiguousarray(p, dtype=np.float64)
    cdef int n = m.shape[0]
    if n > MAXN:
        raise ValueError("matrix too large for the compiled kernel")
    return _lu_det(m, n)


cdef class AnnealEngine:
    """Incremental Metropolis engine over a block-structured angle vector.

    Every block is one unit vector: either a preparation ket or one free
    column of an effect. A proposal changes one angle, so only one column
    (preparation) or one row (effect) of the probability matrix changes.
    """
    cdef int d, k, m, nblocks, nangles
    cdef long long[::1] b_kind, b_owner, b_support, b_offset, b_nphase
    cdef long long[::1] angle_block, eff_first, eff_nfree
    cdef signed char[:, ::1] eff_fixed
    cdef double[::1] ang
    cdef double[::1] best_ang
    cdef double complex[:, ::1] vec      # block vectors (nblocks x d)
    cdef double complex[:, ::1] prep     # preparation kets (m x d)
    cdef double complex[:, ::1] cols     # orthonormalized free columns (nblocks x d)
    cdef double[:, ::1] p
    cdef double[:, ::1] p_saved
    cdef double complex[:, ::1] save_vec
    cdef public double current
    cdef public double best
    cdef public long long evaluations
    cdef public long long rejected_degenerate
    cdef public long long nonfinite

    def __init__(self, int d, int k, blocks, angle_block, eff_first, eff_nfree, eff_fixed, angles):
        blocks = np.ascontiguousarray(blocks, dtype=np.int64)
        if d > MAXD or k + 1 > MAXN:
            raise ValueError("problem too large for the compiled kernel")
        self.d = d
        self.k = k
        self.m = k + 1
        self.nblocks = blocks.shape[0]
        self.b_kind = np.ascontiguousarray(blocks[:, 0])
        self.b_owner = np.ascontiguousarray(blocks[:, 1])
        self.b_support = np.ascontiguousarray(blocks[:, 2])
        self.b_offset = np.ascontiguousarray(blocks[:, 3])
        self.b_nphase = np.ascontiguousarray(blocks[:, 4])
        self.angle_block = np.ascontiguousarray(angle_block, dtype=np.int64)
        self.eff_first = np.ascontiguousarray(eff_first, dtype=np.int64)
        self.eff_nfree = np.ascontiguousarray(eff_nfree, dtype=np.int64)
        self.eff_fixed = np.ascontiguousarray(eff_fixed, dtype=np.int8)
        self.ang = np.array(angles, dtype=np.float64)
        self.nangles = self.ang.shape[0]
        self.best_ang = np.array(self.ang)
        self.vec = np.zeros((self.nblocks, d), dtype=np.complex128)
        self.cols = np.zeros((self.nblocks, d), dtype=np.complex128)
        self.prep = np.zeros((self.m, d), dtype=np.complex128)
        self.save_vec = np.zeros((MAXN, d), dtype=np.complex128)
        self.p = np.ones((self.m, self.m), dtype=np.float64)
        self.p_saved = np.ones((self.m, self.m), dtype=np.float64)
        self.evaluations = 0
        self.rejected_degenerate = 0
        self.nonfinite = 0
        if not self._full_update():
            raise ArithmeticError("degenerate effect columns at the starting point")
        self.current = fabs(_lu_det(self.p, self.m))
        self.best = self.current

    cdef void _block_vector(self, int b) nogil:
        cdef int s = <int>self.b_support[b]
        cdef int off = <int>self.b_offset[b]
        cdef int nph = <int>self.b_nphase[b]
        cdef int q
        cdef double run = 1.0, th
        for q in range(self.d):
            self.vec[b, q] = 0.0
        for q in range(s - 1):
            th = self.ang[off + q]
            self.vec[b, q] = run * cos(th)
            run *= sin(th)
        self.vec[b, s - 1] = run
        for q in range(nph):
            th = self.ang[off + s - 1 + q]
            self.vec[b, q + 1] = self.vec[b, q + 1] * (cos(th) + 1j * sin(th))

    cdef bint _effect_columns(self, int i) nogil:
        cdef int first = <int>self.eff_first[i]
        cdef int nf = <int>self.eff_nfree[i]
        cdef int c, c2, q, rep
        cdef double complex ov
        cdef double nrm
        for c in range(nf):
            for q in range(self.d):
                if self.eff_fixed[i, q]:
                    self.cols[first + c, q] = 0.0
                else:
                    self.cols[first + c, q] = self.vec[first + c, q]
            for rep in range(2):
                for c2 in range(c):
                    ov = 0.0
                    for q in range(self.d):
                        ov = ov + self.cols[first + c2, q].conjugate() * self.cols[first + c, q]
                    for q in range(self.d):
                        self.cols[first + c, q] = self.cols[first + c, q] - ov * self.cols[first + c2, q]
            nrm = 0.0
            for q in range(self.d):
                nrm += self.cols[first + c, q].real * self.cols[first + c, q].real + self.cols[first + c, q].imag * self.cols[first + c, q].imag
            nrm = sqrt(nrm)
            if nrm < GS_THRESHOLD:
                return False
            for q in range(self.d):
                self.cols[first + c, q].real = self.cols[first + c, q].real / nrm
                self.cols[first + c, q].imag = self.cols[first + c, q].imag / nrm
        return True

    cdef double _prob(self, int i, int j) nogil:
        cdef int first = <int>self.eff_first[i]
        cdef int nf = <int>self.eff_nfree[i]
        cdef int c, q
        cdef double tot = 0.0
        cdef double complex ov
        for q in range(self.d):
            if self.eff_fixed[i, q]:
                tot += self.prep[j, q].real * self.prep[j, q].real + self.prep[j, q].imag * self.prep[j, q].imag
        for c in range(nf):
            ov = 0.0
            for q in range(self.d):
                ov = ov + self.cols[first + c, q].conjugate() * self.prep[j, q]
            tot += ov.real * ov.real + ov.imag * ov.imag
        return tot

    cdef bint _full_update(self):
        cdef int b, i, j, q
        for b in range(self.nblocks):
            self._block_vector(b)
            if self.b_kind[b] == 0:
                for q in range(self.d):
                    self.prep[self.b_owner[b], q] = self.vec[b, q]
        for i in range(self.k):
            if not self._effect_columns(i):
                return False
        for i in range(self.k):
            for j in range(self.m):
                self.p[i, j] = self._prob(i, j)
        return True

    def evaluate(self):
        """Recompute everything from the current angles; returns |det|."""
        if not self._full_update():
            raise ArithmeticError("degenerate effect columns")
        self.current = fabs(_lu_det(self.p, self.m))
        return self.current

    def probability_matrix(self):
        return np.array(self.p)

    @property
    def angles(self):
        return np.array(self.ang)

    @property
    def best_angles(self):
        return np.array(self.best_ang)

    def run_stage(self, double temperature, double width, long long sweeps,
                  double[::1] proposals, double[::1] uniforms):
        """One stage: ``sweeps`` passes over all angles at fixed temperature.

        ``proposals`` and ``uniforms`` hold ``sweeps * n_angles`` draws in
        [0, 1). Returns the best |det| seen during the stage.
        """
        cdef long long sw, s = 0
        cdef int a, b, owner, kind, q, i, j, c, first, nf
        cdef double old, new_val, stage_best = self.current
        cdef double two_pi = 2.0 * M_PI
        cdef bint ok
        with nogil:
            for sw in range(sweeps):
                for a in range(self.nangles):
                    b = <int>self.angle_block[a]
                    kind = <int>self.b_kind[b]
                    owner = <int>self.b_owner[b]
                    old = self.ang[a]
                    self.ang[a] = fmod(old + (2.0 * proposals[s] - 1.0) * width, two_pi)
                    if self.ang[a] < 0:
                        self.ang[a] += two_pi
                    for q in range(self.d):
                        self.save_vec[0, q] = self.vec[b, q]
                    self._block_vector(b)
                    ok = True
                    if kind == 0:
                        for i in range(self.k):
                            self.p_saved[i, owner] = self.p[i, owner]
                        for q in range(self.d):
                            self.prep[owner, q] = self.vec[b, q]
                        for i in range(self.k):
                            self.p[i, owner] = self._prob(i, owner)
                    else:
                        first = <int>self.eff_first[owner]
                        nf = <int>self.eff_nfree[owner]
                        for c in range(nf):
                            for q in range(self.d):
                                self.save_vec[1 + c, q] = self.cols[first + c, q]
                        for j in range(self.m):
                            self.p_saved[owner, j] = self.p[owner, j]
                        ok = self._effect_columns(owner)
                        if ok:
                            for j in range(self.m):
                                self.p[owner, j] = self._prob(owner, j)
                    if ok:
                        new_val = fabs(_lu_det(self.p, self.m))
                        self.evaluations += 1
                        if not isfinite(new_val):
                            self.nonfinite += 1
                        ok = isfinite(new_val) and (
                            new_val >= self.current
                            or uniforms[s] < exp((new_val - self.current) / temperature))
                    else:
                        self.rejected_degenerate += 1
                        self.evaluations += 1
                    if ok:
                        self.current = new_val
                        if new_val > stage_best:
                            stage_best = new_val
                        if new_val > self.best:
                            self.best = new_val
                            for q in range(self.nangles):
                                self.best_ang[q] = self.ang[q]
                    else:
                        self.ang[a] = old
                        for q in range(self.d):
                            self.vec[b, q] = self.save_vec[0, q]
                        if kind == 0:
                            for q in range(self.d):
                                self.prep[owner, q] = self.vec[b, q]
                            for i in range(self.k):
                                self.p[i, owner] = self.p_saved[i, owner]
                        else:
                            for c in range(nf):
                                for q in range(self.d):
                                    self.cols[first + c, q] = self.save_vec[1 + c, q]
                            for j in range(self.m):
                                self.p[owner, j] = self.p_saved[owner, j]
                    s += 1
        return stage_best
