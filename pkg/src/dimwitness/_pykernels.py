"""Pure-Python twin of the compiled kernels (same names, same semantics).

Used when the extension is not built or when ``DIMWIT_PURE_PYTHON=1``.
Arithmetic follows the compiled code step by step, but results are only
guaranteed reproducible within one backend.
"""
import math

import numpy as np

GS_THRESHOLD = 1e-8


def _bareiss(a):
    n = len(a)
    a = [list(r) for r in a]
    prev, sign = 1, 1
    for r in range(n - 1):
        if a[r][r] == 0:
            piv = next((i for i in range(r + 1, n) if a[i][r] != 0), None)
            if piv is None:
                return 0
            a[r], a[piv] = a[piv], a[r]
            sign = -sign
        arr = a[r][r]
        for i in range(r + 1, n):
            ai, air = a[i], a[i][r]
            ar = a[r]
            for j in range(r + 1, n):
                ai[j] = (ai[j] * arr - air * ar[j]) // prev
        prev = arr
    return sign * a[n - 1][n - 1]


def bareiss_det(a):
    """Exact determinant of a square integer matrix (Python integers)."""
    m = np.asarray(a, dtype=np.int64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("square matrix required")
    if m.shape[0] == 0:
        return 1
    return int(_bareiss(m.tolist()))


def binary_anneal_stage(bits, cur, temperature, flips, uniforms, best_bits, best):
    """One fixed-temperature stage of bit-flip Metropolis on |det|; see the compiled twin."""
    k = bits.shape[0]
    n = k + 1
    work = bits.astype(np.int64).tolist() + [[1] * n]
    for f, u in zip(flips.tolist(), uniforms.tolist()):
        r, c = divmod(f, n)
        work[r][c] = 1 - work[r][c]
        new = abs(_bareiss(work))
        if new >= cur or u < math.exp((new - cur) / temperature):
            cur = new
            bits[r, c] = work[r][c]
            if cur > best:
                best = cur
                best_bits[:, :] = np.array(work[:k], dtype=np.int8)
        else:
            work[r][c] = 1 - work[r][c]
    return cur, best


def _lu_det(a):
    n = len(a)
    a = [list(r) for r in a]
    det = 1.0
    for r in range(n):
        piv = max(range(r, n), key=lambda i: (abs(a[i][r]), -i))
        if a[piv][r] == 0.0:
            return 0.0
        if piv != r:
            a[r], a[piv] = a[piv], a[r]
            det = -det
        det *= a[r][r]
        ar = a[r]
        for i in range(r + 1, n):
            f = a[i][r] / ar[r]
            ai = a[i]
            for j in range(r + 1, n):
                ai[j] -= f * ar[j]
    return det


def lu_det(p):
    """Determinant by LU with partial pivoting (same arithmetic as the engine)."""
    return _lu_det(np.asarray(p, dtype=float).tolist())


class AnnealEngine:
    """Incremental Metropolis engine over a block-structured angle vector.

    Mirrors the compiled class; see its docstring for the data layout.
    """

    def __init__(self, d, k, blocks, angle_block, eff_first, eff_nfree, eff_fixed, angles):
        blocks = np.asarray(blocks, dtype=np.int64)
        self.d, self.k, self.m = int(d), int(k), int(k) + 1
        self.blocks = [tuple(int(v) for v in row) for row in blocks]
        self.angle_block = [int(b) for b in angle_block]
        self.eff_first = [int(v) for v in eff_first]
        self.eff_nfree = [int(v) for v in eff_nfree]
        fixed = np.asarray(eff_fixed, dtype=bool)
        self.eff_fixed_idx = [np.flatnonzero(fixed[i]).tolist() for i in range(self.k)]
        self.eff_free_mask = [(~fixed[i]).astype(float) for i in range(self.k)]
        self.ang = [float(a) for a in angles]
        self.best_ang = list(self.ang)
        self.vec = [[0j] * self.d for _ in self.blocks]
        self.cols = [[0j] * self.d for _ in self.blocks]
        self.prep = [[0j] * self.d for _ in range(self.m)]
        self.p = [[1.0] * self.m for _ in range(self.m)]
        self.evaluations = 0
        self.rejected_degenerate = 0
        self.nonfinite = 0
        if not self._full_update():
            raise ArithmeticError("degenerate effect columns at the starting point")
        self.current = abs(_lu_det(self.p))
        self.best = self.current

    def _block_vector(self, b):
        _, _, s, off, nph = self.blocks[b]
        v = [0j] * self.d
        run = 1.0
        for q in range(s - 1):
            th = float(self.ang[off + q])
            v[q] = complex(run * math.cos(th))
            run *= math.sin(th)
        v[s - 1] = complex(run)
        for q in range(nph):
            th = float(self.ang[off + s - 1 + q])
            v[q + 1] = v[q + 1] * complex(math.cos(th), math.sin(th))
        self.vec[b] = v

    # scalar loops in the same order as the compiled kernel, so both
    # backends round identically
    def _effect_columns(self, i):
        first, nf = self.eff_first[i], self.eff_nfree[i]
        mask = self.eff_free_mask[i]
        d = self.d
        for c in range(nf):
            v = self.vec[first + c]
            w = [v[q] if mask[q] else 0j for q in range(d)]
            for _ in range(2):
                for c2 in range(c):
                    col = self.cols[first + c2]
                    ov = 0j
                    for q in range(d):
                        ov = ov + col[q].conjugate() * w[q]
                    w = [w[q] - ov * col[q] for q in range(d)]
            nrm = 0.0
            for q in range(d):
                nrm += w[q].real * w[q].real + w[q].imag * w[q].imag
            nrm = math.sqrt(nrm)
            if nrm < GS_THRESHOLD:
                return False
            self.cols[first + c] = [complex(z.real / nrm, z.imag / nrm) for z in w]
        return True

    def _prob(self, i, j):
        x = self.prep[j]
        tot = 0.0
        for q in self.eff_fixed_idx[i]:
            tot += x[q].real * x[q].real + x[q].imag * x[q].imag
        first = self.eff_first[i]
        for c in range(self.eff_nfree[i]):
            col = self.cols[first + c]
            ov = 0j
            for q in range(self.d):
                ov = ov + col[q].conjugate() * x[q]
            tot += ov.real * ov.real + ov.imag * ov.imag
        return tot

    def _full_update(self):
        for b, (kind, owner, *_rest) in enumerate(self.blocks):
            self._block_vector(b)
            if kind == 0:
                self.prep[owner] = self.vec[b]
        for i in range(self.k):
            if not self._effect_columns(i):
                return False
        for i in range(self.k):
            for j in range(self.m):
                self.p[i][j] = self._prob(i, j)
        return True

    def evaluate(self):
        """Recompute everything from the current angles; returns |det|."""
        if not self._full_update():
            raise ArithmeticError("degenerate effect columns")
        self.current = abs(_lu_det(self.p))
        return self.current

    def probability_matrix(self):
        return np.array(self.p)

    @property
    def angles(self):
        return np.array(self.ang)

    @property
    def best_angles(self):
        return np.array(self.best_ang)

    def run_stage(self, temperature, width, sweeps, proposals, uniforms):
        """One stage: ``sweeps`` passes over all angles at fixed temperature."""
        two_pi = 2.0 * math.pi
        stage_best = self.current
        props = np.asarray(proposals).tolist()
        unis = np.asarray(uniforms).tolist()
        s = 0
        n = len(self.ang)
        for _ in range(int(sweeps)):
            for a in range(n):
                b = self.angle_block[a]
                kind, owner = self.blocks[b][0], self.blocks[b][1]
                old = self.ang[a]
                new_ang = math.fmod(old + (2.0 * props[s] - 1.0) * width, two_pi)
                if new_ang < 0:
                    new_ang += two_pi
                self.ang[a] = new_ang
                saved_vec = self.vec[b]
                self._block_vector(b)
                ok = True
                if kind == 0:
                    saved_p = [self.p[i][owner] for i in range(self.k)]
                    self.prep[owner] = self.vec[b]
                    for i in range(self.k):
                        self.p[i][owner] = self._prob(i, owner)
                else:
                    first, nf = self.eff_first[owner], self.eff_nfree[owner]
                    saved_cols = self.cols[first:first + nf]
                    saved_p = list(self.p[owner])
                    ok = self._effect_columns(owner)
                    if ok:
                        for j in range(self.m):
                            self.p[owner][j] = self._prob(owner, j)
                self.evaluations += 1
                if ok:
                    new_val = abs(_lu_det(self.p))
                    if not math.isfinite(new_val):
                        self.nonfinite += 1
                        ok = False
                    else:
                        ok = new_val >= self.current or unis[s] < math.exp(
                            (new_val - self.current) / temperature)
                else:
                    self.rejected_degenerate += 1
                if ok:
                    self.current = new_val
                    stage_best = max(stage_best, new_val)
                    if new_val > self.best:
                        self.best = new_val
                        self.best_ang = list(self.ang)
                else:
                    self.ang[a] = old
                    self.vec[b] = saved_vec
                    if kind == 0:
                        self.prep[owner] = saved_vec
                        for i in range(self.k):
                            self.p[i][owner] = saved_p[i]
                    else:
                        self.cols[first:first + nf] = saved_cols
                        self.p[owner] = saved_p
                s += 1
        return stage_best
