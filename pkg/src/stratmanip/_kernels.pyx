# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_kernels_py`` function for function."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, ceil, sqrt, fabs, INFINITY, M_PI
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef int FREE = 0
cdef int BLOCKED = 1
cdef int MIXED = 2
cdef int MODE_CONTACT = 0
cdef int MODE_FREE = 1
cdef double TWO_PI = 2.0 * M_PI
cdef double PAD = 1e-12


cdef inline void cos_range(double a, double b, double* lo, double* hi) nogil:
    cdef double ca = cos(a), cb = cos(b)
    cdef double k
    lo[0] = ca if ca < cb else cb
    hi[0] = cb if ca < cb else ca
    k = ceil(a / TWO_PI)
    if k * TWO_PI <= b:
        hi[0] = 1.0
    k = ceil((a - M_PI) / TWO_PI)
    if M_PI + k * TWO_PI <= b:
        lo[0] = -1.0
    lo[0] -= PAD
    hi[0] += PAD


cdef inline double min_abs(double lo, double hi) nogil:
    if lo <= 0 and hi >= 0:
        return 0.0
    return fabs(lo) if fabs(lo) < fabs(hi) else fabs(hi)


cdef inline double max_abs(double lo, double hi) nogil:
    return fabs(lo) if fabs(lo) > fabs(hi) else fabs(hi)


cdef inline double seg_dist(double px, double py, double ax, double ay, double bx, double by) nogil:
    cdef double ex = bx - ax, ey = by - ay
    cdef double apx = px - ax, apy = py - ay
    cdef double t = (apx * ex + apy * ey) / (ex * ex + ey * ey)
    if t < 0:
        t = 0
    elif t > 1:
        t = 1
    apx -= t * ex
    apy -= t * ey
    return sqrt(apx * apx + apy * apy)


cdef double signed_dist(double px, double py, const double[:, ::1] v, long s, long e) nogil:
    cdef bint inside = True
    cdef double dmin = INFINITY, d, cross
    cdef long i, j
    for i in range(s, e):
        j = i + 1 if i + 1 < e else s
        cross = (v[j, 0] - v[i, 0]) * (py - v[i, 1]) - (v[j, 1] - v[i, 1]) * (px - v[i, 0])
        if cross < 0:
            inside = False
        d = seg_dist(px, py, v[i, 0], v[i, 1], v[j, 0], v[j, 1])
        if d < dmin:
            dmin = d
    return -dmin if inside else dmin


cdef void box_poly_gap(double xl, double xh, double yl, double yh, double r,
                       const double[:, ::1] v, long s, long e,
                       double* low, double* high) nogil:
    cdef double cx[4]
    cdef double cy[4]
    cdef double up = -INFINITY, d, nx, ny, off, pm, dx, dy, dist
    cdef double pxmin = INFINITY, pxmax = -INFINITY, pymin = INFINITY, pymax = -INFINITY
    cdef bint separated = False
    cdef long i, j, c
    cx[0] = xl; cx[1] = xh; cx[2] = xh; cx[3] = xl
    cy[0] = yl; cy[1] = yl; cy[2] = yh; cy[3] = yh
    for c in range(4):
        d = signed_dist(cx[c], cy[c], v, s, e)
        if d > up:
            up = d
    high[0] = up - r
    for i in range(s, e):
        j = i + 1 if i + 1 < e else s
        if v[i, 0] < pxmin: pxmin = v[i, 0]
        if v[i, 0] > pxmax: pxmax = v[i, 0]
        if v[i, 1] < pymin: pymin = v[i, 1]
        if v[i, 1] > pymax: pymax = v[i, 1]
        nx = v[j, 1] - v[i, 1]
        ny = -(v[j, 0] - v[i, 0])
        off = nx * v[i, 0] + ny * v[i, 1]
        pm = (xl * nx if xl * nx < xh * nx else xh * nx) + (yl * ny if yl * ny < yh * ny else yh * ny)
        if pm > off:
            separated = True
    if pxmax < xl or pxmin > xh or pymax < yl or pymin > yh:
        separated = True
    if not separated:
        low[0] = -INFINITY
        return
    dist = INFINITY
    for i in range(s, e):
        dx = xl - v[i, 0]
        if v[i, 0] - xh > dx: dx = v[i, 0] - xh
        if dx < 0: dx = 0
        dy = yl - v[i, 1]
        if v[i, 1] - yh > dy: dy = v[i, 1] - yh
        if dy < 0: dy = 0
        d = sqrt(dx * dx + dy * dy)
        if d < dist: dist = d
        j = i + 1 if i + 1 < e else s
        for c in range(4):
            d = seg_dist(cx[c], cy[c], v[i, 0], v[i, 1], v[j, 0], v[j, 1])
            if d < dist: dist = d
    low[0] = dist - r


def classify_boxes(lo, hi, ws, radii, mode, dim, fixed, rho, verts, start, double tol):
    cdef const double[:, ::1] L = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[:, ::1] H = np.ascontiguousarray(hi, dtype=np.float64)
    cdef const double[::1] W = np.ascontiguousarray(ws, dtype=np.float64)
    cdef const double[::1] RAD = np.ascontiguousarray(radii, dtype=np.float64)
    cdef const long[::1] MODE = np.ascontiguousarray(mode, dtype=np.int64)
    cdef const long[::1] DIM = np.ascontiguousarray(dim, dtype=np.int64)
    cdef const double[:, ::1] FIX = np.ascontiguousarray(np.reshape(fixed, (-1, 4)), dtype=np.float64)
    cdef const double[::1] RHO = np.ascontiguousarray(rho, dtype=np.float64)
    cdef const double[:, ::1] V = np.ascontiguousarray(np.reshape(verts, (-1, 2)), dtype=np.float64)
    cdef const long[::1] ST = np.ascontiguousarray(start, dtype=np.int64)
    cdef long n_box = L.shape[0]
    cdef long n = MODE.shape[0]
    cdef long nb = n + 1
    cdef long n_poly = ST.shape[0] - 1
    out_arr = np.empty(n_box, dtype=np.int8)
    cdef signed char[::1] out = out_arr
    cdef double* bxl = <double*> malloc(nb * sizeof(double))
    cdef double* bxh = <double*> malloc(nb * sizeof(double))
    cdef double* byl = <double*> malloc(nb * sizeof(double))
    cdef double* byh = <double*> malloc(nb * sizeof(double))
    cdef double* oxl = <double*> malloc(nb * sizeof(double))
    cdef double* oxh = <double*> malloc(nb * sizeof(double))
    cdef double* oyl = <double*> malloc(nb * sizeof(double))
    cdef double* oyh = <double*> malloc(nb * sizeof(double))
    cdef long q, k, a, b, i, j, p
    cdef bint is_free, is_blocked, ci, cj
    cdef double clo, chi, slo, shi, r, low, high, dxl, dxh, dyl, dyh, mn, mx
    try:
        with nogil:
            for q in range(n_box):
                is_free = True
                is_blocked = False
                bxl[0] = L[q, 0]; bxh[0] = H[q, 0]
                byl[0] = L[q, 1]; byh[0] = H[q, 1]
                for k in range(n):
                    b = k + 1
                    a = DIM[k]
                    if MODE[k] == MODE_CONTACT:
                        cos_range(L[q, a], H[q, a], &clo, &chi)
                        cos_range(L[q, a] - 0.5 * M_PI, H[q, a] - 0.5 * M_PI, &slo, &shi)
                        oxl[b] = RHO[k] * clo; oxh[b] = RHO[k] * chi
                        oyl[b] = RHO[k] * slo; oyh[b] = RHO[k] * shi
                        bxl[b] = bxl[0] + oxl[b]; bxh[b] = bxh[0] + oxh[b]
                        byl[b] = byl[0] + oyl[b]; byh[b] = byh[0] + oyh[b]
                    elif MODE[k] == MODE_FREE:
                        bxl[b] = L[q, a]; bxh[b] = H[q, a]
                        byl[b] = L[q, a + 1]; byh[b] = H[q, a + 1]
                    else:
                        bxl[b] = FIX[k, 0]; bxh[b] = FIX[k, 1]
                        byl[b] = FIX[k, 2]; byh[b] = FIX[k, 3]
                # workspace containment
                for b in range(nb):
                    r = RAD[b]
                    if bxl[b] - r - W[0] < -tol or W[2] - bxh[b] - r < -tol or byl[b] - r - W[1] < -tol or W[3] - byh[b] - r < -tol:
                        is_free = False
                    if bxh[b] - r - W[0] < -tol or W[2] - bxl[b] - r < -tol or byh[b] - r - W[1] < -tol or W[3] - byl[b] - r < -tol:
                        is_blocked = True
                if is_blocked:
                    out[q] = BLOCKED
                    continue
                # obstacles
                for p in range(n_poly):
                    for b in range(nb):
                        box_poly_gap(bxl[b], bxh[b], byl[b], byh[b], RAD[b], V, ST[p], ST[p + 1], &low, &high)
                        if b == 0:
                            if not (low > 0): is_free = False
                            if high <= 0: is_blocked = True
                        else:
                            if not (low >= -tol): is_free = False
                            if high < -tol: is_blocked = True
                    if is_blocked:
                        break
                if is_blocked:
                    out[q] = BLOCKED
                    continue
                # pairs
                for i in range(nb):
                    for j in range(i + 1, nb):
                        ci = i > 0 and MODE[i - 1] == MODE_CONTACT
                        cj = MODE[j - 1] == MODE_CONTACT
                        if i == 0 and cj:
                            continue
                        if ci and cj:
                            dxl = oxl[i] - oxh[j]; dxh = oxh[i] - oxl[j]
                            dyl = oyl[i] - oyh[j]; dyh = oyh[i] - oyl[j]
                        else:
                            dxl = bxl[i] - bxh[j]; dxh = bxh[i] - bxl[j]
                            dyl = byl[i] - byh[j]; dyh = byh[i] - byl[j]
                        mn = min_abs(dxl, dxh)
                        mx = min_abs(dyl, dyh)
                        low = sqrt(mn * mn + mx * mx) - RAD[i] - RAD[j]
                        mn = max_abs(dxl, dxh)
                        mx = max_abs(dyl, dyh)
                        high = sqrt(mn * mn + mx * mx) - RAD[i] - RAD[j]
                        if not (low >= -tol): is_free = False
                        if high < -tol: is_blocked = True
                if is_blocked:
                    out[q] = BLOCKED
                elif is_free:
                    out[q] = FREE
                else:
                    out[q] = MIXED
    finally:
        free(bxl); free(bxh); free(byl); free(byh)
        free(oxl); free(oxh); free(oyl); free(oyh)
    return out_arr


cdef long _query(const int[::1] split, const long[::1] mid, const long[::1] child,
                 const long[::1] leaf, const long* qlo, const long* qhi,
                 long* stack, long* out) nogil:
    cdef long top = 0, n_out = 0, k, s
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        k = stack[top]
        s = split[k]
        if s < 0:
            out[n_out] = leaf[k]
            n_out += 1
            continue
        if qhi[s] > mid[k]:
            stack[top] = child[k] + 1
            top += 1
        if qlo[s] < mid[k]:
            stack[top] = child[k]
            top += 1
    return n_out


def query_leaves(node_split, node_mid, node_child, node_leaf, qlo, qhi):
    cdef const int[::1] S = np.ascontiguousarray(node_split, dtype=np.int32)
    cdef const long[::1] M = np.ascontiguousarray(node_mid, dtype=np.int64)
    cdef const long[::1] C = np.ascontiguousarray(node_child, dtype=np.int64)
    cdef const long[::1] LF = np.ascontiguousarray(node_leaf, dtype=np.int64)
    cdef long[::1] lo = np.ascontiguousarray(qlo, dtype=np.int64)
    cdef long[::1] hi = np.ascontiguousarray(qhi, dtype=np.int64)
    cdef long n_nodes = S.shape[0]
    stack = np.empty(n_nodes + 1, dtype=np.int64)
    out = np.empty(n_nodes + 1, dtype=np.int64)
    cdef long[::1] st = stack
    cdef long[::1] o = out
    cdef long n_out = _query(S, M, C, LF, &lo[0], &hi[0], &st[0], &o[0])
    return [int(x) for x in out[:n_out]]


def facet_pairs(node_split, node_mid, node_child, node_leaf, ilo, ihi, full, wrap):
    cdef const int[::1] S = np.ascontiguousarray(node_split, dtype=np.int32)
    cdef const long[::1] M = np.ascontiguousarray(node_mid, dtype=np.int64)
    cdef const long[::1] C = np.ascontiguousarray(node_child, dtype=np.int64)
    cdef const long[::1] LF = np.ascontiguousarray(node_leaf, dtype=np.int64)
    cdef const long[:, ::1] LO = np.ascontiguousarray(ilo, dtype=np.int64)
    cdef const long[:, ::1] HI = np.ascontiguousarray(ihi, dtype=np.int64)
    cdef const long[::1] FULL = np.ascontiguousarray(full, dtype=np.int64)
    cdef const signed char[::1] WR = np.ascontiguousarray(wrap, dtype=np.int8)
    cdef long n_leaf = LO.shape[0]
    cdef long d = LO.shape[1]
    cdef long n_nodes = S.shape[0]
    stack_arr = np.empty(n_nodes + 1, dtype=np.int64)
    hits_arr = np.empty(n_nodes + 1, dtype=np.int64)
    qlo_arr = np.empty(d, dtype=np.int64)
    qhi_arr = np.empty(d, dtype=np.int64)
    cdef long[::1] st = stack_arr
    cdef long[::1] hits = hits_arr
    cdef long[::1] qlo = qlo_arr
    cdef long[::1] qhi = qhi_arr
    cdef long cap = 16 * n_leaf + 16
    pa = np.empty(cap, dtype=np.int64)
    pb = np.empty(cap, dtype=np.int64)
    cdef long[::1] A = pa
    cdef long[::1] B = pb
    cdef long n_pairs = 0, a, k, j, h, n_hit, b
    for a in range(n_leaf):
        for k in range(d):
            for j in range(d):
                qlo[j] = LO[a, j]
                qhi[j] = HI[a, j]
            if HI[a, k] < FULL[k]:
                qlo[k] = HI[a, k]
            elif WR[k] and not (LO[a, k] == 0 and HI[a, k] == FULL[k]):
                qlo[k] = 0
            else:
                continue
            qhi[k] = qlo[k] + 1
            n_hit = _query(S, M, C, LF, &qlo[0], &qhi[0], &st[0], &hits[0])
            if n_pairs + n_hit > cap:
                cap = 2 * (n_pairs + n_hit)
                pa = np.resize(pa, cap)
                pb = np.resize(pb, cap)
                A = pa
                B = pb
            for h in range(n_hit):
                b = hits[h]
                if b == a:
                    continue
                if a < b:
                    A[n_pairs] = a; B[n_pairs] = b
                else:
                    A[n_pairs] = b; B[n_pairs] = a
                n_pairs += 1
    pairs = np.stack([pa[:n_pairs], pb[:n_pairs]], axis=1)
    if n_pairs == 0:
        return np.zeros((0, 2), dtype=np.int64)
    return np.unique(pairs, axis=0)


def locate_points(node_split, node_mid, node_child, node_leaf, pts):
    cdef const int[::1] S = np.ascontiguousarray(node_split, dtype=np.int32)
    cdef const long[::1] M = np.ascontiguousarray(node_mid, dtype=np.int64)
    cdef const long[::1] C = np.ascontiguousarray(node_child, dtype=np.int64)
    cdef const long[::1] LF = np.ascontiguousarray(node_leaf, dtype=np.int64)
    cdef const double[:, ::1] P = np.ascontiguousarray(pts, dtype=np.float64)
    cdef long n_pts = P.shape[0]
    cdef long n_nodes = S.shape[0]
    stack_arr = np.empty(n_nodes + 1, dtype=np.int64)
    cdef long[::1] st = stack_arr
    out_arr = np.empty(n_pts, dtype=np.int64)
    cdef long[::1] out = out_arr
    cdef long i, k, s, top, best
    for i in range(n_pts):
        best = -1
        st[0] = 0
        top = 1
        while top > 0:
            top -= 1
            k = st[top]
            s = S[k]
            if s < 0:
                if best < 0 or LF[k] < best:
                    best = LF[k]
                continue
            if P[i, s] <= M[k]:
                st[top] = C[k]
                top += 1
            if P[i, s] >= M[k]:
                st[top] = C[k] + 1
                top += 1
        out[i] = best
    return out_arr
