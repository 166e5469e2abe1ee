# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled propagation kernel.

State lives in the frame rotating at the field frequency (field and qubit),
stored as a (2, n_levels) complex array with rows (excited, ground).  One step
is a triple-jump composition of Strang steps that alternate

  A: coupling + detuning, exact as 2x2 rotations inside each excitation
     manifold {|e,n>, |g,n+1>};
  B: the drive on the qubit alone, a 2x2 propagator shared by every n,
     built from fourth-order Magnus segments with closed-form SU(2)
     exponentials.

The three B intervals of a step are products of five short segments, and the
last two segments of step k are the first two of step k+1, so each driven step
integrates the drive only once over its length.
"""
from libc.math cimport sqrt, sin, cos, exp, fabs
from libc.stdlib cimport malloc, free

cdef double W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
cdef double EPS = W1 - 1.0
cdef double GAUSS = sqrt(3.0) / 6.0

cdef struct U2:
    double ar, ai, br, bi, cr, ci, dr, di


cdef struct Drive:
    const double* centers
    Py_ssize_t n_centers
    double inv2s2
    double reach
    double amp
    double omegap
    double omega


cdef inline U2 u2_mul(U2 x, U2 y) noexcept nogil:
    cdef U2 r
    r.ar = x.ar * y.ar - x.ai * y.ai + x.br * y.cr - x.bi * y.ci
    r.ai = x.ar * y.ai + x.ai * y.ar + x.br * y.ci + x.bi * y.cr
    r.br = x.ar * y.br - x.ai * y.bi + x.br * y.dr - x.bi * y.di
    r.bi = x.ar * y.bi + x.ai * y.br + x.br * y.di + x.bi * y.dr
    r.cr = x.cr * y.ar - x.ci * y.ai + x.dr * y.cr - x.di * y.ci
    r.ci = x.cr * y.ai + x.ci * y.ar + x.dr * y.ci + x.di * y.cr
    r.dr = x.cr * y.br - x.ci * y.bi + x.dr * y.dr - x.di * y.di
    r.di = x.cr * y.bi + x.ci * y.br + x.dr * y.di + x.di * y.dr
    return r


cdef inline U2 u2_dag(U2 x) noexcept nogil:
    cdef U2 r
    r.ar = x.ar
    r.ai = -x.ai
    r.br = x.cr
    r.bi = -x.ci
    r.cr = x.br
    r.ci = -x.bi
    r.dr = x.dr
    r.di = -x.di
    return r


cdef inline void drive_at(const Drive* d, Py_ssize_t lo, Py_ssize_t hi, double t,
                          double* fr, double* fi) noexcept nogil:
    # f(t) = amp * env(t) * cos(omegap t) * exp(i omega t); per-node cutoff keeps
    # the value independent of which step asked for it.
    cdef double env = 0.0
    cdef double x, a
    cdef Py_ssize_t i
    for i in range(lo, hi):
        x = t - d.centers[i]
        if fabs(x) <= d.reach:
            env += exp(-x * x * d.inv2s2)
    if env == 0.0:
        fr[0] = 0.0
        fi[0] = 0.0
        return
    a = d.amp * env * cos(d.omegap * t)
    fr[0] = a * cos(d.omega * t)
    fi[0] = a * sin(d.omega * t)


cdef inline U2 segment(const Drive* d, Py_ssize_t lo, Py_ssize_t hi,
                       double ta, double tb) noexcept nogil:
    cdef double L = tb - ta
    cdef double f1r, f1i, f2r, f2i
    drive_at(d, lo, hi, ta + (0.5 - GAUSS) * L, &f1r, &f1i)
    drive_at(d, lo, hi, ta + (0.5 + GAUSS) * L, &f2r, &f2i)
    # H = v.s with v = (Re f, -Im f, 0); Magnus-4 exponent is -i w.s with
    # w = L (v1 + v2) / 2 - (sqrt(3) / 6) L^2 (v1 x v2)
    cdef double wx = 0.5 * L * (f1r + f2r)
    cdef double wy = -0.5 * L * (f1i + f2i)
    cdef double wz = -GAUSS * L * L * (f1r * (-f2i) - (-f1i) * f2r)
    cdef double r = sqrt(wx * wx + wy * wy + wz * wz)
    cdef U2 u
    cdef double c, s
    if r == 0.0:
        u.ar = 1.0; u.ai = 0.0; u.br = 0.0; u.bi = 0.0
        u.cr = 0.0; u.ci = 0.0; u.dr = 1.0; u.di = 0.0
        return u
    c = cos(r)
    s = sin(r) / r
    u.ar = c
    u.ai = -s * wz
    u.br = -s * wy
    u.bi = -s * wx
    u.cr = s * wy
    u.ci = -s * wx
    u.dr = c
    u.di = s * wz
    return u


cdef inline void apply_a(double* er, double* ei, double* gr, double* gi, Py_ssize_t nl,
                         const double* c, const double* dd, const double* s,
                         double p0r, double p0i, double ptr, double pti) noexcept nogil:
    cdef Py_ssize_t n
    cdef double xr, xi, yr, yi
    # |g,0> and |e,n_max> have no partner inside the truncation
    xr = gr[0]; xi = gi[0]
    gr[0] = p0r * xr - p0i * xi
    gi[0] = p0r * xi + p0i * xr
    for n in range(nl - 1):
        xr = er[n]; xi = ei[n]; yr = gr[n + 1]; yi = gi[n + 1]
        er[n] = c[n] * xr + dd[n] * xi + s[n] * yi
        ei[n] = c[n] * xi - dd[n] * xr - s[n] * yr
        gr[n + 1] = s[n] * xi + c[n] * yr - dd[n] * yi
        gi[n + 1] = -s[n] * xr + c[n] * yi + dd[n] * yr
    xr = er[nl - 1]; xi = ei[nl - 1]
    er[nl - 1] = ptr * xr - pti * xi
    ei[nl - 1] = ptr * xi + pti * xr


cdef inline void apply_b(double* er, double* ei, double* gr, double* gi, Py_ssize_t nl,
                         U2 u) noexcept nogil:
    cdef Py_ssize_t n
    cdef double xr, xi, yr, yi
    for n in range(nl):
        xr = er[n]; xi = ei[n]; yr = gr[n]; yi = gi[n]
        er[n] = u.ar * xr - u.ai * xi + u.br * yr - u.bi * yi
        ei[n] = u.ar * xi + u.ai * xr + u.br * yi + u.bi * yr
        gr[n] = u.cr * xr - u.ci * xi + u.dr * yr - u.di * yi
        gi[n] = u.cr * xi + u.ci * xr + u.dr * yi + u.di * yr


cdef inline double observe(const double* er, const double* ei, const double* gr, const double* gi,
                           Py_ssize_t nl, Py_ssize_t tail_from, double t, double omega,
                           const double* sq1, const double* sq2,
                           double* norm_out, double* tail_out) noexcept nogil:
    cdef double norm = 0.0, nb = 0.0, tail = 0.0
    cdef double a_r = 0.0, a_i = 0.0, a2_r = 0.0, a2_i = 0.0
    cdef double p, q1, q2
    cdef Py_ssize_t n
    for n in range(nl):
        p = er[n] * er[n] + ei[n] * ei[n] + gr[n] * gr[n] + gi[n] * gi[n]
        norm += p
        nb += n * p
        if n >= tail_from:
            tail += p
    for n in range(1, nl):
        q1 = sq1[n]
        a_r += q1 * (er[n - 1] * er[n] + ei[n - 1] * ei[n] + gr[n - 1] * gr[n] + gi[n - 1] * gi[n])
        a_i += q1 * (er[n - 1] * ei[n] - ei[n - 1] * er[n] + gr[n - 1] * gi[n] - gi[n - 1] * gr[n])
    for n in range(2, nl):
        q2 = sq2[n]
        a2_r += q2 * (er[n - 2] * er[n] + ei[n - 2] * ei[n] + gr[n - 2] * gr[n] + gi[n - 2] * gi[n])
        a2_i += q2 * (er[n - 2] * ei[n] - ei[n - 2] * er[n] + gr[n - 2] * gi[n] - gi[n - 2] * gr[n])
    cdef double ph = omega * t
    cdef double re_a = cos(ph) * a_r + sin(ph) * a_i
    cdef double re_a2 = cos(2.0 * ph) * a2_r + sin(2.0 * ph) * a2_i
    norm_out[0] = norm
    tail_out[0] = tail
    return 0.25 * (2.0 * re_a2 + 2.0 * nb + norm) - re_a * re_a


cdef void fill_a_table(double tau, double delta, double g, Py_ssize_t nl,
                       double* c, double* dd, double* s, double* ph) noexcept nogil:
    cdef Py_ssize_t n
    cdef double cpl, om, sn
    for n in range(nl - 1):
        cpl = g * sqrt(<double>(n + 1))
        om = sqrt(0.25 * delta * delta + cpl * cpl)
        if om == 0.0:
            c[n] = 1.0
            sn = tau
        else:
            c[n] = cos(om * tau)
            sn = sin(om * tau) / om
        dd[n] = 0.5 * delta * sn
        s[n] = cpl * sn
    ph[0] = cos(0.5 * delta * tau)
    ph[1] = sin(0.5 * delta * tau)
    ph[2] = cos(0.5 * delta * tau)
    ph[3] = -sin(0.5 * delta * tau)


def propagate(double complex[:, ::1] psi, Py_ssize_t k0, Py_ssize_t k1, double t0, double dt,
              Py_ssize_t stride, double omega, double delta, double g,
              const double[::1] centers, double sigma, double amp, double omegap, double cutoff,
              double[::1] var_out, double complex[:, :, ::1] ckpt_out, Py_ssize_t ckpt_every):
    """Advance ``psi`` in place from global step k0 to k1 (times t0 + k dt).

    Writes the lab-frame quadrature variance to ``var_out[k // stride]`` for
    every k in [k0, k1] divisible by ``stride`` and, when ``ckpt_every > 0``,
    the state to ``ckpt_out[k // ckpt_every]``.  ``centers`` must be sorted.
    Returns (max tail weight, max |norm - 1|, number of driven steps).
    """
    cdef Py_ssize_t nl = psi.shape[1]
    cdef Py_ssize_t tail_from = nl - max(1, <Py_ssize_t>((nl + 9) // 10))
    cdef Py_ssize_t n, k, lo = 0, hi = 0
    cdef double* buf = <double*> malloc((15 * nl + 12) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* er = buf
    cdef double* ei = buf + nl
    cdef double* gr = buf + 2 * nl
    cdef double* gi = buf + 3 * nl
    cdef double* tab = buf + 4 * nl
    cdef double* ph = buf + 13 * nl
    cdef double* sq1 = buf + 13 * nl + 12
    cdef double* sq2 = buf + 14 * nl + 12
    # tables: full step, w1 dt / 2, -eps dt / 2
    cdef double* c_full = tab
    cdef double* d_full = tab + nl
    cdef double* s_full = tab + 2 * nl
    cdef double* c_out = tab + 3 * nl
    cdef double* d_out = tab + 4 * nl
    cdef double* s_out = tab + 5 * nl
    cdef double* c_in = tab + 6 * nl
    cdef double* d_in = tab + 7 * nl
    cdef double* s_in = tab + 8 * nl
    cdef Drive drv
    cdef double reach = cutoff * sigma
    cdef double t, tk, tk1, window_lo, window_hi, v, nrm, tl
    cdef double max_tail = 0.0, max_dev = 0.0
    cdef Py_ssize_t driven = 0
    cdef bint have_prev = False
    cdef U2 s1, s2, s3, s4, s5, pmid, b1, b2, b3
    cdef bint record_ckpt = ckpt_every > 0

    drv.centers = &centers[0] if centers.shape[0] > 0 else NULL
    drv.n_centers = centers.shape[0]
    drv.inv2s2 = 0.5 / (sigma * sigma)
    drv.reach = reach
    drv.amp = amp
    drv.omegap = omegap
    drv.omega = omega

    try:
        with nogil:
            for n in range(nl):
                er[n] = psi[0, n].real
                ei[n] = psi[0, n].imag
                gr[n] = psi[1, n].real
                gi[n] = psi[1, n].imag
            for n in range(nl):
                sq1[n] = sqrt(<double>n)
                sq2[n] = sqrt(<double>(n * (n - 1))) if n > 0 else 0.0
            fill_a_table(dt, delta, g, nl, c_full, d_full, s_full, ph)
            fill_a_table(0.5 * W1 * dt, delta, g, nl, c_out, d_out, s_out, ph + 4)
            fill_a_table(-0.5 * EPS * dt, delta, g, nl, c_in, d_in, s_in, ph + 8)

            k = k0
            while True:
                if k % stride == 0:
                    t = t0 + k * dt
                    v = observe(er, ei, gr, gi, nl, tail_from, t, omega, sq1, sq2, &nrm, &tl)
                    var_out[k // stride] = v
                    if tl > max_tail:
                        max_tail = tl
                    if fabs(nrm - 1.0) > max_dev:
                        max_dev = fabs(nrm - 1.0)
                if record_ckpt and k % ckpt_every == 0:
                    for n in range(nl):
                        ckpt_out[k // ckpt_every, 0, n] = er[n] + 1j * ei[n]
                        ckpt_out[k // ckpt_every, 1, n] = gr[n] + 1j * gi[n]
                if k >= k1:
                    break

                tk = t0 + k * dt
                tk1 = t0 + (k + 1) * dt
                window_lo = t0 + (k - EPS) * dt - reach
                window_hi = t0 + (k + 1 + EPS) * dt + reach
                while lo < drv.n_centers and drv.centers[lo] < window_lo:
                    lo += 1
                if hi < lo:
                    hi = lo
                while hi < drv.n_centers and drv.centers[hi] <= window_hi:
                    hi += 1

                if lo == hi:
                    apply_a(er, ei, gr, gi, nl, c_full, d_full, s_full, ph[0], ph[1], ph[2], ph[3])
                    have_prev = False
                else:
                    driven += 1
                    if not have_prev:
                        s1 = segment(&drv, lo, hi, t0 + (k - EPS) * dt, tk)
                        s2 = segment(&drv, lo, hi, tk, t0 + (k + EPS) * dt)
                    else:
                        s1 = s4
                        s2 = s5
                    s3 = segment(&drv, lo, hi, t0 + (k + EPS) * dt, t0 + (k + 1 - EPS) * dt)
                    s4 = segment(&drv, lo, hi, t0 + (k + 1 - EPS) * dt, tk1)
                    s5 = segment(&drv, lo, hi, tk1, t0 + (k + 1 + EPS) * dt)
                    have_prev = True
                    pmid = u2_mul(s4, u2_mul(s3, s2))
                    b1 = u2_mul(s5, pmid)
                    b3 = u2_mul(pmid, s1)
                    b2 = u2_dag(u2_mul(b1, s1))
                    apply_a(er, ei, gr, gi, nl, c_out, d_out, s_out, ph[4], ph[5], ph[6], ph[7])
                    apply_b(er, ei, gr, gi, nl, b1)
                    apply_a(er, ei, gr, gi, nl, c_in, d_in, s_in, ph[8], ph[9], ph[10], ph[11])
                    apply_b(er, ei, gr, gi, nl, b2)
                    apply_a(er, ei, gr, gi, nl, c_in, d_in, s_in, ph[8], ph[9], ph[10], ph[11])
                    apply_b(er, ei, gr, gi, nl, b3)
                    apply_a(er, ei, gr, gi, nl, c_out, d_out, s_out, ph[4], ph[5], ph[6], ph[7])
                k += 1

            for n in range(nl):
                psi[0, n] = er[n] + 1j * ei[n]
                psi[1, n] = gr[n] + 1j * gi[n]
    finally:
        free(buf)
    return max_tail, max_dev, driven
