"""Pure numpy implementation of the propagation kernel.

Same algorithm and call signature as the compiled ``_kernel.propagate``; used
when the extension is not built or when forced through ``kernel.set_backend``.
Results agree with the compiled path to rounding.
"""
from __future__ import annotations

import math

import numpy as np

W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
EPS = W1 - 1.0
GAUSS = math.sqrt(3.0) / 6.0

_IDENTITY = np.eye(2, dtype=np.complex128)


def _drive_at(centers, lo, hi, t, inv2s2, reach, amp, omegap, omega):
    x = t - centers[lo:hi]
    x = x[np.abs(x) <= reach]
    if x.size == 0:
        return 0j
    env = float(np.exp(-x * x * inv2s2).sum())
    if env == 0.0:
        return 0j
    a = amp * env * math.cos(omegap * t)
    return complex(a * math.cos(omega * t), a * math.sin(omega * t))


def _segment(drv, lo, hi, ta, tb):
    L = tb - ta
    f1 = _drive_at(drv["centers"], lo, hi, ta + (0.5 - GAUSS) * L, *drv["args"])
    f2 = _drive_at(drv["centers"], lo, hi, ta + (0.5 + GAUSS) * L, *drv["args"])
    wx = 0.5 * L * (f1.real + f2.real)
    wy = -0.5 * L * (f1.imag + f2.imag)
    wz = -GAUSS * L * L * (f1.real * (-f2.imag) - (-f1.imag) * f2.real)
    r = math.sqrt(wx * wx + wy * wy + wz * wz)
    if r == 0.0:
        return _IDENTITY.copy()
    c = math.cos(r)
    s = math.sin(r) / r
    return np.array([[complex(c, -s * wz), complex(-s * wy, -s * wx)],
                     [complex(s * wy, -s * wx), complex(c, s * wz)]])


def _a_table(tau, delta, g, nl):
    cpl = g * np.sqrt(np.arange(1, nl, dtype=float))
    om = np.sqrt(0.25 * delta * delta + cpl * cpl)
    with np.errstate(invalid="ignore", divide="ignore"):
        sn = np.where(om == 0.0, tau, np.sin(om * tau) / np.where(om == 0.0, 1.0, om))
    c = np.where(om == 0.0, 1.0, np.cos(om * tau))
    # 2x2 block on (|e,n>, |g,n+1>): [[c - i d, -i s], [-i s, c + i d]]
    u_ee = c - 1j * (0.5 * delta * sn)
    u_gg = c + 1j * (0.5 * delta * sn)
    u_x = -1j * (cpl * sn)
    half = 0.5 * delta * tau
    return u_ee, u_gg, u_x, complex(math.cos(half), math.sin(half)), complex(math.cos(half), -math.sin(half))


def _apply_a(e, g, tab):
    u_ee, u_gg, u_x, p0, ptop = tab
    x = e[:-1].copy()
    y = g[1:].copy()
    g0 = g[0]
    etop = e[-1]
    e[:-1] = u_ee * x + u_x * y
    g[1:] = u_x * x + u_gg * y
    g[0] = p0 * g0
    e[-1] = ptop * etop


def _apply_b(e, g, u):
    x = e.copy()
    e[:] = u[0, 0] * x + u[0, 1] * g
    g[:] = u[1, 0] * x + u[1, 1] * g


def observe(e, g, t, omega, tail_from):
    """Lab-frame Var(X) from rotating-frame amplitudes, plus norm and tail."""
    p = e.real ** 2 + e.imag ** 2 + g.real ** 2 + g.imag ** 2
    n = np.arange(e.size)
    norm = float(p.sum())
    nb = float((n * p).sum())
    tail = float(p[tail_from:].sum())
    q1 = np.sqrt(n[1:].astype(float))
    a = complex((q1 * (np.conj(e[:-1]) * e[1:] + np.conj(g[:-1]) * g[1:])).sum())
    q2 = np.sqrt((n[2:] * (n[2:] - 1)).astype(float))
    a2 = complex((q2 * (np.conj(e[:-2]) * e[2:] + np.conj(g[:-2]) * g[2:])).sum())
    ph = omega * t
    re_a = math.cos(ph) * a.real + math.sin(ph) * a.imag
    re_a2 = math.cos(2 * ph) * a2.real + math.sin(2 * ph) * a2.imag
    return 0.25 * (2.0 * re_a2 + 2.0 * nb + norm) - re_a * re_a, norm, tail


def propagate(psi, k0, k1, t0, dt, stride, omega, delta, g, centers, sigma, amp, omegap, cutoff,
              var_out, ckpt_out, ckpt_every):
    nl = psi.shape[1]
    tail_from = nl - max(1, (nl + 9) // 10)
    centers = np.asarray(centers, dtype=float)
    reach = cutoff * sigma
    drv = {"centers": centers, "args": (0.5 / (sigma * sigma), reach, amp, omegap, omega)}
    e = psi[0].copy()
    gg = psi[1].copy()
    tab_full = _a_table(dt, delta, g, nl)
    tab_out = _a_table(0.5 * W1 * dt, delta, g, nl)
    tab_in = _a_table(-0.5 * EPS * dt, delta, g, nl)
    max_tail = 0.0
    max_dev = 0.0
    driven = 0
    lo = hi = 0
    nc = centers.size
    have_prev = False
    s4 = s5 = None
    k = k0
    while True:
        if k % stride == 0:
            v, nrm, tl = observe(e, gg, t0 + k * dt, omega, tail_from)
            var_out[k // stride] = v
            max_tail = max(max_tail, tl)
            max_dev = max(max_dev, abs(nrm - 1.0))
        if ckpt_every > 0 and k % ckpt_every == 0:
            ckpt_out[k // ckpt_every, 0] = e
            ckpt_out[k // ckpt_every, 1] = gg
        if k >= k1:
            break
        tk = t0 + k * dt
        tk1 = t0 + (k + 1) * dt
        window_lo = t0 + (k - EPS) * dt - reach
        window_hi = t0 + (k + 1 + EPS) * dt + reach
        while lo < nc and centers[lo] < window_lo:
            lo += 1
        hi = max(hi, lo)
        while hi < nc and centers[hi] <= window_hi:
            hi += 1
        if lo == hi:
            _apply_a(e, gg, tab_full)
            have_prev = False
        else:
            driven += 1
            if have_prev:
                s1, s2 = s4, s5
            else:
                s1 = _segment(drv, lo, hi, t0 + (k - EPS) * dt, tk)
                s2 = _segment(drv, lo, hi, tk, t0 + (k + EPS) * dt)
            s3 = _segment(drv, lo, hi, t0 + (k + EPS) * dt, t0 + (k + 1 - EPS) * dt)
            s4 = _segment(drv, lo, hi, t0 + (k + 1 - EPS) * dt, tk1)
            s5 = _segment(drv, lo, hi, tk1, t0 + (k + 1 + EPS) * dt)
            have_prev = True
            pmid = s4 @ s3 @ s2
            b1 = s5 @ pmid
            b3 = pmid @ s1
            b2 = (b1 @ s1).conj().T
            _apply_a(e, gg, tab_out)
            _apply_b(e, gg, b1)
            _apply_a(e, gg, tab_in)
            _apply_b(e, gg, b2)
            _apply_a(e, gg, tab_in)
            _apply_b(e, gg, b3)
            _apply_a(e, gg, tab_out)
        k += 1
    psi[0] = e
    psi[1] = gg
    return max_tail, max_dev, driven
