"""Compiled time-stepping kernel.

Rings are stored as ring buffers: physical cell ``p`` at step counter
``st`` lives in row ``(p - st) % N``, so propagation by one cell is a
counter increment. Row layout is ``(cell, ladder entry)``; ring B rows
hold the quarter-FSR ladder with entry ``4 i + j`` at ``m_i Omega + j Omega / 4``.
"""

from __future__ import annotations

import numba as nb
import numpy as np

# indices into the ``cells`` array
PM_A, PM_C, PM_BA, PM_BC, AB_A, AB_B, CB_C, CB_B, A_IN, A_OUT, C_IN, C_OUT = range(12)


@nb.njit(cache=True)
def modulate_row(row, step, cplus, cminus, scratch):
    """``row[n] <- sum_j c_j row[n - j*step]`` with ``j`` in ``[-K, K]``.

    ``cplus[j]`` multiplies ``row[n - j*step]`` and ``cminus[j]`` multiplies
    ``row[n + j*step]``; terms falling off the ladder are dropped.
    """
    n = row.shape[0]
    for i in range(n):
        scratch[i] = row[i]
    c0 = cplus[0]
    for i in range(n):
        row[i] = c0 * scratch[i]
    for j in range(1, cplus.shape[0]):
        d = j * step
        if d >= n:
            break
        c1 = cplus[j]
        c2 = cminus[j]
        for i in range(d, n):
            row[i] += c1 * scratch[i - d]
        for i in range(n - d):
            row[i] += c2 * scratch[i + d]


@nb.njit(cache=True)
def modulate_row_printed(row, family, step, j0, cminus1, scratch):
    """One-way resonant rule: entries ``4 i + family`` take ``J0 v + c v[n + step]``."""
    n = row.shape[0]
    for i in range(n):
        scratch[i] = row[i]
    for i in range(family, n, 4):
        acc = j0 * scratch[i]
        if i + step < n:
            acc += cminus1 * scratch[i + step]
        row[i] = acc


@nb.njit(cache=True)
def advance(A, C, B, st0, n_steps, wa, wc, wb, cells, g_ab, g_cb, gp,
            modulate, steps_per_rt, ca_p, ca_m, cc_p, cc_m,
            cba_p, cba_m, cbc_p, cbc_m, b_printed,
            inject, src_in, record, stride, out_a, out_c, norms):
    """Advance the three rings by ``n_steps`` grid steps.

    Returns the final step counter. Modulator coefficients are indexed by
    the roundtrip within this call (``k // steps_per_rt``). ``gp`` holds the
    waveguide strengths in the order A_in, A_out, C_in, C_out.
    """
    NA = A.shape[0]
    NC = C.shape[0]
    NB = B.shape[0]
    M = A.shape[1]
    MB = B.shape[1]
    t_ab = np.sqrt(1.0 - g_ab * g_ab)
    t_cb = np.sqrt(1.0 - g_cb * g_cb)
    tp = np.sqrt(1.0 - gp * gp)
    k_ab = -1j * g_ab
    k_cb = -1j * g_cb
    kp = -1j * gp
    scratch = np.empty(MB, np.complex128)
    st = st0
    for k in range(n_steps):
        st += 1
        # propagation: rows entering cell 0 pick up the roundtrip phase
        r = (-st) % NA
        for i in range(M):
            A[r, i] *= wa[i]
        r = (-st) % NC
        for i in range(M):
            C[r, i] *= wc[i]
        r = (-st) % NB
        for i in range(MB):
            B[r, i] *= wb[i]

        # ring-ring couplers
        ra = (cells[AB_A] - st) % NA
        rb = (cells[AB_B] - st) % NB
        for i in range(M):
            a = A[ra, i]
            b = B[rb, 4 * i]
            A[ra, i] = t_ab * a + k_ab * b
            B[rb, 4 * i] = k_ab * a + t_ab * b
        rc = (cells[CB_C] - st) % NC
        rb = (cells[CB_B] - st) % NB
        for i in range(M):
            c = C[rc, i]
            b = B[rb, 4 * i + 1]
            C[rc, i] = t_cb * c + k_cb * b
            B[rb, 4 * i + 1] = k_cb * c + t_cb * b

        if modulate:
            q = k // steps_per_rt
            modulate_row(A[(cells[PM_A] - st) % NA], 1, ca_p[q], ca_m[q], scratch)
            modulate_row(C[(cells[PM_C] - st) % NC], 1, cc_p[q], cc_m[q], scratch)
            if b_printed:
                modulate_row_printed(B[(cells[PM_BA] - st) % NB], 0, 5, cba_p[q, 0], cba_m[q, 1], scratch)
                modulate_row_printed(B[(cells[PM_BC] - st) % NB], 1, 3, cbc_p[q, 0], cbc_m[q, 1], scratch)
            else:
                modulate_row(B[(cells[PM_BA] - st) % NB], 5, cba_p[q], cba_m[q], scratch)
                modulate_row(B[(cells[PM_BC] - st) % NB], 3, cbc_p[q], cbc_m[q], scratch)

        # waveguide taps
        r = (cells[A_IN] - st) % NA
        for i in range(M):
            A[r, i] = tp[0] * A[r, i]
        r = (cells[C_IN] - st) % NC
        if inject:
            for i in range(M):
                C[r, i] = tp[2] * C[r, i] + kp[2] * src_in[k, i]
        else:
            for i in range(M):
                C[r, i] = tp[2] * C[r, i]
        ra = (cells[A_OUT] - st) % NA
        rc = (cells[C_OUT] - st) % NC
        if record and k % stride == 0:
            j = k // stride
            for i in range(M):
                out_a[j, i] = kp[1] * A[ra, i]
                out_c[j, i] = kp[3] * C[rc, i]
        for i in range(M):
            A[ra, i] = tp[1] * A[ra, i]
            C[rc, i] = tp[3] * C[rc, i]

        if (k + 1) % steps_per_rt == 0:
            s = 0.0
            for x in range(NA):
                for i in range(M):
                    s += A[x, i].real ** 2 + A[x, i].imag ** 2
            for x in range(NC):
                for i in range(M):
                    s += C[x, i].real ** 2 + C[x, i].imag ** 2
            for x in range(NB):
                for i in range(MB):
                    s += B[x, i].real ** 2 + B[x, i].imag ** 2
            norms[(k + 1) // steps_per_rt - 1] = s
    return st
