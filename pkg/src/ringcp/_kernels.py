"""Compiled inner loops for the instantaneous-equilibrium solver and the
time stepper.

Everything here operates on raw float64 arrays; the public modules wrap these
in the domain types.  Two properties are deliberately engineered in:

* determinism: a fixed accumulation order everywhere, so identical inputs
  give bit-identical outputs within one build;
* exact rotation equivariance: the circulant kernel application accumulates
  strictly in offset order (the same order for every output node), and every
  scalar reduction that feeds back into the dynamics is a sorted sum, which
  is invariant under any permutation of its inputs.  Rolling the input fields
  by k nodes therefore rolls every output bit-exactly.

Solver iteration statuses (negative values returned by _solve):
  -1  no convergence within max_iter
  -2  non-finite value encountered
"""

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def _circ(kvec, x2, out):
    """out[i] = sum_m kvec[m] * x2[i+m] for a doubled input buffer x2.

    Accumulates in strictly increasing m for every i, so the result is
    bit-exactly equivariant under cyclic shifts of the underlying field.
    """
    n = kvec.shape[0]
    for i in range(n):
        out[i] = 0.0
    for m in range(n):
        km = kvec[m]
        for i in range(n):
            out[i] += km * x2[m + i]


@njit(cache=True)
def _sorted_sum(v, buf):
    """Permutation-invariant sum: sort a copy, then accumulate in order."""
    n = v.shape[0]
    for i in range(n):
        buf[i] = v[i]
    buf.sort()
    tot = 0.0
    for i in range(n):
        tot += buf[i]
    return tot


@njit(cache=True)
def _solve(
    lam, phi, wa, wm,
    ka, kb, wq,
    mu, sigma, eta,
    tol, max_iter, normalize, damping,
    x2, num, pa, pm, wan, wmn, wbuf, sbuf,
):
    """Fixed-point iteration for the transformed wages (wa, wm) in place.

    wa = (agricultural wage)^eta, wm = (manufacturing wage)^sigma.  Each
    sweep applies the two update maps; with normalize on, both wage fields
    are then rescaled by the common factor that sets mean(manufacturing
    wage) = 1, removing the free overall scale.  Stops when both sup-norm
    update deltas fall below tol.  Returns the iteration count, or a
    negative status.
    """
    n = lam.shape[0]
    inv_eta = 1.0 / eta
    inv_sig = 1.0 / sigma
    for it in range(1, max_iter + 1):
        for i in range(n):
            num[i] = mu * (wm[i] ** inv_sig) * lam[i] + (1.0 - mu) * (wa[i] ** inv_eta) * phi[i]
        for i in range(n):
            v = phi[i] * (wa[i] ** inv_eta) / wa[i]   # phi * wa^{(1-eta)/eta}
            x2[i] = v
            x2[n + i] = v
        _circ(ka, x2, pa)
        for i in range(n):
            v = lam[i] * (wm[i] ** inv_sig) / wm[i]   # lam * wm^{(1-sigma)/sigma}
            x2[i] = v
            x2[n + i] = v
        _circ(kb, x2, pm)
        for i in range(n):
            v = num[i] / (pa[i] * wq)
            x2[i] = v
            x2[n + i] = v
        _circ(ka, x2, wan)
        for i in range(n):
            v = num[i] / (pm[i] * wq)
            x2[i] = v
            x2[n + i] = v
        _circ(kb, x2, wmn)
        for i in range(n):
            wan[i] *= wq
            wmn[i] *= wq
        if damping != 1.0:
            ok = True
            for i in range(n):
                da = wa[i] + damping * (wan[i] - wa[i])
                dm = wm[i] + damping * (wmn[i] - wm[i])
                if da <= 0.0 or dm <= 0.0:
                    ok = False
                    break
                wbuf[i] = da
                sbuf[i] = dm
            if ok:
                for i in range(n):
                    wan[i] = wbuf[i]
                    wmn[i] = sbuf[i]
        if normalize:
            for i in range(n):
                wbuf[i] = wmn[i] ** inv_sig
            mean_wm = _sorted_sum(wbuf, sbuf) / n
            if not mean_wm > 0.0:
                return -2
            c = 1.0 / mean_wm
            ca = c ** eta
            cm = c ** sigma
        else:
            ca = 1.0
            cm = 1.0
        ra = 0.0
        rm = 0.0
        for i in range(n):
            va = wan[i] * ca
            vm = wmn[i] * cm
            da = abs(va - wa[i])
            dm = abs(vm - wm[i])
            if da > ra:
                ra = da
            if dm > rm:
                rm = dm
            wa[i] = va
            wm[i] = vm
        if ra != ra or rm != rm:
            return -2
        if ra < tol and rm < tol:
            return it
    return -1


@njit(cache=True)
def _omega_fields(lam, phi, wa, wm, ka, kb, wq, mu, sigma, eta, x2, pa, pm, om):
    """Real wage field from converged transformed wages.

    Also leaves pa = (agricultural price index)^(1-eta) and
    pm = (manufacturing price index)^(1-sigma) for reuse.
    """
    n = lam.shape[0]
    inv_eta = 1.0 / eta
    inv_sig = 1.0 / sigma
    for i in range(n):
        v = phi[i] * (wa[i] ** inv_eta) / wa[i]
        x2[i] = v
        x2[n + i] = v
    _circ(ka, x2, pa)
    for i in range(n):
        v = lam[i] * (wm[i] ** inv_sig) / wm[i]
        x2[i] = v
        x2[n + i] = v
    _circ(kb, x2, pm)
    for i in range(n):
        pa[i] *= wq
        pm[i] *= wq
        g_a = pa[i] ** (1.0 / (1.0 - eta))
        g_m = pm[i] ** (1.0 / (1.0 - sigma))
        om[i] = (wm[i] ** inv_sig) * g_m ** (-mu) * g_a ** (mu - 1.0)


@njit(cache=True)
def _evolve(
    lam, phi, ka, kb, wq,
    mu, sigma, eta, gamma,
    dt, stop_tol, max_steps,
    eq_tol, eq_max_iter, normalize, damping, extrap_order,
    record_every, rec_vals, rec_steps,
    wa, wm,
):
    """March lam forward until stationary, one equilibrium solve per step.

    lam is updated in place; wa/wm carry the transformed wages across steps
    (warm start).  The warm-start guess is extrapolated from the previous one
    or two solutions when extrap_order is 1 or 2; the fixed point reached is
    the same, only the iteration count changes.

    Returns (steps, status, eq_iters_total, max_drift, min_lam, n_records,
    fail_step) with status:
       1  converged (sup-norm step change < stop_tol)
       0  max_steps reached without convergence
      -1  equilibrium solver failed to converge at step fail_step
      -2  non-finite value at step fail_step
      -3  a population value went negative at step fail_step
    """
    n = lam.shape[0]
    x2 = np.empty(2 * n)
    num = np.empty(n)
    pa = np.empty(n)
    pm = np.empty(n)
    wan = np.empty(n)
    wmn = np.empty(n)
    wbuf = np.empty(n)
    sbuf = np.empty(n)
    om = np.empty(n)
    prod = np.empty(n)
    wa1 = np.empty(n)   # solution at step k-1
    wm1 = np.empty(n)
    wa2 = np.empty(n)   # solution at step k-2
    wm2 = np.empty(n)
    wag = np.empty(n)
    wmg = np.empty(n)
    n_hist = 0
    total_iters = 0
    max_drift = 0.0
    min_lam = np.inf
    n_rec = 0
    k = 0
    while k < max_steps:
        if record_every > 0 and k % record_every == 0 and n_rec < rec_vals.shape[0]:
            for i in range(n):
                rec_vals[n_rec, i] = lam[i]
            rec_steps[n_rec] = k
            n_rec += 1
        # warm-start guess from the last one/two solutions
        guess_set = False
        if extrap_order >= 2 and n_hist >= 2:
            ok = True
            for i in range(n):
                ga = 3.0 * wa[i] - 3.0 * wa1[i] + wa2[i]
                gm = 3.0 * wm[i] - 3.0 * wm1[i] + wm2[i]
                if ga <= 0.0 or gm <= 0.0:
                    ok = False
                    break
                wag[i] = ga
                wmg[i] = gm
            guess_set = ok
        if not guess_set and extrap_order >= 1 and n_hist >= 1:
            ok = True
            for i in range(n):
                ga = 2.0 * wa[i] - wa1[i]
                gm = 2.0 * wm[i] - wm1[i]
                if ga <= 0.0 or gm <= 0.0:
                    ok = False
                    break
                wag[i] = ga
                wmg[i] = gm
            guess_set = ok
        if not guess_set:
            for i in range(n):
                wag[i] = wa[i]
                wmg[i] = wm[i]
        for i in range(n):
            wa2[i] = wa1[i]
            wm2[i] = wm1[i]
            wa1[i] = wa[i]
            wm1[i] = wm[i]
        if n_hist < 2:
            n_hist += 1
        it = _solve(
            lam, phi, wag, wmg, ka, kb, wq, mu, sigma, eta,
            eq_tol, eq_max_iter, normalize, damping,
            x2, num, pa, pm, wan, wmn, wbuf, sbuf,
        )
        if it == -1:
            return k, -1, total_iters, max_drift, min_lam, n_rec, k
        if it == -2:
            return k, -2, total_iters, max_drift, min_lam, n_rec, k
        total_iters += it
        for i in range(n):
            wa[i] = wag[i]
            wm[i] = wmg[i]
        _omega_fields(lam, phi, wa, wm, ka, kb, wq, mu, sigma, eta, x2, pa, pm, om)
        for i in range(n):
            prod[i] = om[i] * lam[i]
        ob = _sorted_sum(prod, sbuf) * wq
        if ob != ob:
            return k, -2, total_iters, max_drift, min_lam, n_rec, k
        delta = 0.0
        for i in range(n):
            nl = lam[i] + dt * gamma * (om[i] - ob) * lam[i]
            if nl < 0.0:
                return k, -3, total_iters, max_drift, min_lam, n_rec, k
            d = abs(nl - lam[i])
            if d > delta:
                delta = d
            lam[i] = nl
        k += 1
        mass = 0.0
        for i in range(n):
            mass += lam[i] * wq
        drift = abs(mass - 1.0)
        if drift > max_drift:
            max_drift = drift
        ml = lam[0]
        for i in range(n):
            if lam[i] < ml:
                ml = lam[i]
        if ml < min_lam:
            min_lam = ml
        if delta < stop_tol:
            if record_every > 0 and n_rec < rec_vals.shape[0]:
                for i in range(n):
                    rec_vals[n_rec, i] = lam[i]
                rec_steps[n_rec] = k
                n_rec += 1
            return k, 1, total_iters, max_drift, min_lam, n_rec, -1
    return k, 0, total_iters, max_drift, min_lam, n_rec, -1


def circ_apply(profile: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Circulant kernel application y_i = sum_j K(d_ij) x_j for python callers.

    Uses the same compiled routine as the hot loops, so results are
    bit-identical with what the solver computes internally.
    """
    n = x.shape[0]
    x2 = np.empty(2 * n)
    x2[:n] = x
    x2[n:] = x
    out = np.empty(n)
    _circ(np.ascontiguousarray(profile, dtype=np.float64), x2, out)
    return out


def invariant_sum(x: np.ndarray) -> float:
    """Permutation-invariant sum used for every dynamics-facing reduction."""
    v = np.ascontiguousarray(x, dtype=np.float64)
    return _sorted_sum(v, np.empty_like(v))
