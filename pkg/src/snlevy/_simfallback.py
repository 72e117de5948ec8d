"""Pure-Python simulation kernels (reference backend).

The compiled backend in _simkernel.pyx mirrors this file operation for
operation, including the order in which random draws are consumed, so the two
backends produce identical paths for identical (seed, path index).

Randomness is counter-based: draw n of path p is a 64-bit mix of
(key(seed, p) + n * GOLDEN), so paths are independent work items and results
do not depend on scheduling.

Scheme notes:
  * exact exponential clocks for jumps and Poisson observations;
  * for sigma > 0 the Gaussian part advances on substeps of size <= dt, and
    boundary interactions within a substep use the sampled Brownian-bridge
    extremum (one-step Skorokhod reflection / crossing detection), giving
    O(dt) weak bias instead of O(sqrt(dt));
  * sigma = 0 models are fully event-driven and exact;
  * discounts are exact at event times, midpoint-discounted within substeps.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV53 = 2.0 ** -53
_TWO_PI = 6.283185307179586


def _mix(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def path_key(seed: int, path: int) -> int:
    return _mix((seed ^ _mix((path * _GOLDEN + _GOLDEN) & _MASK)) & _MASK)


class _Stream:
    """Counter-based uniform stream for one path."""

    __slots__ = ("key", "n")

    def __init__(self, seed: int, path: int):
        self.key = path_key(seed, path)
        self.n = 0

    def uniform(self) -> float:
        self.n += 1
        z = _mix((self.key + self.n * _GOLDEN) & _MASK)
        return ((z >> 11) + 0.5) * _INV53

    def normal(self) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)

    def exponential(self, rate: float) -> float:
        return -math.log(self.uniform()) / rate


def _draw_jump(rng: _Stream, rates, phases, total_rate: float) -> float:
    """Mixture claim size; always consumes exactly two uniforms."""
    pick = rng.uniform() * total_rate
    idx = 0
    acc = rates[0]
    while acc < pick and idx + 1 < len(rates):
        idx += 1
        acc += rates[idx]
    return -math.log(rng.uniform()) / phases[idx]


def _bridge_min(rng: _Stream, u0: float, u1: float, sig2h: float) -> float:
    """Sampled minimum of a Brownian bridge from u0 to u1 with variance
    sigma^2 h; consumes one uniform."""
    d = u1 - u0
    return 0.5 * (u0 + u1 - math.sqrt(d * d - 2.0 * sig2h * math.log(rng.uniform())))


def _bridge_max(rng: _Stream, u0: float, u1: float, sig2h: float) -> float:
    d = u1 - u0
    return 0.5 * (u0 + u1 + math.sqrt(d * d - 2.0 * sig2h * math.log(rng.uniform())))


def npv_kernel(drift: float, sigma: float, rates: np.ndarray, phases: np.ndarray,
               x0: float, b1: float, b2: float, q: float, r: float,
               dt: float, horizon: float, seed: int, n_paths: int):
    """Per-path discounted dividends, intervention counts and injections under
    the periodic (b1, b2)-policy with classical reflection at 0."""
    div = np.empty(n_paths)
    fix = np.empty(n_paths)
    inj = np.empty(n_paths)
    lam = float(np.sum(rates)) if len(rates) else 0.0
    sigma2 = sigma * sigma
    for p in range(n_paths):
        rng = _Stream(seed, p)
        u = x0
        t = 0.0
        d_acc = 0.0
        f_acc = 0.0
        i_acc = 0.0
        if u < 0.0:
            i_acc += -u
            u = 0.0
        t_jump = rng.exponential(lam) if lam > 0.0 else math.inf
        t_obs = rng.exponential(r)
        while t < horizon:
            t_next = min(t_jump, t_obs, horizon)
            if sigma > 0.0 and t_next > t:
                nsub = max(1, int(math.ceil((t_next - t) / dt)))
                h = (t_next - t) / nsub
                sqh = sigma * math.sqrt(h)
                sig2h = sigma2 * h
                mu_h = drift * h
                cut = 7.0 * sqh + abs(mu_h)
                fh = math.exp(-q * h)
                dmid = math.exp(-q * (t + 0.5 * h))
                for _ in range(nsub):
                    z = rng.normal()
                    u_end = u + mu_h + sqh * z
                    if u < cut or u_end < cut:
                        m = _bridge_min(rng, u, u_end, sig2h)
                        if m < 0.0:
                            i_acc += dmid * (-m)
                            u_end += -m
                    u = u_end
                    dmid *= fh
                t = t_next
            else:
                u += drift * (t_next - t)
                t = t_next
            if t >= horizon:
                break
            if t_jump <= t_obs:
                size = _draw_jump(rng, rates, phases, lam)
                u -= size
                if u < 0.0:
                    i_acc += math.exp(-q * t) * (-u)
                    u = 0.0
                t_jump = t + rng.exponential(lam)
            else:
                if u > b2:
                    disc = math.exp(-q * t)
                    d_acc += disc * (u - b1)
                    f_acc += disc
                    u = b1
                t_obs = t + rng.exponential(r)
        div[p] = d_acc
        fix[p] = f_acc
        inj[p] = i_acc
    return div, fix, inj


def parisian_kernel(drift: float, sigma: float, rates: np.ndarray,
                    phases: np.ndarray, x0: float, b1: float, b2: float,
                    r: float, dt: float, horizon: float, seed: int,
                    n_paths: int):
    """First down-crossing of 0 for the process pushed from above b2 to b1 at
    Poisson observation times (no reflection at 0).

    Returns (crossed flag, crossing time, position at crossing)."""
    crossed = np.zeros(n_paths, dtype=np.uint8)
    tau = np.full(n_paths, math.inf)
    uat = np.zeros(n_paths)
    lam = float(np.sum(rates)) if len(rates) else 0.0
    sigma2 = sigma * sigma
    for p in range(n_paths):
        rng = _Stream(seed, p)
        u = x0
        t = 0.0
        if u < 0.0:
            crossed[p] = 1
            tau[p] = 0.0
            uat[p] = u
            continue
        t_jump = rng.exponential(lam) if lam > 0.0 else math.inf
        t_obs = rng.exponential(r)
        done = False
        while t < horizon and not done:
            t_next = min(t_jump, t_obs, horizon)
            if sigma > 0.0 and t_next > t:
                nsub = max(1, int(math.ceil((t_next - t) / dt)))
                h = (t_next - t) / nsub
                sqh = sigma * math.sqrt(h)
                sig2h = sigma2 * h
                mu_h = drift * h
                cut = 7.0 * sqh + abs(mu_h)
                for k in range(nsub):
                    z = rng.normal()
                    u_end = u + mu_h + sqh * z
                    if u < cut or u_end < cut:
                        m = _bridge_min(rng, u, u_end, sig2h)
                        if m < 0.0:
                            crossed[p] = 1
                            tau[p] = t + (k + 0.5) * h
                            uat[p] = 0.0
                            done = True
                            break
                    u = u_end
                if done:
                    break
                t = t_next
            else:
                u += drift * (t_next - t)
                t = t_next
            if t >= horizon:
                break
            if t_jump <= t_obs:
                size = _draw_jump(rng, rates, phases, lam)
                u -= size
                if u < 0.0:
                    crossed[p] = 1
                    tau[p] = t
                    uat[p] = u
                    break
                t_jump = t + rng.exponential(lam)
            else:
                if u > b2:
                    u = b1
                t_obs = t + rng.exponential(r)
    return crossed, tau, uat


def exit_kernel(drift: float, sigma: float, rates: np.ndarray,
                phases: np.ndarray, x0: float, a: float, b: float,
                dt: float, horizon: float, seed: int, n_paths: int):
    """Two-sided exit of X from [b, a] (a may be inf).

    flag: 0 none within horizon, 1 up-crossing of a, 2 down-crossing of b.
    Returns (flag, exit time, position at exit)."""
    flag = np.zeros(n_paths, dtype=np.uint8)
    t_exit = np.full(n_paths, math.inf)
    x_at = np.zeros(n_paths)
    lam = float(np.sum(rates)) if len(rates) else 0.0
    sigma2 = sigma * sigma
    has_a = math.isfinite(a)
    for p in range(n_paths):
        rng = _Stream(seed, p)
        u = x0
        t = 0.0
        if has_a and u >= a:
            flag[p] = 1
            t_exit[p] = 0.0
            x_at[p] = a
            continue
        if u < b:
            flag[p] = 2
            t_exit[p] = 0.0
            x_at[p] = u
            continue
        t_jump = rng.exponential(lam) if lam > 0.0 else math.inf
        done = False
        while t < horizon and not done:
            t_next = min(t_jump, horizon)
            if sigma > 0.0 and t_next > t:
                nsub = max(1, int(math.ceil((t_next - t) / dt)))
                h = (t_next - t) / nsub
                sqh = sigma * math.sqrt(h)
                sig2h = sigma2 * h
                mu_h = drift * h
                cut = 7.0 * sqh + abs(mu_h)
                for k in range(nsub):
                    z = rng.normal()
                    u_end = u + mu_h + sqh * z
                    if has_a and (a - u < cut or a - u_end < cut):
                        mx = _bridge_max(rng, u, u_end, sig2h)
                        if mx > a:
                            flag[p] = 1
                            t_exit[p] = t + (k + 0.5) * h
                            x_at[p] = a
                            done = True
                            break
                    if u - b < cut or u_end - b < cut:
                        m = _bridge_min(rng, u, u_end, sig2h)
                        if m < b:
                            flag[p] = 2
                            t_exit[p] = t + (k + 0.5) * h
                            x_at[p] = b
                            done = True
                            break
                    u = u_end
                if done:
                    break
                t = t_next
            else:
                # deterministic drift segment: up-crossing of a is exact
                if has_a and drift > 0.0 and u < a:
                    t_hit = t + (a - u) / drift
                    if t_hit <= t_next:
                        flag[p] = 1
                        t_exit[p] = t_hit
                        x_at[p] = a
                        break
                u += drift * (t_next - t)
                t = t_next
            if t >= horizon:
                break
            if t_jump <= t:
                size = _draw_jump(rng, rates, phases, lam)
                u -= size
                if u < b:
                    flag[p] = 2
                    t_exit[p] = t
                    x_at[p] = u
                    break
                t_jump = t + rng.exponential(lam)
    return flag, t_exit, x_at
