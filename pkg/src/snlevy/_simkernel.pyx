# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels.

Mirrors _simfallback.py operation for operation, including the order in which
random draws are consumed, so both backends produce identical paths for
identical (seed, path index).  Keep the two files in sync.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, cos, exp, isfinite, log, sqrt, INFINITY

cnp.import_array()

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t snlevy_mix(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    """
    unsigned long long snlevy_mix(unsigned long long z) nogil

cdef unsigned long long GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV53 = 1.1102230246251565e-16   # 2^-53
cdef double TWO_PI = 6.283185307179586


cdef struct Stream:
    unsigned long long key
    unsigned long long n


cdef inline void stream_init(Stream* s, unsigned long long seed,
                             unsigned long long path) nogil:
    s.key = snlevy_mix(seed ^ snlevy_mix(path * GOLDEN + GOLDEN))
    s.n = 0


cdef inline double uniform(Stream* s) nogil:
    s.n += 1
    cdef unsigned long long z = snlevy_mix(s.key + s.n * GOLDEN)
    return (<double>(z >> 11) + 0.5) * INV53


cdef inline double normal(Stream* s) nogil:
    cdef double u1 = uniform(s)
    cdef double u2 = uniform(s)
    return sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)


cdef inline double exponential(Stream* s, double rate) nogil:
    return -log(uniform(s)) / rate


cdef inline double draw_jump(Stream* s, const double[::1] rates,
                             const double[::1] phases, double total) nogil:
    cdef double pick = uniform(s) * total
    cdef Py_ssize_t idx = 0
    cdef double acc = rates[0]
    while acc < pick and idx + 1 < rates.shape[0]:
        idx += 1
        acc += rates[idx]
    return -log(uniform(s)) / phases[idx]


cdef inline double bridge_min(Stream* s, double u0, double u1,
                              double sig2h) nogil:
    cdef double d = u1 - u0
    return 0.5 * (u0 + u1 - sqrt(d * d - 2.0 * sig2h * log(uniform(s))))


cdef inline double bridge_max(Stream* s, double u0, double u1,
                              double sig2h) nogil:
    cdef double d = u1 - u0
    return 0.5 * (u0 + u1 + sqrt(d * d - 2.0 * sig2h * log(uniform(s))))


def npv_kernel(double drift, double sigma, const double[::1] rates,
               const double[::1] phases, double x0, double b1, double b2,
               double q, double r, double dt, double horizon,
               unsigned long long seed, Py_ssize_t n_paths):
    div_arr = np.empty(n_paths)
    fix_arr = np.empty(n_paths)
    inj_arr = np.empty(n_paths)
    cdef double[::1] div = div_arr
    cdef double[::1] fix = fix_arr
    cdef double[::1] inj = inj_arr
    cdef double lam = 0.0
    cdef Py_ssize_t i
    for i in range(rates.shape[0]):
        lam += rates[i]
    cdef double sigma2 = sigma * sigma
    cdef Stream rng
    cdef Py_ssize_t p, nsub, k
    cdef double u, t, d_acc, f_acc, i_acc, t_jump, t_obs, t_next
    cdef double h, sqh, sig2h, mu_h, cut, fh, dmid, z, u_end, m, size, disc
    with nogil:
        for p in range(n_paths):
            stream_init(&rng, seed, <unsigned long long>p)
            u = x0
            t = 0.0
            d_acc = 0.0
            f_acc = 0.0
            i_acc = 0.0
            if u < 0.0:
                i_acc += -u
                u = 0.0
            t_jump = exponential(&rng, lam) if lam > 0.0 else INFINITY
            t_obs = exponential(&rng, r)
            while t < horizon:
                t_next = t_jump
                if t_obs < t_next:
                    t_next = t_obs
                if horizon < t_next:
                    t_next = horizon
                if sigma > 0.0 and t_next > t:
                    nsub = <Py_ssize_t>ceil((t_next - t) / dt)
                    if nsub < 1:
                        nsub = 1
                    h = (t_next - t) / nsub
                    sqh = sigma * sqrt(h)
                    sig2h = sigma2 * h
                    mu_h = drift * h
                    cut = 7.0 * sqh + (mu_h if mu_h >= 0 else -mu_h)
                    fh = exp(-q * h)
                    dmid = exp(-q * (t + 0.5 * h))
                    for k in range(nsub):
                        z = normal(&rng)
                        u_end = u + mu_h + sqh * z
                        if u < cut or u_end < cut:
                            m = bridge_min(&rng, u, u_end, sig2h)
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
                    size = draw_jump(&rng, rates, phases, lam)
                    u -= size
                    if u < 0.0:
                        i_acc += exp(-q * t) * (-u)
                        u = 0.0
                    t_jump = t + exponential(&rng, lam)
                else:
                    if u > b2:
                        disc = exp(-q * t)
                        d_acc += disc * (u - b1)
                        f_acc += disc
                        u = b1
                    t_obs = t + exponential(&rng, r)
            div[p] = d_acc
            fix[p] = f_acc
            inj[p] = i_acc
    return div_arr, fix_arr, inj_arr


def parisian_kernel(double drift, double sigma, const double[::1] rates,
                    const double[::1] phases, double x0, double b1, double b2,
                    double r, double dt, double horizon,
                    unsigned long long seed, Py_ssize_t n_paths):
    crossed_arr = np.zeros(n_paths, dtype=np.uint8)
    tau_arr = np.full(n_paths, np.inf)
    uat_arr = np.zeros(n_paths)
    cdef unsigned char[::1] crossed = crossed_arr
    cdef double[::1] tau = tau_arr
    cdef double[::1] uat = uat_arr
    cdef double lam = 0.0
    cdef Py_ssize_t i
    for i in range(rates.shape[0]):
        lam += rates[i]
    cdef double sigma2 = sigma * sigma
    cdef Stream rng
    cdef Py_ssize_t p, nsub, k
    cdef double u, t, t_jump, t_obs, t_next
    cdef double h, sqh, sig2h, mu_h, cut, z, u_end, m, size
    cdef bint done
    with nogil:
        for p in range(n_paths):
            stream_init(&rng, seed, <unsigned long long>p)
            u = x0
            t = 0.0
            if u < 0.0:
                crossed[p] = 1
                tau[p] = 0.0
                uat[p] = u
                continue
            t_jump = exponential(&rng, lam) if lam > 0.0 else INFINITY
            t_obs = exponential(&rng, r)
            done = False
            while t < horizon and not done:
                t_next = t_jump
                if t_obs < t_next:
                    t_next = t_obs
                if horizon < t_next:
                    t_next = horizon
                if sigma > 0.0 and t_next > t:
                    nsub = <Py_ssize_t>ceil((t_next - t) / dt)
                    if nsub < 1:
                        nsub = 1
                    h = (t_next - t) / nsub
                    sqh = sigma * sqrt(h)
                    sig2h = sigma2 * h
                    mu_h = drift * h
                    cut = 7.0 * sqh + (mu_h if mu_h >= 0 else -mu_h)
                    for k in range(nsub):
                        z = normal(&rng)
                        u_end = u + mu_h + sqh * z
                        if u < cut or u_end < cut:
                            m = bridge_min(&rng, u, u_end, sig2h)
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
                    size = draw_jump(&rng, rates, phases, lam)
                    u -= size
                    if u < 0.0:
                        crossed[p] = 1
                        tau[p] = t
                        uat[p] = u
                        break
                    t_jump = t + exponential(&rng, lam)
                else:
                    if u > b2:
                        u = b1
                    t_obs = t + exponential(&rng, r)
    return crossed_arr, tau_arr, uat_arr


def exit_kernel(double drift, double sigma, const double[::1] rates,
                const double[::1] phases, double x0, double a, double b,
                double dt, double horizon, unsigned long long seed,
                Py_ssize_t n_paths):
    flag_arr = np.zeros(n_paths, dtype=np.uint8)
    t_exit_arr = np.full(n_paths, np.inf)
    x_at_arr = np.zeros(n_paths)
    cdef unsigned char[::1] flag = flag_arr
    cdef double[::1] t_exit = t_exit_arr
    cdef double[::1] x_at = x_at_arr
    cdef double lam = 0.0
    cdef Py_ssize_t i
    for i in range(rates.shape[0]):
        lam += rates[i]
    cdef double sigma2 = sigma * sigma
    cdef bint has_a = isfinite(a)
    cdef Stream rng
    cdef Py_ssize_t p, nsub, k
    cdef double u, t, t_jump, t_next, t_hit
    cdef double h, sqh, sig2h, mu_h, cut, z, u_end, m, mx, size
    cdef bint done
    with nogil:
        for p in range(n_paths):
            stream_init(&rng, seed, <unsigned long long>p)
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
            t_jump = exponential(&rng, lam) if lam > 0.0 else INFINITY
            done = False
            while t < horizon and not done:
                t_next = t_jump
                if horizon < t_next:
                    t_next = horizon
                if sigma > 0.0 and t_next > t:
                    nsub = <Py_ssize_t>ceil((t_next - t) / dt)
                    if nsub < 1:
                        nsub = 1
                    h = (t_next - t) / nsub
                    sqh = sigma * sqrt(h)
                    sig2h = sigma2 * h
                    mu_h = drift * h
                    cut = 7.0 * sqh + (mu_h if mu_h >= 0 else -mu_h)
                    for k in range(nsub):
                        z = normal(&rng)
                        u_end = u + mu_h + sqh * z
                        if has_a and (a - u < cut or a - u_end < cut):
                            mx = bridge_max(&rng, u, u_end, sig2h)
                            if mx > a:
                                flag[p] = 1
                                t_exit[p] = t + (k + 0.5) * h
                                x_at[p] = a
                                done = True
                                break
                        if u - b < cut or u_end - b < cut:
                            m = bridge_min(&rng, u, u_end, sig2h)
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
                    size = draw_jump(&rng, rates, phases, lam)
                    u -= size
                    if u < b:
                        flag[p] = 2
                        t_exit[p] = t
                        x_at[p] = u
                        break
                    t_jump = t + exponential(&rng, lam)
    return flag_arr, t_exit_arr, x_at_arr
