# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled episode kernels.

Mirrors ``_pykernels`` operation for operation (same evaluation order, same
draw consumption) so both backends return identical trajectories.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, exp, INFINITY, isfinite
from libc.stdlib cimport malloc, free

cnp.import_array()

DEF UCB1 = 0
DEF AUCB1 = 1
DEF TS = 2
DEF ATS = 3
DEF EG = 4
DEF NEG = 5
DEF AEG = 6
DEF MYOPIC = 7
DEF UCB1PLUS = 8
DEF TWO_UCBS = 9


cdef struct State:
    int K
    long *n_pi
    double *reward_sum
    long *n_aux
    double *aux_sum
    double *mapped_sum
    double *tau
    long t_tilde


cdef int state_init(State *st, int K) nogil:
    st.K = K
    st.n_pi = <long *> malloc(K * sizeof(long))
    st.reward_sum = <double *> malloc(K * sizeof(double))
    st.n_aux = <long *> malloc(K * sizeof(long))
    st.aux_sum = <double *> malloc(K * sizeof(double))
    st.mapped_sum = <double *> malloc(K * sizeof(double))
    st.tau = <double *> malloc(K * sizeof(double))
    st.t_tilde = 0
    if not (st.n_pi and st.reward_sum and st.n_aux and st.aux_sum and st.mapped_sum and st.tau):
        return -1
    cdef int k
    for k in range(K):
        st.n_pi[k] = 0
        st.reward_sum[k] = 0.0
        st.n_aux[k] = 0
        st.aux_sum[k] = 0.0
        st.mapped_sum[k] = 0.0
        st.tau[k] = 0.0
    return 0


cdef void state_free(State *st) nogil:
    free(st.n_pi)
    free(st.reward_sum)
    free(st.n_aux)
    free(st.aux_sum)
    free(st.mapped_sum)
    free(st.tau)


cdef inline double log_term(double t) nogil:
    if t > 0:
        return log(t)
    return 0.0


cdef inline double radius(double c, double sigma, double lt, double count) nogil:
    if count <= 0:
        return INFINITY
    return sqrt(c * (sigma * sigma) * lt / count)


cdef inline void reward_stats(State *st, int k, double *mean, double *count) nogil:
    cdef long n = st.n_pi[k]
    if n > 0:
        mean[0] = st.reward_sum[k] / <double> n
    else:
        mean[0] = 0.0
    count[0] = <double> n


cdef inline int known_stats(State *st, int k, double sigma, double sh, double *mean, double *count) nogil:
    cdef long n = st.n_pi[k]
    cdef long m = st.n_aux[k]
    cdef double ratio, cnt, num
    if m > 0:
        if not sh > 0:
            return -1
        ratio = (sigma * sigma) / (sh * sh)
        cnt = <double> n + ratio * <double> m
        num = st.reward_sum[k] + ratio * st.mapped_sum[k]
    else:
        cnt = <double> n
        num = st.reward_sum[k]
    if cnt <= 0:
        mean[0] = 0.0
        count[0] = 0.0
    else:
        mean[0] = num / cnt
        count[0] = cnt
    return 0


cdef inline int optimistic(State *st, int k, double sigma, double sh, double abar, double floor,
                           double *mean, double *count) nogil:
    cdef long n = st.n_pi[k]
    cdef long m = st.n_aux[k]
    cdef double s2, sh2, wc, ws, cnt, num, denom
    if m > 0 and isfinite(abar):
        if not sh > 0:
            return -1
        s2 = sigma * sigma
        sh2 = sh * sh
        wc = s2 / (abar * abar * sh2)
        ws = s2 / (abar * sh2)
        cnt = <double> n + wc * <double> m
        num = st.reward_sum[k] + ws * st.aux_sum[k]
    else:
        cnt = <double> n
        num = st.reward_sum[k]
    denom = floor if floor > cnt else cnt
    count[0] = cnt
    if denom <= 0:
        mean[0] = 0.0
    else:
        mean[0] = num / denom
    return 0


cdef inline int two_ucbs_index(State *st, int k, double lt, double c, double sigma, double sh,
                               double abar, double floor, double *out) nogil:
    cdef double mean, count, u_pi, o_mean, o_count, u_aux
    reward_stats(st, k, &mean, &count)
    u_pi = mean + radius(c, sigma, lt, count)
    if optimistic(st, k, sigma, sh, abar, floor, &o_mean, &o_count) < 0:
        return -1
    u_aux = o_mean + radius(c, sigma, lt, o_count)
    # min(u_pi, u_aux) keeps the first argument on ties.
    out[0] = u_aux if u_aux < u_pi else u_pi
    return 0


cdef inline void add_aux(State *st, int k, const double[:] vals, long start, long n, double a) nogil:
    cdef long i
    cdef double obs
    for i in range(start, start + n):
        obs = vals[i]
        st.n_aux[k] += 1
        st.aux_sum[k] += obs
        st.mapped_sum[k] += a * obs


cdef long run_episode(int kind, double c, double sigma, double delta, double abar,
                      const double[:] scale, const double[:] alpha, const double[:] caps,
                      const long long[:, :] H, const double[:] aux_vals, const long long[:] aux_off,
                      const double[:, :] rewards, const double[:, :] rnd, long long[:] arms,
                      double *vals) nogil:
    cdef int K = H.shape[0]
    cdef long T = H.shape[1]
    cdef State st
    cdef long t, i, n
    cdef int k, arm, best, n_ties
    cdef double lt, mean, count, idx, best_val, total, p, target, acc, rate, cap
    cdef bint use_aux = (kind == AUCB1 or kind == ATS or kind == NEG or kind == AEG
                         or kind == MYOPIC or kind == TWO_UCBS)
    cdef bint egk = (kind == EG or kind == NEG or kind == AEG)
    cdef bint direct
    cdef long *pos = <long *> malloc(K * sizeof(long))
    cdef int *ties = <int *> malloc(K * sizeof(int))
    if pos == NULL or ties == NULL or state_init(&st, K) < 0:
        free(pos)
        free(ties)
        return -2
    for k in range(K):
        pos[k] = aux_off[k]
    for t in range(1, T + 1):
        # (a) auxiliary batch
        if egk:
            for k in range(K):
                n = H[k, t - 1] if kind == AEG else 0
                rate = delta * delta / (c * scale[k] * scale[k]) if kind == AEG else 0.0
                st.tau[k] = (st.tau[k] + 1.0) * exp(rate * <double> n)
        for k in range(K):
            n = H[k, t - 1]
            if n and use_aux:
                add_aux(&st, k, aux_vals, pos[k], n, alpha[k])
            pos[k] += n
        # (b) selection
        arm = 0
        direct = False
        if kind == UCB1 or kind == AUCB1:
            if t <= K:
                arm = <int> (t - 1)
                direct = True
            else:
                lt = log_term(<double> t)
                for k in range(K):
                    if kind == AUCB1:
                        if known_stats(&st, k, sigma, scale[k], &mean, &count) < 0:
                            arm = -1
                            break
                    else:
                        reward_stats(&st, k, &mean, &count)
                    vals[k] = mean + radius(c, sigma, lt, count)
        elif kind == TS or kind == ATS:
            for k in range(K):
                if kind == ATS:
                    if known_stats(&st, k, sigma, scale[k], &mean, &count) < 0:
                        arm = -1
                        break
                else:
                    reward_stats(&st, k, &mean, &count)
                vals[k] = mean + sqrt(c * (sigma * sigma) / (count + 1.0)) * rnd[t - 1, k]
        elif egk:
            total = 0.0
            for k in range(K):
                total += 1.0 / st.tau[k]
            p = c * (sigma * sigma) / (delta * delta) * total
            if p > 1.0:
                p = 1.0
            if rnd[t - 1, 0] < p:
                target = rnd[t - 1, 1] * total
                acc = 0.0
                arm = K - 1
                for k in range(K):
                    acc += 1.0 / st.tau[k]
                    if target < acc:
                        arm = k
                        break
                direct = True
            else:
                for k in range(K):
                    if kind == EG:
                        reward_stats(&st, k, &mean, &count)
                    elif known_stats(&st, k, sigma, scale[k], &mean, &count) < 0:
                        arm = -1
                        break
                    vals[k] = mean
        elif kind == MYOPIC:
            if t > K:
                best_val = -INFINITY
                for k in range(K):
                    if known_stats(&st, k, sigma, scale[k], &mean, &count) < 0:
                        arm = -1
                        break
                    vals[k] = mean
                    if k == 0 or mean > best_val:
                        best_val = mean
                if arm == 0:
                    n_ties = 0
                    for k in range(K):
                        if vals[k] == best_val:
                            ties[n_ties] = k
                            n_ties += 1
                    i = <long> (rnd[t - 1, 0] * n_ties)
                    if i > n_ties - 1:
                        i = n_ties - 1
                    arm = ties[i]
            else:
                arm = <int> (t - 1)
            direct = True
        elif kind == UCB1PLUS:
            arm = -3
            for k in range(K):
                if st.n_pi[k] == 0:
                    arm = k
                    break
            if arm == -3:
                arm = 0
                lt = log_term(<double> t)
                for k in range(K):
                    reward_stats(&st, k, &mean, &count)
                    idx = mean + radius(c, sigma, lt, count)
                    cap = caps[k]
                    vals[k] = cap if cap < idx else idx
            else:
                direct = True
        elif kind == TWO_UCBS:
            arm = -3
            for k in range(K):
                if st.n_pi[k] == 0:
                    arm = k
                    break
            if arm == -3:
                arm = 0
                lt = log_term(<double> t)
                for k in range(K):
                    if two_ucbs_index(&st, k, lt, c, sigma, scale[k], abar, 1.0, &idx) < 0:
                        arm = -1
                        break
                    vals[k] = idx
            else:
                direct = True
        if arm < 0:
            state_free(&st)
            free(pos)
            free(ties)
            return -1
        if not direct:
            best = 0
            best_val = vals[0]
            for k in range(1, K):
                if vals[k] > best_val:
                    best = k
                    best_val = vals[k]
            arm = best
        # (c) reward
        arms[t - 1] = arm
        # The n-th pull of an arm reads column n of its reward row.
        st.reward_sum[arm] += rewards[arm, st.n_pi[arm]]
        st.n_pi[arm] += 1
    state_free(&st)
    free(pos)
    free(ties)
    return 0


def episode(int kind, double c, double sigma, double delta, double alpha_bar, scale, alpha, caps,
            H, aux_vals, aux_off, rewards, rand):
    cdef const double[:] sc = np.ascontiguousarray(scale, dtype=np.float64)
    cdef const double[:] al = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef const double[:] cp = np.ascontiguousarray(caps, dtype=np.float64)
    cdef const long long[:, :] h = np.ascontiguousarray(H, dtype=np.int64)
    cdef const double[:] av = np.ascontiguousarray(aux_vals, dtype=np.float64)
    cdef const long long[:] ao = np.ascontiguousarray(aux_off, dtype=np.int64)
    cdef const double[:, :] rw = np.ascontiguousarray(rewards, dtype=np.float64)
    rnd_arr = np.ascontiguousarray(rand, dtype=np.float64)
    if rnd_arr.ndim != 2:
        rnd_arr = np.zeros((1, 1))
    cdef const double[:, :] rn = rnd_arr
    cdef long T = h.shape[1]
    cdef int K = h.shape[0]
    if kind in (TS, ATS) and (rn.shape[0] < T or rn.shape[1] < K):
        raise ValueError("normal table must be at least T x K")
    if kind in (EG, NEG, AEG) and (rn.shape[0] < T or rn.shape[1] < 2):
        raise ValueError("uniform table must be at least T x 2")
    if kind == MYOPIC and (rn.shape[0] < T or rn.shape[1] < 1):
        raise ValueError("uniform table must be at least T x 1")
    if rw.shape[0] != K or rw.shape[1] < T:
        raise ValueError("reward table shape mismatch")
    if sc.shape[0] != K or al.shape[0] != K or cp.shape[0] != K or ao.shape[0] != K:
        raise ValueError("per-arm vectors must have length K")
    out = np.empty(T, dtype=np.int64)
    cdef long long[:] arms = out
    vals_arr = np.empty(K, dtype=np.float64)
    cdef double[:] vals = vals_arr
    cdef long rc
    with nogil:
        rc = run_episode(kind, c, sigma, delta, alpha_bar, sc, al, cp, h, av, ao, rw, rn, arms, &vals[0])
    if rc == -2:
        raise MemoryError()
    if rc == -1:
        from .core import DomainError
        raise DomainError("sigma_hat must be positive once auxiliary data arrived")
    return out


cdef long run_replay(int kind, double c, double sigma, double sh, double a, double abar, double cvr0,
                     const long long[:] h, const double[:] y, const long long[:] W, const double[:] X1,
                     long long[:] arms) nogil:
    cdef long T = h.shape[0]
    cdef State st
    cdef long t, n, pos = 0
    cdef double lt, mean, count, u
    if state_init(&st, 2) < 0:
        return -2
    for t in range(T):
        n = h[t]
        if n and kind != UCB1:
            add_aux(&st, 1, y, pos, n, a)
        pos += n
        lt = log_term(<double> st.t_tilde)
        if kind == UCB1:
            reward_stats(&st, 1, &mean, &count)
            u = mean + radius(c, sigma, lt, count)
        elif kind == AUCB1:
            if known_stats(&st, 1, sigma, sh, &mean, &count) < 0:
                state_free(&st)
                return -1
            u = mean + radius(c, sigma, lt, count)
        else:
            if two_ucbs_index(&st, 1, lt, c, sigma, sh, abar, 0.0, &u) < 0:
                state_free(&st)
                return -1
        if u >= cvr0:
            arms[t] = 1
            if W[t] != 0:
                st.n_pi[1] += 1
                st.reward_sum[1] += X1[t]
                st.t_tilde += 1
        else:
            arms[t] = 0
            if W[t] != 0:
                st.t_tilde += 1
    state_free(&st)
    return 0


def replay_episode(int kind, double c, double sigma, double scale, double alpha_coef, double alpha_bar,
                   double cvr0, h, y, W, X1):
    cdef const long long[:] hv = np.ascontiguousarray(h, dtype=np.int64)
    y_arr = np.ascontiguousarray(y, dtype=np.float64)
    if y_arr.shape[0] == 0:
        y_arr = np.zeros(1)
    cdef const double[:] yv = y_arr
    cdef const long long[:] wv = np.ascontiguousarray(W, dtype=np.int64)
    cdef const double[:] xv = np.ascontiguousarray(X1, dtype=np.float64)
    cdef long T = hv.shape[0]
    if wv.shape[0] < T or xv.shape[0] < T:
        raise ValueError("click and outcome tables must cover the horizon")
    if kind not in (UCB1, AUCB1, TWO_UCBS):
        raise ValueError("replay supports UCB1, aUCB1 and TwoUCBs")
    out = np.empty(T, dtype=np.int64)
    cdef long long[:] arms = out
    cdef long rc
    with nogil:
        rc = run_replay(kind, c, sigma, scale, alpha_coef, alpha_bar, cvr0, hv, yv, wv, xv, arms)
    if rc == -2:
        raise MemoryError()
    if rc == -1:
        from .core import DomainError
        raise DomainError("sigma_hat must be positive once auxiliary data arrived")
    return out
