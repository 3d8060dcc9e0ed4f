# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled per-slot loop of the channel/sampling simulator.

Semantics must match fallback.py exactly; see the note there about stream
consumption and update order.
"""


def run_slots(int x0,
              const double[::1] u_src, const double[::1] u_chan, u_mix_obj,
              const double[:, ::1] cum_rows, int mode,
              grid_a_obj, grid_b_obj, double mu, script_obj,
              const double[:, :, ::1] cost_base, const long long[:, :, ::1] map_grid,
              double q, int tau1_max, int tau2_max, long long warmup,
              bint record,
              long long[::1] tr_true, long long[::1] tr_i,
              long long[::1] tr_tau1, long long[::1] tr_tau2,
              long long[::1] tr_action, long long[::1] tr_success):
    cdef Py_ssize_t horizon = u_src.shape[0] - 1
    cdef const double[::1] u_mix = u_mix_obj if u_mix_obj is not None else u_src
    cdef const signed char[:, :, ::1] grid_a = grid_a_obj if grid_a_obj is not None else None
    cdef const signed char[:, :, ::1] grid_b = grid_b_obj if grid_b_obj is not None else None
    cdef const signed char[::1] script = script_obj if script_obj is not None else None

    cdef int xp = x0, xt, i = x0, j = x0, u, a, b
    cdef int tau1 = 0, tau2 = 1
    cdef bint active, success
    cdef double aod = 0.0, uu
    cdef long long req = 0, fresh = 0, mape = 0
    cdef Py_ssize_t t

    for t in range(1, horizon + 1):
        uu = u_src[t]
        xt = 0
        while uu >= cum_rows[xp, xt]:
            xt += 1

        if mode == 0:
            u = grid_a[tau1, tau2 - 1, i]
        elif mode == 1:
            a = grid_a[tau1, tau2 - 1, i]
            b = grid_b[tau1, tau2 - 1, i]
            if a == b:
                u = a
            else:
                u = a if u_mix[t] < mu else b
        elif mode == 2:
            u = script[t]
        else:
            u = 1 if xt != xp else 0

        if t > warmup:
            aod += (1.0 - q * u) * cost_base[tau1, tau2 - 1, i]
            req += u
            if i != xt:
                fresh += 1
            if map_grid[tau1, tau2 - 1, i] != xt:
                mape += 1

        active = u == 1 or tau1 > 0
        success = active and u_chan[t] < q
        if record:
            tr_true[t] = xt
            tr_i[t] = i
            tr_tau1[t] = tau1
            tr_tau2[t] = tau2
            tr_action[t] = u
            tr_success[t] = 1 if success else 0

        if u == 1:
            if success:
                tau1 = 0
                i = xt
            else:
                tau1 = tau1 + tau2
                if tau1 > tau1_max:
                    tau1 = tau1_max
            j = xt
            tau2 = 1
        else:
            if success:
                tau1 = 0
                i = j
            tau2 += 1
            if tau2 > tau2_max:
                tau2 = tau2_max
        xp = xt

    return aod, req, fresh, mape
