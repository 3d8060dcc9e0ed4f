"""Pure-Python twin of the compiled episode kernel.

Must stay line-for-line equivalent to _episode.pyx: both consume u_src[t] and
u_chan[t] (and u_mix[t] in mix mode) indexed by slot, and apply updates in the
same order, so a given seed produces bitwise-identical metrics on either
backend.
"""


def run_slots(x0, u_src, u_chan, u_mix, cum_rows, mode,
              grid_a, grid_b, mu, script,
              cost_base, map_grid, q, tau1_max, tau2_max, warmup,
              record, tr_true, tr_i, tr_tau1, tr_tau2, tr_action, tr_success):
    horizon = len(u_src) - 1
    usrc = u_src.tolist()
    uchan = u_chan.tolist()
    umix = u_mix.tolist() if u_mix is not None else None
    cum = cum_rows.tolist()
    cost = cost_base.tolist()
    maps = map_grid.tolist()
    ga = grid_a.tolist() if grid_a is not None else None
    gb = grid_b.tolist() if grid_b is not None else None
    scr = script.tolist() if script is not None else None

    xp = x0
    tau1, tau2 = 0, 1
    i = j = x0
    aod = 0.0
    req = fresh = mape = 0

    for t in range(1, horizon + 1):
        uu = usrc[t]
        row = cum[xp]
        xt = 0
        while uu >= row[xt]:
            xt += 1

        if mode == 0:
            u = ga[tau1][tau2 - 1][i]
        elif mode == 1:
            a = ga[tau1][tau2 - 1][i]
            b = gb[tau1][tau2 - 1][i]
            if a == b:
                u = a
            else:
                u = a if umix[t] < mu else b
        elif mode == 2:
            u = scr[t]
        else:
            u = 1 if xt != xp else 0

        if t > warmup:
            aod += (1.0 - q * u) * cost[tau1][tau2 - 1][i]
            req += u
            if i != xt:
                fresh += 1
            if maps[tau1][tau2 - 1][i] != xt:
                mape += 1

        active = u == 1 or tau1 > 0
        success = active and uchan[t] < q
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
