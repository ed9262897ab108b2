"""Inner circulation loop of the cavity simulator.

The loop is written once as a plain Python function and compiled with
numba for production runs; the uncompiled function doubles as a slow
reference backend.  Both backends execute the identical statements with
fastmath disabled, so their outputs agree bit for bit.

State layout
    n2[ns]          excited-atom density per slice
    reg_r[ns]       rightward pipeline registers (slice outputs)
    reg_l[ns]       leftward pipeline registers
    ring_r[2 n_R]   right-arm delay ring, slot n % size holds phi2[n]
    ring_l[2 n_L]   left-arm delay ring, slot n % size holds phi4[n]

Per global step n the medium outputs computed during step n-1 are
published as phi2[n], phi4[n], the arm delays and static losses produce
phi1[n] and phi3[n], and the slice cascade then advances the medium by
one transit using those held inputs.  Publishing before the cascade gives
the medium exactly one step of latency per direction, so an impulse
recirculates with period 2 (n_L + n_R + 1).

Event inputs arrive as step-indexed segment arrays (piecewise constant
for pump and modulator drive, piecewise linear for the blocking factor),
so arbitrarily long runs need no per-step event storage.

Status codes: 0 ok, 1 rate-equation overstep (N2 would go negative),
2 non-finite photon density.
"""
from __future__ import annotations

import numpy as np
from numba import njit

N_CHANNELS = 12
(CH_P_OUT, CH_P_CIRC, CH_E_STORED, CH_GAIN_IN, CH_GAIN_OUT, CH_N2_MEAN,
 CH_PHI1, CH_PHI2, CH_PHI3, CH_PHI4, CH_S_CTL, CH_G_OBJ) = range(N_CHANNELS)

CHANNEL_NAMES = ("p_out", "p_circ", "e_stored", "gain_in", "gain_out",
                 "n2_mean", "phi1", "phi2", "phi3", "phi4", "s_ctl", "g_obj")
CHANNEL_UNITS = ("W", "W", "J", "m^-3", "m^-3", "m^-3",
                 "m^-3", "m^-3", "m^-3", "m^-3", "", "")


def circulation_loop(n_steps, start_step, n2, reg_r, reg_l, ring_r, ring_l,
                     prev_in, n_l, n_r, sig_ls, k_seed, k_decay, kl, kr,
                     k_out, p2_factor, e_ring, e_reg,
                     pump_edges, pump_kpump,
                     s_edges, s_vals,
                     obj_edges, obj_v0, obj_slope,
                     rec_start, rec_end, rec_dec, rec_mask, rec_offset,
                     out):
    ns = n2.shape[0]
    size_r = ring_r.shape[0]
    size_l = ring_l.shape[0]
    inl_used = np.empty(ns)
    pump_ptr = 0
    s_ptr = 0
    obj_ptr = 0
    win_ptr = 0
    n_pump = pump_kpump.shape[0]
    n_s = s_vals.shape[0]
    n_obj = obj_v0.shape[0]
    n_win = rec_start.shape[0]
    for m in range(n_steps):
        n = start_step + m

        while pump_ptr < n_pump - 1 and n >= pump_edges[pump_ptr + 1]:
            pump_ptr += 1
        k_pump = pump_kpump[pump_ptr]

        j = n - n_l
        if j < 0:
            s_val = 1.0
        else:
            while s_ptr < n_s - 1 and j >= s_edges[s_ptr + 1]:
                s_ptr += 1
            s_val = s_vals[s_ptr]

        while obj_ptr < n_obj - 1 and n >= obj_edges[obj_ptr + 1]:
            obj_ptr += 1
        g_obj_val = obj_v0[obj_ptr] + obj_slope[obj_ptr] \
            * (n - obj_edges[obj_ptr])

        # publish the medium outputs of the previous step
        phi2_n = reg_r[ns - 1]
        phi4_n = reg_l[0]
        # ring reads must precede this step's writes
        phi4_past = ring_l[n % size_l]
        phi2_past2 = ring_r[n % size_r]
        phi2_past_r = ring_r[(n - n_r) % size_r]
        ring_r[n % size_r] = phi2_n
        ring_l[n % size_l] = phi4_n

        phi1_n = kl * s_val * phi4_past
        phi3_n = kr * g_obj_val * phi2_past2

        while win_ptr < n_win and n >= rec_end[win_ptr]:
            win_ptr += 1
        if win_ptr < n_win and n >= rec_start[win_ptr] \
                and (n - rec_start[win_ptr]) % rec_dec[win_ptr] == 0:
            row = rec_offset[win_ptr] \
                + (n - rec_start[win_ptr]) // rec_dec[win_ptr]
            mask = rec_mask[win_ptr]
            if mask & (1 << CH_P_OUT):
                out[row, CH_P_OUT] = k_out * phi2_past_r
            if mask & (1 << CH_P_CIRC):
                out[row, CH_P_CIRC] = p2_factor * (phi2_n + phi4_n)
            if mask & (1 << CH_E_STORED):
                ring_sum = 0.0
                for i in range(size_r):
                    ring_sum += ring_r[i]
                for i in range(size_l):
                    ring_sum += ring_l[i]
                reg_sum = 0.0
                for i in range(ns):
                    reg_sum += reg_r[i] + reg_l[i]
                out[row, CH_E_STORED] = e_ring * ring_sum + e_reg * reg_sum
            if mask & (1 << CH_GAIN_IN):
                out[row, CH_GAIN_IN] = prev_in
            if mask & (1 << CH_GAIN_OUT):
                out[row, CH_GAIN_OUT] = phi2_n + phi4_n
            if mask & (1 << CH_N2_MEAN):
                acc = 0.0
                for i in range(ns):
                    acc += n2[i]
                out[row, CH_N2_MEAN] = acc / ns
            if mask & (1 << CH_PHI1):
                out[row, CH_PHI1] = phi1_n
            if mask & (1 << CH_PHI2):
                out[row, CH_PHI2] = phi2_n
            if mask & (1 << CH_PHI3):
                out[row, CH_PHI3] = phi3_n
            if mask & (1 << CH_PHI4):
                out[row, CH_PHI4] = phi4_n
            if mask & (1 << CH_S_CTL):
                out[row, CH_S_CTL] = s_val
            if mask & (1 << CH_G_OBJ):
                out[row, CH_G_OBJ] = g_obj_val

        # slice cascade: ns sub-steps with the face inputs held
        for _sub in range(ns):
            for i in range(ns):
                if i < ns - 1:
                    inl = reg_l[i + 1]
                else:
                    inl = phi3_n
                inl_used[i] = inl
                reg_l[i] = inl + inl * (n2[i] * sig_ls) + n2[i] * k_seed
            for i in range(ns - 1, -1, -1):
                if i > 0:
                    inr = reg_r[i - 1]
                else:
                    inr = phi1_n
                g = n2[i] * sig_ls
                reg_r[i] = inr + inr * g + n2[i] * k_seed
                n2_next = n2[i] - g * (inr + inl_used[i]) \
                    - n2[i] * k_decay + k_pump
                if n2_next < 0.0:
                    return 1, n, i
                n2[i] = n2_next

        if not (np.isfinite(reg_r[ns - 1]) and np.isfinite(reg_l[0])):
            return 2, n, -1
        prev_in = phi1_n + phi3_n

    return 0, start_step + n_steps, -1


circulation_loop_jit = njit(cache=True, nogil=True,
                            fastmath=False)(circulation_loop)
