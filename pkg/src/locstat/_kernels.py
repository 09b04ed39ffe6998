"""Compiled inner loops for the single-site chains.

Each loop consumes pre-drawn site indices and uniforms, so the random stream
is owned by the caller. Linear observables ``obs[k] = <w_k, x>`` are kept up
to date on every accepted move and copied to ``rec`` every ``stride``
updates (counted globally from ``t0``).
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def flip_probability(z):
    """``1 / (1 + exp(z))`` without overflow."""
    if z > 0.0:
        e = math.exp(-z)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(z))


@njit(cache=True)
def ising_local_field(i, x, field, r, coefs, U):
    m = field[i]
    for k in range(coefs.shape[0]):
        u = U[k, i]
        m += coefs[k] * u * (r[k] - u * x[i])
    return m


@njit(cache=True)
def ising_run(x, field, r, indptr, indices, data, dense, coefs, U, h,
              sites, unif, obs_w, obs, stride, t0, rec, rec_pos):
    has_dense = dense.shape[0] > 0
    n_obs = obs.shape[0]
    flips = 0
    pos = rec_pos[0]
    for t in range(sites.shape[0]):
        i = sites[t]
        m = ising_local_field(i, x, field, r, coefs, U)
        if unif[t] < flip_probability(2.0 * x[i] * (m + h[i])):
            dx = -2.0 * x[i]
            x[i] = -x[i]
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                if j != i:
                    field[j] += data[p] * dx
            if has_dense:
                row = dense[i]
                for j in range(x.shape[0]):
                    if j != i:
                        field[j] += row[j] * dx
            for k in range(coefs.shape[0]):
                r[k] += U[k, i] * dx
            for k in range(n_obs):
                obs[k] += obs_w[k, i] * dx
            flips += 1
        if (t0 + t + 1) % stride == 0:
            for k in range(n_obs):
                rec[pos, k] = obs[k]
            pos += 1
    rec_pos[0] = pos
    return flips


@njit(cache=True)
def hardcore_run(occ, blocked, indptr, indices, sites, unif, obs_w, obs,
                 stride, t0, rec, rec_pos):
    n_obs = obs.shape[0]
    moves = 0
    pos = rec_pos[0]
    for t in range(sites.shape[0]):
        v = sites[t]
        if blocked[v] == 0:
            new = 1 if unif[t] < 0.5 else 0
            if new != occ[v]:
                occ[v] = new
                delta = 1 if new == 1 else -1
                for p in range(indptr[v], indptr[v + 1]):
                    blocked[indices[p]] += delta
                for k in range(n_obs):
                    obs[k] += obs_w[k, v] * delta
                moves += 1
        if (t0 + t + 1) % stride == 0:
            for k in range(n_obs):
                rec[pos, k] = obs[k]
            pos += 1
    rec_pos[0] = pos
    return moves


def empty_recorder(n_obs):
    return np.zeros((0, n_obs)), np.zeros(1, dtype=np.int64)
