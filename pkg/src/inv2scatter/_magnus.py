"""Sixth-order Magnus propagation for ``y'' = w(x) y`` with real ``w``.

Each step uses the three-point Gauss-Legendre Magnus scheme of order six
(Blanes, Casas and Ros) for ``Y' = A Y`` with ``A = [[0, 1], [w, 0]]``.  The
step exponentials are 2x2 and traceless, so ``exp(O) = cosh(s) I +
sinh(s)/s O`` with ``s^2 = -det O``.  The scheme is exact for constant ``w``,
so steps only have to follow the local wavelength and the variation of
``w``.  All step matrices are built at once with numpy; products are formed
by a balanced tree with a running log scale, which keeps exponentially
growing solutions representable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_R15 = math.sqrt(15.0) / 10.0
_CHUNK = 4096


def _comm(a, b):
    return a @ b - b @ a


def step_matrices(wfun, nodes: np.ndarray) -> np.ndarray:
    """Propagators ``M_j`` with ``Y(nodes[j+1]) = M_j Y(nodes[j])``."""
    a = nodes[:-1]
    h = np.diff(nodes)
    n = h.size
    ws = [wfun(a + c * h) for c in (0.5 - _R15, 0.5, 0.5 + _R15)]

    def amat(w):
        m = np.zeros((n, 2, 2))
        m[:, 0, 1] = 1.0
        m[:, 1, 0] = w
        return m

    A1, A2, A3 = (amat(w) for w in ws)
    H = h[:, None, None]
    a1 = H * A2
    a2 = (math.sqrt(15.0) / 3.0) * H * (A3 - A1)
    a3 = (10.0 / 3.0) * H * (A3 - 2.0 * A2 + A1)
    c1 = _comm(a1, a2)
    c2 = -_comm(a1, 2.0 * a3 + c1) / 60.0
    om = a1 + a3 / 12.0 + _comm(-20.0 * a1 - a3 + c1, a2 + c2) / 240.0
    al, be, ga = om[:, 0, 0], om[:, 0, 1], om[:, 1, 0]
    s2 = al * al + be * ga
    pos = s2 >= 0
    sq = np.sqrt(np.abs(s2))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ch = np.where(pos, np.cosh(sq), np.cos(sq))
        sh = np.where(pos, np.sinh(sq), np.sin(sq)) / sq
    small = sq < 1e-6
    sh = np.where(small, 1.0 + s2 / 6.0, sh)
    M = np.empty((n, 2, 2))
    M[:, 0, 0] = ch + sh * al
    M[:, 0, 1] = sh * be
    M[:, 1, 0] = sh * ga
    M[:, 1, 1] = ch - sh * al
    return M


def tree_product(M: np.ndarray, logs: np.ndarray | None = None):
    """``(P, log_scale)`` with ``M[-1] @ ... @ M[0] = exp(log_scale) P``.

    ``M`` may carry leading batch axes before the step axis (axis ``-3``).
    """
    if logs is None:
        logs = np.zeros(M.shape[:-2])
    while M.shape[-3] > 1:
        if M.shape[-3] % 2:
            pad = np.broadcast_to(np.eye(2), M.shape[:-3] + (1, 2, 2))
            M = np.concatenate([M, pad], axis=-3)
            logs = np.concatenate([logs, np.zeros(logs.shape[:-1] + (1,))], axis=-1)
        P = M[..., 1::2, :, :] @ M[..., 0::2, :, :]
        L = logs[..., 1::2] + logs[..., 0::2]
        sc = np.abs(P).max(axis=(-2, -1))
        P = P / sc[..., None, None]
        M, logs = P, L + np.log(sc)
    return M[..., 0, :, :], logs[..., 0]


@dataclass
class Propagation:
    """State vectors ``(y, y')`` at chosen nodes, stored as ``exp(log) * v``.

    ``v`` is complex with ``max(|v|) = 1``.
    """

    nodes: np.ndarray
    log_scale: np.ndarray
    vec: np.ndarray


def propagate(wfun, nodes: np.ndarray, y0: np.ndarray, keep=None) -> Propagation:
    """Carry ``y0`` (complex 2-vector at ``nodes[0]``) along ``nodes``.

    ``keep`` lists node indices at which the state is returned; the last
    node is always included.
    """
    y0 = np.asarray(y0, dtype=complex)
    nstep = nodes.size - 1
    keep = np.unique(np.append(np.asarray([] if keep is None else keep, dtype=int), nstep))
    nchunk = max(1, math.ceil(nstep / _CHUNK))
    bounds = np.minimum(np.arange(nchunk + 1) * _CHUNK, nstep)
    # state at chunk starts
    s0 = float(np.abs(y0).max())
    v = y0 / s0
    lg = math.log(s0)
    starts_v = [v]
    starts_l = [lg]
    for c in range(nchunk):
        M = step_matrices(wfun, nodes[bounds[c]:bounds[c + 1] + 1])
        P, L = tree_product(M)
        v = P @ v
        s = float(np.abs(v).max())
        v = v / s
        lg += L + math.log(s)
        starts_v.append(v)
        starts_l.append(lg)
    out_v = np.empty((keep.size, 2), dtype=complex)
    out_l = np.empty(keep.size)
    chunk_of = np.minimum(keep // _CHUNK, nchunk)
    for c in np.unique(chunk_of):
        sel = np.nonzero(chunk_of == c)[0]
        offs = keep[sel] - bounds[c] if c < nchunk else np.zeros(sel.size, dtype=int)
        cv = np.repeat(starts_v[c][None, :], sel.size, axis=0)
        cl = np.full(sel.size, starts_l[c])
        if offs.max() > 0:
            M = step_matrices(wfun, nodes[bounds[c]:bounds[c] + offs.max() + 1])
            for j in range(offs.max()):
                act = offs > j
                nv = cv[act] @ M[j].T
                s = np.abs(nv).max(axis=1)
                cv[act] = nv / s[:, None]
                cl[act] += np.log(s)
        out_v[sel] = cv
        out_l[sel] = cl
    return Propagation(nodes=nodes[keep], log_scale=out_l, vec=out_v)


def phase_grid(kappa, a: float, b: float, c: float = 0.25, cg: float = 0.1,
               x_scale: float = 1.0) -> np.ndarray:
    """Nodes from ``a`` to ``b`` with density ``kappa(x)/c + 1/(cg (|x| + x_scale))``.

    ``kappa`` is the local wavenumber (or growth rate); the second term keeps
    a geometric resolution of the potential's own variation.
    """
    lo, hi = min(a, b), max(a, b)
    parts = [np.linspace(max(lo, -50.0), min(hi, 50.0), 100001)] if lo < 50 and hi > -50 else []
    if hi > 50:
        parts.append(np.geomspace(max(50.0, lo), hi, 20001))
    if lo < -50:
        parts.append(-np.geomspace(max(50.0, -hi), -lo, 20001)[::-1])
    aux = np.unique(np.concatenate(parts))
    dens = kappa(aux) / c + 1.0 / (cg * (np.abs(aux) + x_scale))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(aux))])
    n = max(int(math.ceil(cum[-1])), 8)
    nodes = np.interp(np.linspace(0.0, cum[-1], n + 1), cum, aux)
    nodes[0], nodes[-1] = lo, hi
    if a > b:
        nodes = nodes[::-1].copy()
    return nodes
