"""Analytic ascent directions for the fixed-pair rate objective.

Two gradients drive the optimizer: the complex gradient with respect to the
worst user's beam column, and the real 3-vector gradient with respect to one
antenna's position.  Both follow from the quotient/chain rule applied to

    f = log2(1 + chi/alpha) - log2(1 + gamma/beta)

with chi/gamma the own-signal powers and alpha/beta the interference-plus-
noise terms at the worst user and at the selected Eve position.  The complex
gradient uses the convention Re(g) = df/dRe(w), Im(g) = df/dIm(w), i.e. twice
the conjugate Wirtinger derivative, which is the steepest-ascent direction;
d|s|^2/dc pairs the derivative with the conjugate factor, 2*Re(conj(s)*ds/dc).
A central-difference oracle doubles as the correctness audit for both.
"""

from __future__ import annotations

import numpy as np

from .channel import ChannelWorkspace, PathSet, sample_path_angles, sample_path_gains
from .geometry import EveRegion, sample_virtual_eves
from .metrics import Beamformer

__all__ = [
    "grad_w",
    "grad_t",
    "grad_w_batch",
    "grad_t_batch",
    "pair_objective",
    "fd_oracle",
    "fd_grad_w",
    "fd_grad_t",
    "mc_average_grad",
    "random_instance",
    "run_fd_audit",
]

_LN2 = np.log(2.0)


def pair_objective(h_b: np.ndarray, h_e: np.ndarray, w: np.ndarray, k: int, noise: float) -> float:
    """Rate difference for one (user, Eve) pair from raw channel vectors.

    Same quantity as metrics.objective_value, in a form the finite-difference
    oracle can evaluate on unvalidated beam matrices.
    """
    pb = np.abs(np.conj(h_b) @ w) ** 2
    pe = np.abs(np.conj(h_e) @ w) ** 2
    rb = np.log2(1.0 + pb[k] / (pb.sum() - pb[k] + noise))
    re = np.log2(1.0 + pe[k] / (pe.sum() - pe[k] + noise))
    return float(rb - re)


def grad_w_batch(h_b: np.ndarray, h_e: np.ndarray, w: np.ndarray, k: int, noise: float) -> np.ndarray:
    """Beam-column gradient for a batch of gain draws.

    h_b, h_e: (S, N) channel vectors of the worst user / selected Eve per
    draw; w: (N, K).  Returns (S, N) complex gradients.
    """
    y_b = np.conj(h_b) @ w  # (S, K)
    y_e = np.conj(h_e) @ w
    den_b = np.sum(np.abs(y_b) ** 2, axis=1) + noise  # alpha + chi + noise... = full receive power + noise
    den_e = np.sum(np.abs(y_e) ** 2, axis=1) + noise
    num_b = 2.0 * h_b * y_b[:, [k]]
    num_e = 2.0 * h_e * y_e[:, [k]]
    return (num_b / den_b[:, None] - num_e / den_e[:, None]) / _LN2


def grad_w(ch, W: Beamformer, k: int, m: int, noise: float) -> np.ndarray:
    """Complex gradient of the fixed-(k, m) objective in the k-th beam column."""
    return grad_w_batch(ch.h_bob[k][None], ch.h_eve[m][None], W.w, k, noise)[0]


def grad_t_batch(
    h_b: np.ndarray,
    h_e: np.ndarray,
    jac_b: np.ndarray,
    jac_e: np.ndarray,
    w: np.ndarray,
    n: int,
    k: int,
    noise: float,
) -> np.ndarray:
    """Position gradient of antenna n for a batch of gain draws.

    jac_b, jac_e: (S, 3) derivatives of the conjugated n-th channel entry with
    respect to (x_n, y_n, z_n).  Returns (S, 3) real gradients.
    """
    y_b = np.conj(h_b) @ w  # (S, K)
    y_e = np.conj(h_e) @ w
    pow_b = np.abs(y_b) ** 2
    pow_e = np.abs(y_e) ** 2
    chi = pow_b[:, k]
    alpha = pow_b.sum(axis=1) - chi + noise
    gam = pow_e[:, k]
    beta = pow_e.sum(axis=1) - gam + noise

    # d|y_j|^2/dc = 2 Re(conj(y_j) * w[n,j] * jac[c]); only antenna n moves.
    coef_b = np.conj(y_b) * w[n][None, :]  # (S, K)
    coef_e = np.conj(y_e) * w[n][None, :]
    dchi = 2.0 * np.real(coef_b[:, [k]] * jac_b)
    dalpha = 2.0 * np.real((coef_b.sum(axis=1) - coef_b[:, k])[:, None] * jac_b)
    dgam = 2.0 * np.real(coef_e[:, [k]] * jac_e)
    dbeta = 2.0 * np.real((coef_e.sum(axis=1) - coef_e[:, k])[:, None] * jac_e)

    x_w = (alpha / (alpha + chi))[:, None]
    y_w = (beta / (beta + gam))[:, None]
    quot_b = (dchi * alpha[:, None] - dalpha * chi[:, None]) / (alpha**2)[:, None]
    quot_e = (dgam * beta[:, None] - dbeta * gam[:, None]) / (beta**2)[:, None]
    return (x_w * quot_b - y_w * quot_e) / _LN2


def grad_t(ws: ChannelWorkspace, W: Beamformer, n: int, k: int, m: int, noise: float) -> np.ndarray:
    """Real (d/dx_n, d/dy_n, d/dz_n) gradient at the workspace's current state."""
    return grad_t_batch(
        ws.h_bob[k][None],
        ws.h_eve[m][None],
        ws.jac_bob(k, n)[None],
        ws.jac_eve(m, n)[None],
        W.w,
        n,
        k,
        noise,
    )[0]


def fd_oracle(f, x0: np.ndarray, step: float) -> np.ndarray:
    """Central-difference gradient (f(x+h e_i) - f(x-h e_i)) / 2h per coordinate."""
    if not step > 0:
        raise ValueError(f"need step > 0, got {step}")
    x0 = np.asarray(x0, dtype=float)
    g = np.zeros_like(x0)
    for i in range(x0.size):
        e = np.zeros_like(x0)
        e.flat[i] = step
        fp = f(x0 + e)
        fm = f(x0 - e)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"finite-difference oracle hit a non-finite value at coordinate {i}")
        g.flat[i] = (fp - fm) / (2.0 * step)
    return g


def fd_grad_w(ch, W: Beamformer, k: int, m: int, noise: float, step: float = 1e-6) -> np.ndarray:
    """Numeric counterpart of grad_w via central differences on re/im parts."""
    h_b, h_e = ch.h_bob[k], ch.h_eve[m]
    n = W.w.shape[0]

    def f(x):
        w = W.w.copy()
        w[:, k] = x[:n] + 1j * x[n:]
        return pair_objective(h_b, h_e, w, k, noise)

    x0 = np.concatenate([W.w[:, k].real, W.w[:, k].imag])
    g = fd_oracle(f, x0, step)
    return g[:n] + 1j * g[n:]


def fd_grad_t(
    ws: ChannelWorkspace, W: Beamformer, n: int, k: int, m: int, noise: float, step: float = 1e-9
) -> np.ndarray:
    """Numeric counterpart of grad_t; restores the workspace afterwards."""
    t0 = ws.positions[n].copy()

    def f(t):
        ws.move_antenna(n, t)
        return pair_objective(ws.h_bob[k], ws.h_eve[m], W.w, k, noise)

    try:
        return fd_oracle(f, t0, step)
    finally:
        ws.move_antenna(n, t0)


def mc_average_grad(grad_fn, sampler, count: int):
    """Arithmetic mean of ``count`` gradients, one per sampler draw.

    Summation is sequential in draw order, so a seeded sampler gives a
    bit-reproducible average.
    """
    if count < 1:
        raise ValueError(f"need count >= 1, got {count}")
    total = np.array(grad_fn(sampler()))
    for _ in range(count - 1):
        total = total + grad_fn(sampler())
    return total / count


def random_instance(rng: np.random.Generator, num_antennas=9, num_bobs=5, num_eves=3, num_paths=3):
    """One random (workspace, beamformer) problem instance for gradient audits."""
    lam = 0.0107
    positions = rng.uniform(0.0, 4 * lam, size=(num_antennas, 3))
    region = EveRegion(d=50.0, r=2.0, h=10.0)
    eve_positions = sample_virtual_eves(region, num_eves, rng)
    bob_paths = []
    for _ in range(num_bobs):
        th, ph = sample_path_angles(num_paths, rng, "bob")
        sig = sample_path_gains(num_paths, 30.0, rng.uniform(25.0, 35.0), 2.0, rng)
        bob_paths.append(PathSet.from_angles(th, ph, sig))
    th, ph = sample_path_angles(num_paths, rng, "eve")
    sig = sample_path_gains(num_paths, 30.0, region.d, 2.0, rng)
    eve_paths = PathSet.from_angles(th, ph, sig)
    ws = ChannelWorkspace(positions, tuple(bob_paths), eve_paths, eve_positions, lam)
    p_max = 0.01
    w = rng.standard_normal((num_antennas, num_bobs)) + 1j * rng.standard_normal(
        (num_antennas, num_bobs)
    )
    w *= np.sqrt(p_max / np.sum(np.abs(w) ** 2))
    return ws, Beamformer(w, p_max)


def run_fd_audit(
    instances: int = 100,
    seed: int = 0,
    noise: float = 0.0005,
    step_w: float = 1e-6,
    step_t: float = 1e-9,
) -> dict:
    """Compare analytic gradients against the FD oracle on random instances.

    Returns the worst relative L2 errors observed, keyed 'max_err_w' and
    'max_err_t'.
    """
    rng = np.random.default_rng(seed)
    max_w = 0.0
    max_t = 0.0
    for _ in range(instances):
        ws, W = random_instance(rng)
        k = int(rng.integers(ws.h_bob.shape[0]))
        m = int(rng.integers(ws.h_eve.shape[0]))
        n = int(rng.integers(ws.num_antennas))
        ch = ws
        g_an = grad_w(ch, W, k, m, noise)
        g_fd = fd_grad_w(ch, W, k, m, noise, step_w)
        stack = lambda g: np.concatenate([g.real, g.imag])
        err_w = np.linalg.norm(stack(g_an - g_fd)) / np.linalg.norm(stack(g_fd))
        t_an = grad_t(ws, W, n, k, m, noise)
        t_fd = fd_grad_t(ws, W, n, k, m, noise, step_t)
        err_t = np.linalg.norm(t_an - t_fd) / np.linalg.norm(t_fd)
        max_w = max(max_w, float(err_w))
        max_t = max(max_t, float(err_t))
    return {"instances": instances, "seed": seed, "max_err_w": max_w, "max_err_t": max_t}
