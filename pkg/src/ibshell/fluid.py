"""Periodic incompressible Navier-Stokes step on a uniform N^3 lattice.

One step treats advection and the body force explicitly (upwind differencing
for advection) and viscosity and pressure implicitly. The implicit system is
a constant-coefficient linear difference system, solved exactly per Fourier
mode:

    a(k) u_hat + g_hat(k) p_hat = r_hat,     g_hat(k) . u_hat = 0

with a(k) = rho/dt + (4 mu/h^2) sum_i sin^2(pi k_i / N) and
g_hat_i(k) = (i/h) sin(2 pi k_i / N), the symbols of the backward/forward
viscous product and the centered gradient. Modes where every g_hat component
vanishes (k_i in {0, N/2}) carry no discrete gradient; the pressure is set to
zero there and u_hat = r_hat / a(k).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft

_KINDS = ("D+", "D-", "D0")


@dataclass(frozen=True)
class FluidParams:
    """Lattice and fluid constants.

    N    : grid points per side (power of two)
    a    : box side (cm)
    rho  : density (g cm^-3)
    mu_f : dynamic viscosity (g cm^-1 s^-1)
    dt   : time step (s)
    """

    N: int
    a: float
    rho: float
    mu_f: float
    dt: float

    def __post_init__(self):
        if self.N < 2 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two, got {self.N}")
        for name in ("a", "rho", "mu_f", "dt"):
            if not (getattr(self, name) > 0.0):
                raise ValueError(f"{name} must be positive")

    @property
    def h(self) -> float:
        return self.a / self.N


@dataclass
class FluidState:
    """Velocity (3, N, N, N) and pressure (N, N, N) on the periodic lattice."""

    u: np.ndarray
    p: np.ndarray

    @classmethod
    def zeros(cls, N: int) -> "FluidState":
        return cls(u=np.zeros((3, N, N, N)), p=np.zeros((N, N, N)))


def periodic_diff(field, kind: str, axis: int, h: float):
    """Wraparound difference D+, D- or D0 along spatial axis 0, 1 or 2.

    `field` may carry leading component axes; the last three axes are the
    lattice.
    """
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}, got {kind!r}")
    f = np.asarray(field, dtype=float)
    ax = f.ndim - 3 + axis
    if kind == "D+":
        return (np.roll(f, -1, axis=ax) - f) / h
    if kind == "D-":
        return (f - np.roll(f, 1, axis=ax)) / h
    return (np.roll(f, -1, axis=ax) - np.roll(f, 1, axis=ax)) / (2.0 * h)


def upwind_advection(u, h: float):
    """sum_k u_k D_k^{+-} u with the branch chosen per node by sign(u_k).

    Backward differencing where u_k >= 0 (the tie at exactly zero takes the
    backward branch; the product vanishes there anyway), forward where
    u_k < 0.
    """
    u = np.asarray(u, dtype=float)
    adv = np.zeros_like(u)
    for k in range(3):
        ax = 1 + k
        dm = (u - np.roll(u, 1, axis=ax)) / h
        dp = (np.roll(u, -1, axis=ax) - u) / h
        adv += u[k] * np.where(u[k] >= 0.0, dm, dp)
    return adv


def divergence(u, h: float):
    """Centered divergence D0 . u."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape[1:])
    for k in range(3):
        out += (np.roll(u[k], -1, axis=k) - np.roll(u[k], 1, axis=k)) / (2.0 * h)
    return out


class FluidSolver:
    """Precomputed Fourier symbols for repeated steps at fixed parameters."""

    def __init__(self, params: FluidParams, workers: int | None = None):
        self.params = params
        self.workers = workers
        N, h = params.N, params.h
        k = np.arange(N)
        s = np.sin(2.0 * np.pi * k / N)
        s[0] = 0.0
        if N % 2 == 0:
            s[N // 2] = 0.0  # exact Nyquist zero of the centered-gradient symbol
        sh = np.sin(np.pi * k / N) ** 2
        kr = np.arange(N // 2 + 1)
        sr = np.sin(2.0 * np.pi * kr / N)
        sr[0] = 0.0
        sr[-1] = 0.0
        shr = np.sin(np.pi * kr / N) ** 2
        # broadcastable symbol arrays over the rfft layout (N, N, N//2+1)
        self._s = (s[:, None, None], s[None, :, None], sr[None, None, :])
        self.a_k = params.rho / params.dt + (4.0 * params.mu_f / h**2) * (
            sh[:, None, None] + sh[None, :, None] + shr[None, None, :]
        )
        self.gsq = (self._s[0] ** 2 + self._s[1] ** 2 + self._s[2] ** 2) / h**2
        self.zero_g = self.gsq == 0.0
        self._gsq_safe = np.where(self.zero_g, 1.0, self.gsq)

    def step(self, u, F, include_advection: bool = True):
        """Advance one step from velocity u under body force F.

        Returns (u_new, p_new) satisfying the implicit system exactly (to
        roundoff) and discretely divergence-free.
        """
        prm = self.params
        h = prm.h
        r = prm.rho / prm.dt * u
        if include_advection:
            r = r - prm.rho * upwind_advection(u, h)
        if F is not None:
            r = r + F
        rhat = scipy.fft.rfftn(r, axes=(1, 2, 3), workers=self.workers)
        # p_hat = (conj(g_hat) . r_hat) / |g_hat|^2, zero on the null modes
        num = (-1j / h) * (
            self._s[0] * rhat[0] + self._s[1] * rhat[1] + self._s[2] * rhat[2]
        )
        phat = np.where(self.zero_g, 0.0, num / self._gsq_safe)
        uhat = np.empty_like(rhat)
        for i in range(3):
            uhat[i] = (rhat[i] - (1j / h) * self._s[i] * phat) / self.a_k
        shape = (prm.N,) * 3
        u_new = scipy.fft.irfftn(uhat, s=shape, axes=(1, 2, 3), workers=self.workers)
        p_new = scipy.fft.irfftn(phat, s=shape, workers=self.workers)
        return u_new, p_new


def fluid_step(
    state: FluidState,
    F,
    params: FluidParams,
    solver: FluidSolver | None = None,
    include_advection: bool = True,
) -> FluidState:
    """One-shot step; builds a throwaway solver unless one is supplied.

    Warns when the incoming velocity is not discretely divergence-free.
    """
    u = np.asarray(state.u, dtype=float)
    if not np.isfinite(u).all() or (F is not None and not np.isfinite(F).all()):
        raise ValueError("non-finite input to fluid_step")
    div = np.abs(divergence(u, params.h)).max()
    if div > 1e-8 * (1.0 + np.abs(u).max() / params.h):
        warnings.warn(
            f"incoming velocity is not divergence-free: max |D0.u| = {div:.3e}",
            stacklevel=2,
        )
    solver = solver or FluidSolver(params)
    u_new, p_new = solver.step(u, F, include_advection=include_advection)
    return FluidState(u=u_new, p=p_new)
