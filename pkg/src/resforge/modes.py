"""Waveguide eigenmodes.

Two solvers live here: the analytic three-layer slab (used as an oracle and
for effective-index collapses) and a semivectorial finite-difference solver
for arbitrary 2D cross-sections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import bisect

from .errors import (
    ConvergenceError,
    CutoffError,
    GeometryError,
    ModeSwapError,
    NoGuidedModeError,
)
from .geometry.raster import PermittivityGrid

TE = "TE"
TM = "TM"


def _slab_terms(n, n_core, n_clad_top, n_clad_bottom, polarization):
    kappa = math.sqrt(max(n_core ** 2 - n ** 2, 0.0))
    g_top = math.sqrt(max(n ** 2 - n_clad_top ** 2, 0.0))
    g_bot = math.sqrt(max(n ** 2 - n_clad_bottom ** 2, 0.0))
    if polarization == TE:
        p_top = p_bot = 1.0
    else:
        p_top = (n_core / n_clad_top) ** 2
        p_bot = (n_core / n_clad_bottom) ** 2
    return kappa, g_top, g_bot, p_top, p_bot


def _slab_residual(n, n_core, n_clad_top, n_clad_bottom, thickness, wavelength, polarization, order):
    k0 = 2 * math.pi / wavelength
    kappa, g_top, g_bot, p_top, p_bot = _slab_terms(n, n_core, n_clad_top, n_clad_bottom, polarization)
    # phase condition: kappa*t = m*pi + atan(p_t g_t/kappa) + atan(p_b g_b/kappa)
    return (k0 * thickness * kappa - order * math.pi
            - math.atan2(p_top * g_top, kappa) - math.atan2(p_bot * g_bot, kappa))


def slab_dispersion(n_core: float, n_clad_top: float, n_clad_bottom: float, thickness: float,
                    wavelength: float, polarization: str = TE, order: int = 0,
                    tol: float = 1e-12) -> float:
    """Effective index of a guided mode of an asymmetric three-layer slab.

    The transverse resonance condition is solved by bisection on the
    effective index between the higher cladding index and the core index.

    Raises
    ------
    CutoffError
        If mode ``order`` is not guided.
    """
    if polarization not in (TE, TM):
        raise ValueError("polarization must be 'TE' or 'TM'")
    if not thickness > 0:
        raise GeometryError("slab thickness must be > 0")
    n_lo = max(n_clad_top, n_clad_bottom)
    if not n_core > n_lo:
        raise ValueError("core index must exceed both cladding indices")
    args = (n_core, n_clad_top, n_clad_bottom, thickness, wavelength, polarization, order)
    # residual decreases monotonically in n; guided iff positive at the cladding line
    if _slab_residual(n_lo, *args) <= 0:
        raise CutoffError(f"{polarization}{order} is below cutoff")
    return bisect(_slab_residual, n_lo, n_core, args=args, xtol=tol, rtol=4 * np.finfo(float).eps,
                  maxiter=200)


def slab_group_index(n_core: float, n_clad_top: float, n_clad_bottom: float, thickness: float,
                     wavelength: float, polarization: str = TE, order: int = 0) -> float:
    """Group index of a slab mode by implicit differentiation of the dispersion relation.

    Materials are dispersionless, so n_g = n - lambda dn/dlambda with the
    derivative taken from F(n, lambda) = 0 as dn/dlambda = -F_lambda / F_n.
    """
    n = slab_dispersion(n_core, n_clad_top, n_clad_bottom, thickness, wavelength, polarization, order)
    k0 = 2 * math.pi / wavelength
    kappa, g_top, g_bot, p_top, p_bot = _slab_terms(n, n_core, n_clad_top, n_clad_bottom, polarization)
    F_lam = -k0 * thickness * kappa / wavelength
    dkappa = -n / kappa
    F_n = k0 * thickness * dkappa
    for g, p, nc in ((g_top, p_top, n_clad_top), (g_bot, p_bot, n_clad_bottom)):
        r = g / kappa
        dr = n * (n_core ** 2 - nc ** 2) / (g * kappa ** 3)
        F_n -= p * dr / (1 + (p * r) ** 2)
    dn_dlam = -F_lam / F_n
    return n - wavelength * dn_dlam


@dataclass
class ModeSolution:
    """One guided mode of a cross-section.

    ``profile`` is the dominant transverse E component normalized to
    max |E| = 1 (sign chosen so the largest-magnitude sample is positive).
    """

    n_eff: float
    wavelength: float
    polarization: str
    profile: np.ndarray
    grid: PermittivityGrid
    confinement_fractions: dict[str, float] = field(default_factory=dict)
    residual: float = 0.0

    @property
    def intensity(self) -> np.ndarray:
        return self.profile ** 2

    def overlap(self, other: "ModeSolution", weighted: bool = True) -> float:
        """Normalized (eps-weighted) overlap of two profiles on the same grid."""
        if other.polarization != self.polarization:
            return 0.0
        w = self.grid.eps if weighted else 1.0
        a, b = self.profile, other.profile
        num = np.sum(w * a * b)
        return float(num / math.sqrt(np.sum(w * a * a) * np.sum(w * b * b)))

    def to_dict(self) -> dict:
        return {"n_eff": self.n_eff, "wavelength": self.wavelength,
                "polarization": self.polarization,
                "confinement": dict(self.confinement_fractions)}


def _second_difference(n, dx, periodic):
    if periodic:
        # modular neighbours; duplicates add up for n <= 2
        i = np.arange(n)
        rows = np.concatenate([i, i, i])
        cols = np.concatenate([i, (i - 1) % n, (i + 1) % n])
        vals = np.concatenate([np.full(n, -2.0), np.ones(n), np.ones(n)])
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n)) / dx ** 2
    main = np.full(n, -2.0)
    off = np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], shape=(n, n), format="csr") / dx ** 2


def _weighted_second_difference(eps, axis, dx, periodic):
    """Discrete d/du [ (1/eps) d/du (eps E) ] along ``axis`` of a 2D array.

    This is the operator acting on the field component normal to interfaces
    perpendicular to ``axis``; eps at half nodes is the arithmetic mean.
    """
    nx, ny = eps.shape
    n_total = nx * ny
    idx = np.arange(n_total).reshape(nx, ny)
    rows, cols, vals = [], [], []
    e = eps
    length = e.shape[axis]
    for s in range(length):
        sl = [slice(None)] * 2
        sl[axis] = s
        cur = idx[tuple(sl)]
        e_c = e[tuple(sl)]
        for step in (-1, 1):
            t = s + step
            if periodic:
                t %= length
            elif not 0 <= t < length:
                # Dirichlet wall half a cell beyond the last node
                rows.append(cur.ravel())
                cols.append(cur.ravel())
                vals.append((-e_c / e_c).ravel())
                continue
            sl_t = [slice(None)] * 2
            sl_t[axis] = t
            nb = idx[tuple(sl_t)]
            e_t = e[tuple(sl_t)]
            e_half = 0.5 * (e_c + e_t)
            rows += [cur.ravel(), cur.ravel()]
            cols += [nb.ravel(), cur.ravel()]
            vals += [(e_t / e_half).ravel(), (-e_c / e_half).ravel()]
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n_total, n_total))
    return A / dx ** 2


def _plain_second_difference_2d(shape, axis, dx, periodic):
    nx, ny = shape
    if axis == 0:
        return sp.kron(_second_difference(nx, dx, periodic), sp.identity(ny), format="csr")
    return sp.kron(sp.identity(nx), _second_difference(ny, dx, periodic), format="csr")


def mode_operator(grid: PermittivityGrid, wavelength: float, polarization: str = TE,
                  boundary: tuple[str, str] = ("dirichlet", "dirichlet")) -> sp.csr_matrix:
    """Sparse semivectorial Helmholtz operator whose eigenvalues are beta^2.

    Axis 0 of the grid is horizontal and axis 1 vertical.  ``TE`` solves for
    the horizontal E component (E_0), ``TM`` for the vertical one (E_1); the
    polarization-dependent term carries the permittivity jump across
    interfaces normal to the field.
    """
    if grid.ndim != 2:
        raise GeometryError("cross_section_modes needs a 2D grid")
    eps = grid.eps
    k0 = 2 * math.pi / wavelength
    periodic = [b == "periodic" for b in boundary]
    field_axis = 0 if polarization == TE else 1
    other = 1 - field_axis
    A = (_weighted_second_difference(eps, field_axis, grid.dx, periodic[field_axis])
         + _plain_second_difference_2d(eps.shape, other, grid.dx, periodic[other])
         + sp.diags(k0 ** 2 * eps.ravel()))
    return A.tocsr()


def _edge_index(grid, boundary):
    e = grid.eps
    edges = []
    if boundary[0] != "periodic":
        edges += [e[0, :], e[-1, :]]
    if boundary[1] != "periodic":
        edges += [e[:, 0], e[:, -1]]
    if not edges:
        return float(np.sqrt(e.min()))
    return float(np.sqrt(max(x.max() for x in edges)))


def _confinement(grid, profile):
    w = grid.eps * profile ** 2
    total = w.sum()
    if grid.labels is None:
        return {"all": 1.0}
    return {name: float(w[grid.labels == k].sum() / total) for k, name in enumerate(grid.label_names)}


def _polish(A, lam, v, tol, maxiter=5):
    """Rayleigh-quotient refinement of an eigenpair from the Arnoldi solve."""
    n = A.shape[0]
    I = sp.identity(n, format="csc")
    for _ in range(maxiter):
        r = A @ v - lam * v
        res = np.linalg.norm(r) / np.linalg.norm(v)
        if res < tol * max(1.0, abs(lam)):
            break
        lu = spla.splu((A - lam * I).tocsc() + 1e-14 * abs(lam) * I)
        v = lu.solve(v)
        v /= np.linalg.norm(v)
        lam = float(v @ (A @ v) / (v @ v))
    r = A @ v - lam * v
    return lam, v, float(np.linalg.norm(r) / np.linalg.norm(v))


def cross_section_modes(grid: PermittivityGrid, wavelength: float, n_modes: int = 1,
                        polarization: str | None = TE,
                        boundary: tuple[str, str] = ("dirichlet", "dirichlet"),
                        tol: float = 1e-10, maxiter: int | None = None) -> list[ModeSolution]:
    """Guided modes of a 2D cross-section, sorted by descending n_eff.

    Parameters
    ----------
    grid : PermittivityGrid
        2D cross-section; axis 0 horizontal, axis 1 vertical.
    wavelength : float
        Free-space wavelength (um).
    n_modes : int
        Number of modes requested per polarization.
    polarization : {"TE", "TM", None}
        ``None`` solves both and merges the results.
    boundary : pair of {"dirichlet", "periodic"}
        Outer boundary per axis.  Dirichlet is appropriate when at least
        ~1 um of cladding surrounds the core.

    Raises
    ------
    NoGuidedModeError
        If no eigenvalue lies above the cladding light line.
    """
    if polarization is None:
        found = []
        for pol in (TE, TM):
            try:
                found += cross_section_modes(grid, wavelength, n_modes, pol, boundary, tol, maxiter)
            except NoGuidedModeError:
                pass
        if not found:
            raise NoGuidedModeError("no guided mode in either polarization")
        return sorted(found, key=lambda m: -m.n_eff)

    k0 = 2 * math.pi / wavelength
    n_max = grid.n_max()
    n_clad = _edge_index(grid, boundary)
    if n_max <= n_clad + 1e-12:
        raise NoGuidedModeError("cross-section has no core above the cladding index")
    A = mode_operator(grid, wavelength, polarization, boundary)
    sigma = (k0 * n_max) ** 2
    k = min(n_modes, A.shape[0] - 2)
    try:
        vals, vecs = spla.eigs(A, k=k, sigma=sigma, which="LM", tol=tol * 1e-2,
                               maxiter=maxiter or 10 * A.shape[0])
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError("eigensolver did not converge") from exc
    order = np.argsort(-vals.real)
    out = []
    for i in order:
        lam = float(vals[i].real)
        v = vecs[:, i].real.copy()
        if np.linalg.norm(v) == 0:
            v = vecs[:, i].imag.copy()
        v /= np.linalg.norm(v)
        lam, v, res = _polish(A, lam, v, 1e-13)
        if lam <= 0:
            continue
        n_eff = math.sqrt(lam) / k0
        if n_eff <= n_clad:
            continue
        prof = v.reshape(grid.eps.shape)
        peak = prof.flat[np.argmax(np.abs(prof))]
        prof = prof / peak
        out.append(ModeSolution(n_eff, wavelength, polarization, prof, grid,
                                _confinement(grid, prof), res))
    if not out:
        raise NoGuidedModeError("no guided mode above the cladding index")
    return out


def group_index(solve: Callable[[float], "ModeSolution | float"], wavelength: float,
                dl: float = 0.001, min_overlap: float = 0.9) -> float:
    """Group index n_g = n_eff - lambda dn_eff/dlambda by central differences.

    ``solve`` maps a wavelength to a ModeSolution (or to a bare effective
    index).  When profiles are available their overlap at lambda +/- dl is
    checked to make sure the same mode was tracked.
    """
    lo, mid, hi = solve(wavelength - dl), solve(wavelength), solve(wavelength + dl)
    if isinstance(mid, ModeSolution):
        if lo.profile.shape == hi.profile.shape and abs(lo.overlap(hi, weighted=False)) < min_overlap:
            raise ModeSwapError("mode identity changed across the finite-difference step; reduce dl")
        n_lo, n_mid, n_hi = lo.n_eff, mid.n_eff, hi.n_eff
    else:
        n_lo, n_mid, n_hi = float(lo), float(mid), float(hi)
    return n_mid - wavelength * (n_hi - n_lo) / (2 * dl)


def fundamental_solver(grid_at: Callable[[float], PermittivityGrid], polarization: str = TE,
                       boundary=("dirichlet", "dirichlet")) -> Callable[[float], ModeSolution]:
    """Wrap a wavelength -> grid factory into a fundamental-mode solver for group_index."""
    def solve(wl):
        return cross_section_modes(grid_at(wl), wl, 1, polarization, boundary)[0]
    return solve


def stacked_slab_index(core_index: float, height: float, stack, wavelength: float,
                       polarization: str = TE, dz: float = 0.002, padding: float = 1.5,
                       depth: float | None = None) -> ModeSolution:
    """Fundamental mode of a uniform film of ``height`` on top of a layer stack.

    The vertical profile is solved on a one-cell-wide periodic grid, which
    turns the cross-section solver into a 1D multilayer slab solver.
    ``depth`` limits how far into the stack the domain extends; by default
    it stops at the first layer deeper than 0.2 um whose index reaches the
    film index (such a layer would make the mode leaky, e.g. a Si carrier).
    """
    if depth is None:
        depth = padding
        z = 0.0
        for mat, t in reversed(stack.layers):
            if z > 0.2 and mat.index(wavelength) >= core_index:
                depth = min(depth, z)
                break
            z += t
    nz_below = max(1, int(round(depth / dz)))
    nz_core = max(1, int(round(height / dz)))
    nz_above = max(1, int(round(padding / dz)))
    zs = (np.arange(-nz_below, nz_core + nz_above) + 0.5) * dz
    eps = np.empty((1, len(zs)))
    names: list[str] = []
    labels = np.empty((1, len(zs)), dtype=np.int16)
    for k, zc in enumerate(zs):
        if 0 <= zc < nz_core * dz:
            n, name = core_index, "core"
        else:
            m = stack.material_at(zc - nz_core * dz if zc >= 0 else zc)
            if zc >= nz_core * dz:
                m = stack.cover
            n, name = m.index(wavelength), m.name
        if name not in names:
            names.append(name)
        eps[0, k] = n * n
        labels[0, k] = names.index(name)
    grid = PermittivityGrid(dz, eps, (0.0, -nz_below * dz), labels, tuple(names))
    return cross_section_modes(grid, wavelength, 1, polarization, ("periodic", "dirichlet"))[0]
