"""Real Lambert W function on the two real branches.

Solves ``w * exp(w) = x`` for real ``x``.  The principal branch W0 is
defined on ``x >= -1/e`` and returns ``w >= -1``; the lower branch W-1 is
defined on ``-1/e <= x < 0`` and returns ``w <= -1``.

Both branches are evaluated by Halley iteration from a branch-appropriate
initial guess.  Near the branch point ``x = -1/e`` the iteration stalls
(the defining equation has a double root there), so a series in
``p = sqrt(2*(e*x + 1))`` is used instead.

Everything here accepts scalars or numpy arrays and is pure/thread-safe.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import BranchDomainError

__all__ = ["Branch", "lambert_w", "branch_of", "w_plus_one"]

_E = math.e
# Arguments whose offset from the branch point is below this are snapped onto
# the branch point itself; slightly more negative arguments (rounding noise
# from upstream formulas) are treated the same instead of erroring.
_BRANCH_SNAP = 1e-12


class Branch(enum.Enum):
    """Real branch selector: W0 (principal) or W-1 (lower)."""

    PRINCIPAL = 0
    LOWER = -1

    def __str__(self):
        return "W0" if self is Branch.PRINCIPAL else "W-1"


def branch_of(w) -> Branch:
    """Branch on which a real value ``w`` of the W function lives."""
    return Branch.PRINCIPAL if w >= -1.0 else Branch.LOWER


def _branch_point_series(p: np.ndarray) -> np.ndarray:
    # W(-1/e + p^2/(2e)) = -1 + p - p^2/3 + 11 p^3/72 - 43 p^4/540 + ...
    # (signed p: positive for W0, negative for W-1).
    return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 - p * (43.0 / 540.0))))


def _halley(w: np.ndarray, x: np.ndarray, active: np.ndarray, max_iter: int = 50) -> np.ndarray:
    """Vectorized Halley refinement of w*e^w = x on the ``active`` mask."""
    w = w.copy()
    for _ in range(max_iter):
        if not active.any():
            break
        wa = w[active]
        xa = x[active]
        ew = np.exp(wa)
        f = wa * ew - xa
        # wp1 == 0 only at the branch point, which the series handles
        # before we ever get here; guard the division anyway.
        wp1 = wa + 1.0
        wp1 = np.where(np.abs(wp1) < 1e-300, 1e-300, wp1)
        denom = ew * wp1 - (wa + 2.0) * f / (2.0 * wp1)
        dw = f / denom
        wa = wa - dw
        w[active] = wa
        still = np.abs(dw) > 1e-16 * (2.0 + np.abs(wa))
        idx = np.flatnonzero(active)
        active = np.zeros_like(active)
        active[idx[still]] = True
    return w


def _w_principal(x: np.ndarray) -> np.ndarray:
    s = _E * x + 1.0
    bad = s < -_BRANCH_SNAP
    if bad.any():
        raise BranchDomainError(Branch.PRINCIPAL, float(np.asarray(x)[bad].flat[0]),
                                "W0 requires x >= -1/e")
    s = np.maximum(s, 0.0)
    p = np.sqrt(2.0 * s)

    w = np.empty_like(p)
    near = p < 1.0  # x below about -0.18
    w[near] = _branch_point_series(p[near])
    large = ~near & (x > 2.0)
    if large.any():
        lx = np.log(x[large])
        w[large] = lx - np.log(lx)
    mid = ~near & ~large
    w[mid] = np.log1p(x[mid])

    # Tiny p: series is already at full precision and Halley would divide
    # by ~0; exact zeros stay exact.
    active = (p >= 1e-5) & (x != 0.0)
    w = np.where(x == 0.0, 0.0, w)
    w = _halley(w, x, active)
    return np.maximum(w, -1.0)


def _w_lower(x: np.ndarray) -> np.ndarray:
    if (x >= 0.0).any():
        raise BranchDomainError(Branch.LOWER, float(np.asarray(x)[x >= 0.0].flat[0]),
                                "W-1 requires -1/e <= x < 0")
    s = _E * x + 1.0
    bad = s < -_BRANCH_SNAP
    if bad.any():
        raise BranchDomainError(Branch.LOWER, float(np.asarray(x)[bad].flat[0]),
                                "W-1 requires -1/e <= x < 0")
    s = np.maximum(s, 0.0)
    p = np.sqrt(2.0 * s)

    w = np.empty_like(p)
    near = p < 0.8
    w[near] = _branch_point_series(-p[near])
    far = ~near
    if far.any():
        # Asymptotic guess plus a few log fixed-point sweeps.
        xf = x[far]
        wf = np.log(-xf) - np.log(-np.log(-xf))
        for _ in range(4):
            wf = np.log(-xf) - np.log(-wf)
        w[far] = wf

    # exp(w) underflows for very negative w; there the log fixed point is
    # already converged well below 1e-13 relative residual.
    active = (p >= 1e-5) & (w > -500.0)
    w = _halley(w, x, active)
    return np.minimum(w, -1.0)


def lambert_w(branch: Branch, x):
    """Evaluate the requested real branch of the Lambert W function.

    Parameters
    ----------
    branch : Branch
        ``Branch.PRINCIPAL`` for W0 or ``Branch.LOWER`` for W-1.
    x : float or array_like
        Argument(s); must lie in the branch domain.

    Returns
    -------
    float or ndarray
        ``w`` with ``w * exp(w) = x`` to relative residual <= 1e-13.

    Raises
    ------
    BranchDomainError
        If any argument lies outside the branch domain (beyond a ~1e-12
        snap tolerance at the branch point).
    """
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if not np.isfinite(arr).all():
        raise BranchDomainError(branch, float(arr[~np.isfinite(arr)].flat[0]),
                                "non-finite Lambert W argument")
    if branch is Branch.PRINCIPAL:
        w = _w_principal(arr)
    elif branch is Branch.LOWER:
        w = _w_lower(arr)
    else:  # pragma: no cover
        raise ValueError(f"unknown branch {branch!r}")
    return float(w[0]) if scalar else w


def w_plus_one(branch: Branch, s):
    """``W(-(1-s)/e) + 1`` for ``s >= 0``, accurate for tiny ``s``.

    ``s`` is the scaled offset of the W argument from the branch point
    (``s = e*x + 1``).  Passing the offset instead of ``x`` avoids the
    catastrophic cancellation that makes ``lambert_w(b, x) + 1`` lose all
    precision as ``x`` approaches ``-1/e``; callers that know the offset
    analytically (conserved-level inversions near the orbit extrema) get
    full relative precision for the distance from the branch value -1.

    Positive for the principal branch, negative for the lower branch.
    """
    s = np.maximum(np.asarray(s, dtype=float), 0.0)
    scalar = s.ndim == 0
    s = np.atleast_1d(s)
    out = np.empty_like(s)
    # Below the cutoff the series is exact to ~1e-15 relative; above it,
    # forming x and adding 1 back costs at most ~1e-16/sqrt(2s) relative.
    tiny = s < 1e-4
    if tiny.any():
        p = np.sqrt(2.0 * s[tiny])
        if branch is Branch.LOWER:
            p = -p
        out[tiny] = p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0
                         + p * (-43.0 / 540.0 + p * (769.0 / 17280.0
                         + p * (-221.0 / 8505.0 + p * (680863.0 / 43545600.0)))))))
    rest = ~tiny
    if rest.any():
        out[rest] = lambert_w(branch, (s[rest] - 1.0) / _E) + 1.0
    return float(out[0]) if scalar else out
