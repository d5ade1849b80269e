"""Offspring laws, Omega splits, and the tilted branching mechanism.

The offspring law is a subcritical pure power law: pmf(k) = c*k^(-1-alpha)
for k >= 1, with all remaining mass at zero. For a set Omega of outdegrees
(0 in Omega, one side finite) the split carries the coefficient tables of

    phi_Omega(z)      = sum_{k in Omega} pmf(k) z^k
    phi*_{Omega^c}(z) = phi_{Omega^c}(z) / z
    r(z)              = 1 / (1 - phi*_{Omega^c}(z))
    tilted(z)         = phi_Omega(z) * r(z)

which drive the tilted-tree sampler and the decoration sampler. Tables are
plain numpy arrays extended on demand; extend before sharing across
threads (process-level parallelism inherits them copy-on-write).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta as _zeta

from . import kernels
from .streams import UniformStream

_MIN_TABLE = 1024


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class OmegaSet:
    """A subset of N0 stored as its finite side.

    ``members`` is the finite side; ``complement_stored`` tells whether it
    is Omega itself (False) or Omega^c (True). Omega = N0 is represented
    by an empty stored complement.
    """

    members: frozenset
    complement_stored: bool

    @staticmethod
    def parse(spec) -> "OmegaSet":
        """Parse 'all', '0,1,...' (finite Omega) or '~1,2' (finite Omega^c)."""
        if isinstance(spec, OmegaSet):
            return spec
        if isinstance(spec, (set, frozenset, list, tuple)):
            return OmegaSet(frozenset(int(k) for k in spec), False).validate()
        s = str(spec).strip().lower()
        if s in ("all", "n0", "nat", "*"):
            return OmegaSet(frozenset(), True)
        comp = s.startswith("~")
        body = s[1:] if comp else s
        vals = frozenset(int(t) for t in body.replace(",", " ").split())
        return OmegaSet(vals, comp).validate()

    def validate(self) -> "OmegaSet":
        _require(all(k >= 0 for k in self.members), "omega entries must be non-negative")
        _require(0 in self, "0 must lie in Omega")
        if not self.complement_stored:
            _require(len(self.members) > 0, "Omega must be non-empty")
        return self

    def __contains__(self, k: int) -> bool:
        return (k in self.members) != self.complement_stored

    @property
    def omega_is_finite(self) -> bool:
        return not self.complement_stored

    @property
    def is_trivial(self) -> bool:
        """True when Omega = N0 (empty complement)."""
        return self.complement_stored and not self.members

    def mask(self, degrees: np.ndarray) -> np.ndarray:
        """Boolean membership array for a degree vector."""
        if not self.members:
            return np.full(len(degrees), self.complement_stored)
        if len(self.members) <= 4:
            side = None
            for v in self.members:
                eq = degrees == v
                side = eq if side is None else (side | eq)
        else:
            side = np.isin(degrees, np.fromiter(self.members, dtype=np.int64))
        return ~side if self.complement_stored else side

    def __str__(self) -> str:
        if self.is_trivial:
            return "all"
        body = ",".join(str(k) for k in sorted(self.members))
        return ("~" + body) if self.complement_stored else body


class OffspringLaw:
    """Power-law offspring distribution: pmf(k) = c*k^(-1-alpha), k >= 1."""

    def __init__(self, alpha: float, c: float, p0: float, mean: float):
        self.alpha = float(alpha)
        self.c = float(c)
        self.p0 = float(p0)
        self.mean = float(mean)
        self.theta = min(alpha, 2.0)
        self._cdf = self._make_cdf(_MIN_TABLE)
        self._guide = kernels.build_guide(self._cdf)

    def _make_cdf(self, size: int) -> np.ndarray:
        # P(xi <= k) = 1 - c*zeta(1+alpha, k+1): exact tail, no cumsum drift
        k = np.arange(size, dtype=np.float64)
        return 1.0 - self.c * _zeta(1.0 + self.alpha, k + 1.0)

    def pmf(self, k):
        k = np.asarray(k)
        out = np.where(k == 0, self.p0,
                       self.c * np.power(np.maximum(k, 1).astype(np.float64), -1.0 - self.alpha))
        return float(out) if out.ndim == 0 else out

    def tail(self, k):
        """P(xi > k) via Hurwitz zeta, absolute error ~1e-15."""
        k = np.asarray(k, dtype=np.float64)
        out = self.c * _zeta(1.0 + self.alpha, k + 1.0)
        return float(out) if out.ndim == 0 else out

    @property
    def variance(self) -> float:
        _require(self.alpha > 2, "variance requires alpha > 2")
        return self.c * _zeta(self.alpha - 1.0) - self.mean ** 2

    @property
    def max_pmf(self) -> float:
        return max(self.p0, self.c)

    def pmf_table(self, size: int) -> np.ndarray:
        t = self.c * np.power(np.arange(size, dtype=np.float64).clip(min=1.0), -1.0 - self.alpha)
        t[0] = self.p0
        return t

    # -- sampling tables ---------------------------------------------------

    def ensure_coverage(self, u: float) -> None:
        while u >= self._cdf[-1]:
            self._cdf = self._make_cdf(2 * len(self._cdf))
            self._guide = kernels.build_guide(self._cdf)

    @property
    def sampling_tables(self):
        return self._cdf, self._guide

    def __repr__(self) -> str:
        return f"OffspringLaw(alpha={self.alpha}, mean={self.mean}, c={self.c:.6g}, p0={self.p0:.6g})"


def build_power_law(alpha: float, mean: float) -> OffspringLaw:
    """Construct the law with tail exponent alpha and E[xi] = mean.

    c = mean / zeta(alpha), p0 = 1 - c*zeta(alpha+1). alpha = 2 is
    rejected (theta = min(alpha, 2) picks up log corrections there).
    """
    _require(alpha > 1, "alpha must exceed 1")
    _require(alpha != 2.0, "alpha = 2 is out of scope (logarithmic corrections)")
    _require(0 < mean < 1, "mean must lie in (0, 1) (subcritical)")
    c = mean / float(_zeta(alpha))
    p0 = 1.0 - c * float(_zeta(alpha + 1.0))
    _require(p0 > 0, "parameters leave no mass at zero")
    return OffspringLaw(alpha, c, p0, mean)


class OmegaSplit:
    """An offspring law split by Omega, with all series coefficient tables."""

    def __init__(self, law: OffspringLaw, omega: OmegaSet):
        omega = OmegaSet.parse(omega)
        self.law = law
        self.omega = omega

        if omega.omega_is_finite:
            self.pOmega = float(np.sum(law.pmf(np.fromiter(omega.members, dtype=np.int64))))
        else:
            comp = np.fromiter(omega.members, dtype=np.int64) if omega.members else np.empty(0, np.int64)
            self.pOmega = 1.0 - float(np.sum(law.pmf(comp))) if len(comp) else 1.0
        _require(self.pOmega > 0, "P(xi in Omega) must be positive")
        self.pOmegaC = 1.0 - self.pOmega

        # E[tilted] = (E[xi] - P(xi in Omega^c)) / (1 - P(xi in Omega^c))
        self.tilted_mean = (law.mean - self.pOmegaC) / (1.0 - self.pOmegaC)
        if omega.omega_is_finite:
            self.c_omega = self.pOmega / (1.0 - self.pOmegaC) ** 2
        else:
            self.c_omega = 1.0 / (1.0 - self.pOmegaC)

        self._build_tables(_MIN_TABLE)

    # -- coefficient tables ------------------------------------------------

    def _phi_y_table(self, size: int) -> np.ndarray:
        """[z^y] phi_Omega for y = 0..size-1 (zeros off Omega)."""
        if self.omega.omega_is_finite:
            size = max(k for k in self.omega.members) + 1
        y = np.arange(size, dtype=np.int64)
        vals = self.law.pmf(y).astype(np.float64)
        vals[~self.omega.mask(y)] = 0.0
        return vals

    def _phi_star_table(self, size: int) -> np.ndarray:
        """[z^x] phi*_{Omega^c} for x = 0..size-1 (phi*_x = pmf(x+1) off Omega)."""
        if not self.omega.omega_is_finite:
            comp_max = max(self.omega.members) if self.omega.members else 0
            size = max(comp_max, 1)  # support x <= comp_max - 1
        x = np.arange(size, dtype=np.int64)
        vals = self.law.pmf(x + 1).astype(np.float64)
        vals[self.omega.mask(x + 1)] = 0.0
        return vals

    def _build_tables(self, kmax: int) -> None:
        self.phi_y = self._phi_y_table(kmax)
        self.phi_star = self._phi_star_table(kmax)
        self.r_vals = kernels.extend_r(self.phi_star, np.empty(0), kmax)
        self._finalize_tables()

    def _finalize_tables(self) -> None:
        # effective r support: trailing exact zeros are skipped in convolutions
        nz = np.nonzero(self.r_vals)[0]
        self.r_support = int(nz[-1]) + 1 if len(nz) else 1
        kmax = len(self.r_vals)
        self.tilted_vals = kernels.tilted_table(self.phi_y, self.r_vals, self.r_support, kmax)
        cdf = np.cumsum(self.tilted_vals)
        self.tilted_cdf = np.minimum(cdf, 1.0)
        self._guide = kernels.build_guide(self.tilted_cdf)
        self._max_tilted = float(self.tilted_vals.max())

    def ensure_tables(self, kmax: int) -> None:
        """Pre-extend every table to cover tilted degrees up to kmax-1."""
        if kmax <= len(self.r_vals):
            return
        if self.omega.omega_is_finite:
            self.phi_star = self._phi_star_table(kmax)
        else:
            self.phi_y = self._phi_y_table(kmax)
        self.r_vals = kernels.extend_r(self.phi_star, self.r_vals, kmax)
        self._finalize_tables()

    def ensure_draw_coverage(self, u: float) -> None:
        while u >= self.tilted_cdf[-1]:
            self.ensure_tables(2 * len(self.r_vals))

    @property
    def sampling_tables(self):
        return self.tilted_cdf, self._guide

    @property
    def phi_star0(self) -> float:
        return float(self.phi_star[0])

    @property
    def max_tilted_pmf(self) -> float:
        return self._max_tilted

    def tilted_pmf(self, k):
        """[z^k] tilted(z), extending tables as needed."""
        kmax = int(np.max(k))
        self.ensure_tables(kmax + 1)
        out = self.tilted_vals[np.asarray(k)]
        return float(out) if np.ndim(k) == 0 else out

    def r(self, m):
        self.ensure_tables(int(np.max(m)) + 1)
        out = self.r_vals[np.asarray(m)]
        return float(out) if np.ndim(m) == 0 else out

    def phi_omega_coeff(self, y):
        y = np.asarray(y)
        out = np.where(self.omega.mask(np.atleast_1d(y)), self.law.pmf(np.atleast_1d(y)), 0.0)
        return float(out[0]) if y.ndim == 0 else out

    def phi_star_coeff(self, x):
        x = np.asarray(x)
        out = np.where(~self.omega.mask(np.atleast_1d(x) + 1), self.law.pmf(np.atleast_1d(x) + 1), 0.0)
        return float(out[0]) if x.ndim == 0 else out

    @property
    def is_trivial(self) -> bool:
        return self.omega.is_trivial

    def __repr__(self) -> str:
        return f"OmegaSplit({self.law!r}, omega={self.omega})"


def build_split(law: OffspringLaw, omega) -> OmegaSplit:
    """Split ``law`` by Omega; rejects omega without 0 or with no finite side."""
    return OmegaSplit(law, OmegaSet.parse(omega))


class SizeBiasedLaw:
    """xi-hat: P(k) = k*pmf(k) for finite k, P(inf) = 1 - E[xi]."""

    def __init__(self, base: OffspringLaw):
        self.base = base
        self.p_infinity = 1.0 - base.mean
        self._cum = self._make_cum(_MIN_TABLE)

    def _make_cum(self, size: int) -> np.ndarray:
        # sum_{j<=k} j*pmf(j) = c*(zeta(alpha) - zeta(alpha, k+1))
        k = np.arange(size, dtype=np.float64)
        za = float(_zeta(self.base.alpha))
        return self.base.c * (za - _zeta(self.base.alpha, k + 1.0))

    def ensure_coverage(self, kmax: int) -> None:
        while len(self._cum) <= kmax:
            self._cum = self._make_cum(2 * len(self._cum))

    def draw(self, stream: UniformStream, cap: int | None = None):
        """One draw; returns math.inf with probability 1 - E[xi].

        With ``cap`` given, any finite value that would exceed cap is
        returned as cap + 1 without resolving it exactly (the caller is
        about to abort on a size cap anyway).
        """
        u = stream.take1()
        if u >= self.base.mean:
            return math.inf
        hi = len(self._cum) - 1
        while u >= self._cum[hi]:
            if cap is not None and hi > cap:
                return cap + 1
            self.ensure_coverage(2 * hi)
            hi = len(self._cum) - 1
        k = int(np.searchsorted(self._cum, u, side="right"))
        return k

    def pmf(self, k):
        if k == math.inf:
            return self.p_infinity
        return k * self.base.pmf(k)
