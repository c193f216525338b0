"""
Univalence Checks - Disk Analysis
Sup-modulus and inf-real-part estimation over a polar grid of the unit
disk, coefficient certificates, an empirical check of Jack's lemma, and the
boundary-value functions used in the proofs of the criteria.

Grid reductions are keyed by (value, radius index, angle index) so the
result does not depend on evaluation order or worker count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.optimize import brentq, minimize_scalar

from config import get_settings
from errors import AllSingularError, DomainError
from series_core import PowerSeries, coefficient_l1, derivative, evaluate_function
from transforms import PointwiseFunction

logger = logging.getLogger(__name__)

# Local maxima refined per circle (a flat row has one at every sample)
_MAX_REFINE_CANDIDATES = 64


# ============================================================================
# DATA MODELS
# ============================================================================

class ComplexPoint(BaseModel):
    """A point of the disk serialised as {re, im}"""
    model_config = ConfigDict(frozen=True)

    re: float
    im: float

    @classmethod
    def of(cls, z: complex) -> "ComplexPoint":
        z = complex(z)
        return cls(re=z.real, im=z.imag)

    def to_complex(self) -> complex:
        return complex(self.re, self.im)


class DiskGrid(BaseModel):
    """Concentric circles r_j with equally spaced angles 2*pi*m/M"""
    model_config = ConfigDict(frozen=True)

    radii: Tuple[float, ...]
    angles_per_circle: int = Field(4096, ge=16)

    @field_validator("radii")
    @classmethod
    def _check_radii(cls, radii: Tuple[float, ...]) -> Tuple[float, ...]:
        if not radii:
            raise ValueError("a grid needs at least one radius")
        if any(not (0.0 < r < 1.0) for r in radii):
            raise ValueError("radii must lie in (0, 1)")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly increasing")
        return radii

    @classmethod
    def default(cls, levels: Optional[int] = None, angles: Optional[int] = None) -> "DiskGrid":
        """r_j = 1 - 2^-j for j = 1..levels"""
        settings = get_settings()
        levels = settings.radii_levels if levels is None else levels
        angles = settings.angles if angles is None else angles
        return cls(radii=tuple(1.0 - 2.0 ** -j for j in range(1, levels + 1)), angles_per_circle=angles)

    @property
    def levels(self) -> int:
        return len(self.radii)

    def thetas(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.angles_per_circle) / self.angles_per_circle

    def circle(self, index: int) -> np.ndarray:
        return self.radii[index] * np.exp(1j * self.thetas())

    def points(self) -> np.ndarray:
        """All samples, shape (levels, angles_per_circle)"""
        return np.asarray(self.radii)[:, None] * np.exp(1j * self.thetas())[None, :]


class SupEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(ge=0.0)
    witness: ComplexPoint
    radius_index: int
    angle_index: int
    per_radius_max: List[Tuple[float, float]]
    singular_samples: int = 0
    refined: bool = False


class InfEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    witness: ComplexPoint
    radius_index: int
    angle_index: int
    per_radius_min: List[Tuple[float, float]]
    singular_samples: int = 0


class PhiArgs(BaseModel):
    """Arguments (t, k) of the Theorem 1 boundary function; t = cos(theta)"""
    model_config = ConfigDict(frozen=True)

    t: float
    k: float

    @model_validator(mode="after")
    def _check_domain(self) -> "PhiArgs":
        _check_phi_domain(self.t, self.k)
        return self


class JackResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    r: float
    z0: ComplexPoint
    k_est: ComplexPoint
    multiplicity: int
    tie_estimates: List[ComplexPoint]
    contract_holds: bool


# ============================================================================
# GRID REDUCTIONS
# ============================================================================

def _evaluate_rows(g: PointwiseFunction, grid: DiskGrid, workers: int) -> List[np.ndarray]:
    """Evaluate g circle by circle; ThreadPoolExecutor.map keeps radius order"""
    if workers <= 1:
        return [g.values(grid.circle(j)) for j in range(grid.levels)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda j: g.values(grid.circle(j)), range(grid.levels)))


def _reduce(rows: List[np.ndarray], key: Callable[[np.ndarray], np.ndarray], maximize: bool
            ) -> Tuple[Optional[Tuple[float, int, int]], List[Tuple[int, float]], int]:
    """
    Deterministic arg-extremum over (value, radius index, angle index).

    Ties go to the smallest radius index, then the smallest angle index.
    Returns (best, per-radius extrema, singular sample count).
    """
    best = None
    per_radius = []
    singular = 0
    for j, vals in enumerate(rows):
        bad = np.isnan(vals)
        singular += int(np.count_nonzero(bad))
        if bad.all():
            continue
        score = key(vals)
        score = np.where(bad, -np.inf if maximize else np.inf, score)
        # argmax/argmin return the first (smallest angle) occurrence
        m = int(np.argmax(score)) if maximize else int(np.argmin(score))
        v = float(score[m])
        per_radius.append((j, v))
        if best is None or (v > best[0] if maximize else v < best[0]):
            best = (v, j, m)
    return best, per_radius, singular


def _maximise_in_brackets(func: Callable[[float], float], centres: np.ndarray, half_width: float,
                          tol: float) -> np.ndarray:
    """Bounded scalar maximisation of func inside [c - half_width, c + half_width] for each centre"""
    out = np.empty(len(centres), dtype=float)
    for i, c in enumerate(centres):
        res = minimize_scalar(lambda th: -func(th), bounds=(c - half_width, c + half_width),
                              method="bounded", options={"xatol": tol})
        out[i] = float(res.x)
    return out


def _top_candidates(row: np.ndarray, limit: int = _MAX_REFINE_CANDIDATES) -> np.ndarray:
    """Local maxima of a circle row, largest first (ties by angle index), at most `limit`"""
    candidates = _local_maxima(row)
    order = np.argsort(-row[candidates], kind="stable")
    return candidates[order[:limit]]


def _local_maxima(values: np.ndarray) -> np.ndarray:
    """Indices of samples not smaller than either circular neighbour"""
    finite = np.where(np.isnan(values), -np.inf, values)
    return np.flatnonzero((finite >= np.roll(finite, 1)) & (finite >= np.roll(finite, -1)) & np.isfinite(finite))


def sup_modulus(g: PointwiseFunction, grid: DiskGrid, refine: bool = False,
                workers: Optional[int] = None) -> SupEstimate:
    """
    Largest |g| over the grid samples.

    Args:
        g: pointwise function (NaN marks a singular sample)
        grid: sampling grid
        refine: bounded scalar refinement of the largest local maxima on the
            witness circle; the refined value never falls below the grid value
        workers: threads used for circle evaluation (default: configured)

    Returns:
        SupEstimate with witness, per-radius maxima and singular count

    Raises:
        AllSingularError: if every sample is singular
    """
    workers = get_settings().workers if workers is None else workers
    rows = _evaluate_rows(g, grid, workers)
    best, per_radius, singular = _reduce(rows, np.abs, maximize=True)
    if best is None:
        raise AllSingularError(f"every sample of {g.label} is singular")

    value, j, m = best
    theta = grid.thetas()[m]
    witness = grid.radii[j] * np.exp(1j * theta)
    refined = False

    if refine:
        r = grid.radii[j]
        step = 2.0 * np.pi / grid.angles_per_circle
        row = np.where(np.isnan(rows[j]), np.nan, np.abs(rows[j]))
        candidates = _top_candidates(row)
        if candidates.size:
            centres = grid.thetas()[candidates]

            def modulus(th):
                vals = np.abs(g.values(r * np.exp(1j * th)))
                return np.where(np.isnan(vals), -np.inf, vals)

            def scalar_modulus(th: float) -> float:
                v = float(np.abs(g.values(r * np.exp(1j * th))))
                return 0.0 if np.isnan(v) else v

            best_theta = _maximise_in_brackets(scalar_modulus, centres, step, 1e-10)
            best_vals = modulus(best_theta)
            i = int(np.argmax(best_vals))
            if best_vals[i] > value:
                value = float(best_vals[i])
                witness = r * np.exp(1j * best_theta[i])
                refined = True

    if singular:
        logger.warning(f"⚠️ {singular} singular samples excluded from sup of {g.label}")
    return SupEstimate(
        value=value,
        witness=ComplexPoint.of(witness),
        radius_index=j,
        angle_index=m,
        per_radius_max=[(grid.radii[i], v) for i, v in per_radius],
        singular_samples=singular,
        refined=refined,
    )


def inf_real(g: PointwiseFunction, grid: DiskGrid, workers: Optional[int] = None) -> InfEstimate:
    """
    Smallest Re g over the grid samples.

    Every sample lies in the open disk, so a witness with Re g <= threshold
    refutes "Re g > threshold on the disk".

    Raises:
        AllSingularError: if every sample is singular
    """
    workers = get_settings().workers if workers is None else workers
    rows = _evaluate_rows(g, grid, workers)
    best, per_radius, singular = _reduce(rows, np.real, maximize=False)
    if best is None:
        raise AllSingularError(f"every sample of {g.label} is singular")

    value, j, m = best
    witness = grid.radii[j] * np.exp(1j * grid.thetas()[m])
    if singular:
        logger.warning(f"⚠️ {singular} singular samples excluded from inf Re of {g.label}")
    return InfEstimate(
        value=value,
        witness=ComplexPoint.of(witness),
        radius_index=j,
        angle_index=m,
        per_radius_min=[(grid.radii[i], v) for i, v in per_radius],
        singular_samples=singular,
    )


def coefficient_sup_bound(s: PowerSeries) -> float:
    """
    Sum of |c_n|: an upper bound for sup |s| over the closed unit disk.

    Only meaningful when s is the whole expression (an exact polynomial);
    the caller asserts that.
    """
    return coefficient_l1(s)


# ============================================================================
# JACK'S LEMMA
# ============================================================================

def jack_check(omega: PowerSeries, r: float, angles: int = 4096, tie_tolerance: float = 1e-9) -> JackResult:
    """
    Locate the maximum of |omega| on |z| = r and estimate k = z0 omega'(z0)/omega(z0).

    Dense angular sampling picks candidate local maxima; each is refined by
    bounded scalar maximisation to angular width 1e-10 and then polished with
    brentq on Im(z omega'/omega), whose zero is the exact stationary
    point of |omega| along the circle. Every refined maximum within
    `tie_tolerance` of the largest is checked against the lemma.

    Raises:
        DomainError(BAD_DOMAIN): r outside (0, 1) or omega(0) != 0
        DomainError(OMEGA_VANISHES): |omega(z0)| < 1e-14
    """
    if not (0.0 < r < 1.0):
        raise DomainError(f"radius must lie in (0, 1), got {r!r}", code="BAD_DOMAIN")
    if omega.coeffs[0] != 0:
        raise DomainError("omega must vanish at the origin", code="BAD_DOMAIN")

    domega = derivative(omega)
    thetas = 2.0 * np.pi * np.arange(angles) / angles
    step = 2.0 * np.pi / angles

    def modulus(th):
        return np.abs(np.asarray(evaluate_function(omega, r * np.exp(1j * th)), dtype=complex))

    def k_of(th):
        z = r * np.exp(1j * th)
        w = np.asarray(evaluate_function(omega, z), dtype=complex)
        dw = np.asarray(evaluate_function(domega, z), dtype=complex)
        return z * dw / w

    samples = modulus(thetas)
    top = float(np.max(samples))
    candidates = _top_candidates(samples)
    candidates = candidates[samples[candidates] >= top - (1e-4 * top + tie_tolerance)]
    if candidates.size == 0:
        candidates = np.array([int(np.argmax(samples))])

    centres = thetas[candidates]
    refined = _maximise_in_brackets(lambda th: float(modulus(th)), centres, step, 1e-10)

    def im_k(th: float) -> float:
        return float(np.imag(k_of(th)))

    # Polish: Im(k) changes sign across the maximiser
    polished = refined.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        for i, x in enumerate(refined):
            lo, hi = x - 1e-6, x + 1e-6
            f_lo, f_hi = im_k(lo), im_k(hi)
            if np.isfinite(f_lo) and np.isfinite(f_hi) and f_lo * f_hi < 0:
                root = brentq(im_k, lo, hi, xtol=1e-15, maxiter=200)
                if modulus(root) >= modulus(x):
                    polished[i] = root

    values = modulus(polished)
    best = float(np.max(values))
    ties = np.flatnonzero(values >= best - tie_tolerance)
    if best < 1e-14:
        raise DomainError("omega vanishes at the circle maximum", code="OMEGA_VANISHES", r=r)

    order = ties[np.argsort(np.mod(polished[ties], 2.0 * np.pi), kind="stable")]
    lead = order[np.argmax(values[order] >= best)]
    ks = k_of(polished[order])
    tie_points = [ComplexPoint.of(k) for k in ks]
    contract = bool(np.all((ks.real >= 1.0 - 1e-6) & (np.abs(ks.imag) <= 1e-6 * (1.0 + np.abs(ks)))))

    z0 = r * np.exp(1j * polished[lead])
    k0 = complex(k_of(np.array([polished[lead]]))[0])
    if not contract:
        logger.error(f"❌ Jack contract failed at r={r}: k estimates {[k.to_complex() for k in tie_points]}")
    return JackResult(
        r=r,
        z0=ComplexPoint.of(z0),
        k_est=ComplexPoint.of(k0),
        multiplicity=int(ties.size),
        tie_estimates=tie_points,
        contract_holds=contract,
    )


# ============================================================================
# BOUNDARY-VALUE FUNCTIONS FROM THE PROOFS
# ============================================================================

Real = Union[float, np.ndarray]


def _check_phi_domain(t: Real, k: Real) -> None:
    t_arr, k_arr = np.asarray(t, dtype=float), np.asarray(k, dtype=float)
    if np.any(~np.isfinite(t_arr)) or np.any(t_arr < -1.0) or np.any(t_arr >= 1.0):
        raise DomainError("t must lie in [-1, 1)", code="BAD_DOMAIN")
    if np.any(~np.isfinite(k_arr)) or np.any(k_arr < 1.0):
        raise DomainError("k must be >= 1", code="BAD_DOMAIN")


def _unpack(t: Union[PhiArgs, Real], k: Optional[Real]) -> Tuple[Real, Real]:
    if isinstance(t, PhiArgs):
        return t.t, t.k
    if k is None:
        raise DomainError("phi needs both t and k", code="BAD_DOMAIN")
    _check_phi_domain(t, k)
    return t, k


def phi(t: Union[PhiArgs, Real], k: Optional[Real] = None) -> Real:
    """sqrt((k+3)^2 - 2(k+3)t + 1) / (1 - t); accepts PhiArgs or (t, k), vectorised"""
    t, k = _unpack(t, k)
    t, k = np.asarray(t, dtype=float), np.asarray(k, dtype=float)
    value = np.sqrt((k + 3.0) ** 2 - 2.0 * (k + 3.0) * t + 1.0) / (1.0 - t)
    return float(value) if value.ndim == 0 else value


def phi_partial_k(t: Union[PhiArgs, Real], k: Optional[Real] = None) -> Real:
    """d phi / dk = (3 + k - t) / ((1 - t) sqrt((k+3)^2 - 2(k+3)t + 1))"""
    t, k = _unpack(t, k)
    t, k = np.asarray(t, dtype=float), np.asarray(k, dtype=float)
    root = np.sqrt((k + 3.0) ** 2 - 2.0 * (k + 3.0) * t + 1.0)
    value = (3.0 + k - t) / ((1.0 - t) * root)
    return float(value) if value.ndim == 0 else value


def _check_extremal_domain(k: Real, theta: Real) -> np.ndarray:
    k_arr = np.asarray(k, dtype=float)
    if np.any(~np.isfinite(k_arr)) or np.any(k_arr < 1.0):
        raise DomainError("k must be >= 1", code="BAD_DOMAIN")
    cos_t = np.cos(np.asarray(theta, dtype=float))
    if np.any(1.0 - cos_t < 1e-15):
        raise DomainError("theta = 0 mod 2*pi puts omega(z0) at the pole", code="BAD_DOMAIN")
    return cos_t


def theorem2_extremal(k: Real, theta: Real) -> Real:
    """2 |k - 1 - e^(i theta)| / |1 - e^(i theta)|^2, bounded below by 1/2"""
    cos_t = _check_extremal_domain(k, theta)
    k = np.asarray(k, dtype=float)
    numerator = np.sqrt((k - 1.0) ** 2 - 2.0 * (k - 1.0) * cos_t + 1.0)
    value = 2.0 * numerator / (2.0 - 2.0 * cos_t)
    return float(value) if value.ndim == 0 else value


def theorem1_extremal(k: Real, theta: Real) -> Real:
    """2 |k + 3 - e^(i theta)| / |1 - e^(i theta)|^2 in complex form; equals phi(cos theta, k)"""
    _check_extremal_domain(k, theta)
    w = np.exp(1j * np.asarray(theta, dtype=float))
    value = 2.0 * np.abs(np.asarray(k, dtype=float) + 3.0 - w) / np.abs(1.0 - w) ** 2
    return float(value) if value.ndim == 0 else value


def theorem3_extremal(k: Real, theta: Real, alpha: float) -> Real:
    """(1 - alpha) * theorem2_extremal(k, theta), bounded below by (1 - alpha)/2"""
    if not (0.0 <= alpha < 1.0):
        raise DomainError(f"alpha must lie in [0, 1), got {alpha!r}", code="BAD_ALPHA")
    value = (1.0 - alpha) * np.asarray(theorem2_extremal(k, theta))
    return float(value) if value.ndim == 0 else value
