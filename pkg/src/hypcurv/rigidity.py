"""Rigidity checks: Ricci-null directions, curvature constancy, and the global verdict.

On a surface with nonnegative Ricci curvature and n >= 3, a zero eigenvalue of the
Ricci operator singles out a principal direction whose curvature must equal the
smaller root (H - sqrt(H^2 - 4(n-1))) / 2, and the spectrum splits into a
multiplicity-1 curvature kappa_0 and its reciprocal with multiplicity n-1.  Constancy
of that split across samples, combined with a two-point recession set, certifies an
equidistant tube; the all-ones spectrum certifies a horosphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg

from .curvature import (cluster_kappas, commutation_residual, fundamental_forms,
                        ricci_from_shape, shape_spectrum)
from .errors import HypothesisContradiction, ParameterError, PreconditionError
from .heightfield import HeightField, Jet2

__all__ = [
    "Verdict", "RigidityReport", "NullDirectionReport", "ConstancyScan",
    "flat_direction_check", "constancy_scan", "classify_global",
    "min_ricci_eigenvalue", "rigidity_report",
    "commutation_residual", "verdict_report",
]

#: absolute eigenvalue threshold below which a Ricci eigenvalue counts as null
RICCI_NULL_TOL = 1e-6
#: max |kappa_0 * kappa_t - 1| accepted by the tube verdict
TUBE_PRODUCT_TOL = 1e-6
#: across-sample variance accepted as "constant" by the tube verdict
CONSTANCY_VAR_TOL = 1e-10
#: |kappa - 1| accepted by the horosphere verdict
UMBILIC_ONE_TOL = 1e-8


class Verdict(Enum):
    EQUIDISTANT_TUBE = "EquidistantTube"
    HOROSPHERE = "Horosphere"
    SINGLE_END_CANDIDATE = "SingleEndCandidate"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class NullDirectionReport:
    """Ricci-null eigendirections at one jet and their principal alignment."""

    null_space_dim: int
    null_kappas: np.ndarray       # curvature of each null direction
    principal_alignment: float    # worst angle to the nearest principal eigenspace (rad)
    kappa0: float                 # curvature along the null space (nan if empty)
    kappa0_expected: float        # smaller quadratic root (nan if H^2 < 4(n-1))
    mean: float


@dataclass(frozen=True)
class ConstancyScan:
    """Split-spectrum statistics across a sample set."""

    kappa0_var: float
    kappa_t_var: float
    max_product_defect: float
    kappa0_mean: float
    kappa_t_mean: float
    split_ok: bool
    umbilic: bool
    umbilic_value: float
    samples: int


@dataclass(frozen=True)
class RigidityReport:
    null_space_dim: int
    kappa0: float
    kappa0_expected: float
    principal_alignment: float
    kappa_variance: tuple
    verdict: Verdict


def _smaller_root(H: float, n: int) -> float:
    disc = H * H - 4.0 * (n - 1)
    if disc < 0:
        return math.nan
    return (H - math.sqrt(disc)) / 2.0


def flat_direction_check(jet: Jet2, n: int, ric_tol: float = RICCI_NULL_TOL) -> NullDirectionReport:
    """Extract Ricci-null directions and compare their curvature to the smaller root.

    Requires n >= 3 and a pointwise nonnegative Ricci spectrum (floor -ric_tol); an
    empty null space is a valid outcome, not an error.
    """
    if n < 3:
        raise ParameterError("flat-direction analysis requires n >= 3")
    forms = fundamental_forms(jet)
    spec = shape_spectrum(jet, forms)
    ric = ricci_from_shape(spec, forms, n)
    eigvals, eigvecs = scipy.linalg.eigh(ric, forms.metric)
    if eigvals[0] < -ric_tol:
        raise PreconditionError(
            f"surface has negative Ricci eigenvalue {eigvals[0]:.3e} at this point")
    null_idx = np.nonzero(np.abs(eigvals) <= ric_tol)[0]
    if null_idx.size == 0:
        return NullDirectionReport(0, np.empty(0), 0.0, math.nan,
                                   _smaller_root(spec.mean, n), spec.mean)

    clusters = cluster_kappas(spec.kappas)
    g = forms.metric
    null_kappas = []
    worst_angle = 0.0
    for idx in null_idx:
        v = eigvecs[:, idx]
        null_kappas.append(float(v @ spec.second_form @ v))
        # angle to the nearest principal eigenspace, via the g-orthogonal residual
        best = math.pi / 2
        for cl in clusters:
            E = spec.frame[:, cl]
            resid = v - E @ (E.T @ g @ v)
            sin_angle = min(1.0, math.sqrt(max(0.0, float(resid @ g @ resid))))
            best = min(best, math.asin(sin_angle))
        worst_angle = max(worst_angle, best)
    null_kappas = np.asarray(null_kappas)
    return NullDirectionReport(int(null_idx.size), null_kappas, worst_angle,
                               float(null_kappas[0]), _smaller_root(spec.mean, n),
                               spec.mean)


def constancy_scan(field: HeightField, samples, n: int) -> ConstancyScan:
    """Cluster the curvature spectrum at each sample and measure constancy.

    With the {1, n-1} split present everywhere, returns across-sample variances of
    both clusters and the worst reciprocal-product defect.  A degenerate single
    cluster is reported as umbilic; any other structure sets split_ok False.
    """
    kappa0s, kappa_ts = [], []
    umbilic_vals = []
    split_ok = True
    count = 0
    for x in samples:
        jet = field.jet(x)
        spec = shape_spectrum(jet, fundamental_forms(jet))
        clusters = cluster_kappas(spec.kappas)
        count += 1
        if len(clusters) == 1:
            umbilic_vals.extend(spec.kappas.tolist())
            continue
        if len(clusters) == 2 and {len(c) for c in clusters} == {1, n - 1}:
            single = clusters[0] if len(clusters[0]) == 1 else clusters[1]
            rest = clusters[1] if len(clusters[0]) == 1 else clusters[0]
            kappa0s.append(float(spec.kappas[single[0]]))
            kappa_ts.extend(spec.kappas[rest].tolist())
            continue
        split_ok = False
    if umbilic_vals and not kappa0s:
        vals = np.asarray(umbilic_vals)
        return ConstancyScan(float(np.var(vals)), float(np.var(vals)), math.nan,
                             float(np.mean(vals)), float(np.mean(vals)),
                             False, True, float(np.mean(vals)), count)
    if not kappa0s or umbilic_vals:
        return ConstancyScan(math.nan, math.nan, math.nan, math.nan, math.nan,
                             False, False, math.nan, count)
    k0 = np.asarray(kappa0s)
    kt = np.asarray(kappa_ts)
    defect = float(np.max(np.abs(np.repeat(k0, n - 1) * kt - 1.0)))
    return ConstancyScan(float(np.var(k0)), float(np.var(kt)), defect,
                         float(np.mean(k0)), float(np.mean(kt)),
                         split_ok, False, math.nan, count)


def min_ricci_eigenvalue(jet: Jet2, n: int) -> float:
    """Smallest eigenvalue of the Ricci operator at one jet."""
    forms = fundamental_forms(jet)
    spec = shape_spectrum(jet, forms)
    ric = ricci_from_shape(spec, forms, n)
    return float(scipy.linalg.eigh(ric, forms.metric, eigvals_only=True)[0])


def classify_global(constancy: ConstancyScan, boundary_points: int, n: int,
                    nonneg_ricci: bool = False,
                    product_tol: float = TUBE_PRODUCT_TOL,
                    var_tol: float = CONSTANCY_VAR_TOL) -> Verdict:
    """Combine spectrum constancy with the recession-set count into a global verdict.

    More than two boundary points on a surface asserted to have nonnegative Ricci
    curvature contradicts the classification and raises HypothesisContradiction.
    """
    if boundary_points > 2 and nonneg_ricci:
        raise HypothesisContradiction(
            f"{boundary_points} boundary points on a nonnegative-Ricci surface")
    if constancy.umbilic and abs(constancy.umbilic_value - 1.0) <= UMBILIC_ONE_TOL:
        return Verdict.HOROSPHERE
    if (boundary_points == 2 and constancy.split_ok
            and constancy.max_product_defect <= product_tol
            and constancy.kappa0_var <= var_tol
            and constancy.kappa_t_var <= var_tol):
        return Verdict.EQUIDISTANT_TUBE
    if boundary_points == 1:
        return Verdict.SINGLE_END_CANDIDATE
    return Verdict.INCONCLUSIVE


def rigidity_report(field: HeightField, samples, boundary_points: int, n: int,
                    nonneg_ricci: bool = False,
                    ric_tol: float = RICCI_NULL_TOL) -> RigidityReport:
    """Full rigidity analysis: null directions at the samples, constancy, verdict."""
    scan = constancy_scan(field, samples, n)
    dim = 0
    kappa0 = math.nan
    kappa0_exp = math.nan
    alignment = 0.0
    for x in samples:
        frag = flat_direction_check(field.jet(x), n, ric_tol)
        if frag.null_space_dim > 0:
            dim = frag.null_space_dim
            kappa0 = frag.kappa0
            kappa0_exp = frag.kappa0_expected
            alignment = max(alignment, frag.principal_alignment)
    verdict = classify_global(scan, boundary_points, n, nonneg_ricci)
    return RigidityReport(dim, kappa0, kappa0_exp, alignment,
                          (scan.kappa0_var, scan.kappa_t_var), verdict)


def verdict_report(constancy: ConstancyScan, boundary_points: int, n: int,
                   nonneg_ricci: bool = False) -> dict:
    """Verdict JSON payload."""
    verdict = classify_global(constancy, boundary_points, n, nonneg_ricci)
    kappa0 = constancy.umbilic_value if constancy.umbilic else constancy.kappa0_mean
    kappa_t = constancy.umbilic_value if constancy.umbilic else constancy.kappa_t_mean
    return {
        "verdict": verdict.value,
        "kappa0": kappa0,
        "kappa_transverse": kappa_t,
        "variances": [constancy.kappa0_var, constancy.kappa_t_var],
        "boundary_points": boundary_points,
    }
