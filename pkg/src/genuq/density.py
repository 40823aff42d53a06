"""Density-based epistemic scores on hidden-state embeddings.

A Gaussian is fitted on training embeddings (population covariance plus a
ridge term); the uncertainty of a new embedding is its squared Mahalanobis
distance to the centroid. Variants: background-corrected (subtract the
distance under a general-domain fit) and robust (PCA projection followed
by a minimum-covariance-determinant fit, scored in the reduced space).

The hybrid combiner turns a density score and an information score into
calibration-set quantile ranks and interpolates them; it depends on the
scores only through their ranks.

Persistence format (little-endian, 64-bit reals, row-major matrices):

    magic b"GENUQDF1" | version u16 | section count u16 | sections
    section := role u8 (1 primary, 2 background, 3 reduced-robust) + body
    gaussian body := dim u32 | degenerate u8 | reg f64 | mu f64[dim]
                     | sigma f64[dim^2] | sigma_inv f64[dim^2]
    rde body      := input_dim u32 | target_dim u32 | explained f64
                     | pca_mean f64[input_dim]
                     | projection f64[input_dim*target_dim] | gaussian body
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import InputError, InsufficientDataError, NumericError, ShapeError

MAGIC = b"GENUQDF1"
FORMAT_VERSION = 1

DEFAULT_REG_SCALE = 1e-6
DEFAULT_SUPPORT_FRACTION = 0.75
MCD_RESTARTS = 50
MCD_MAX_STEPS = 20
INVERSE_TOL = 1e-4


@dataclass(frozen=True)
class GaussianFit:
    mu: np.ndarray
    sigma: np.ndarray
    sigma_inv: np.ndarray
    dim: int
    reg: float
    degenerate: bool = False


@dataclass(frozen=True)
class RdeFit:
    projection: np.ndarray  # (input_dim, target_dim), orthonormal columns
    pca_mean: np.ndarray
    reduced_fit: GaussianFit
    explained_variance: float


@dataclass(frozen=True)
class HuqConfig:
    """Interpolation weight and calibration scores for the hybrid score."""

    alpha: float = 0.5
    calibration_density: tuple[float, ...] = ()
    calibration_info: tuple[float, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        nd, ni = len(self.calibration_density), len(self.calibration_info)
        if nd != ni or nd < 10:
            raise InputError(
                f"calibration lists must have equal length >= 10, got {nd}/{ni}")


def _as_matrix(embeddings) -> np.ndarray:
    x = np.asarray(embeddings, float)
    if x.ndim != 2:
        raise InputError(f"expected a 2-D array of embeddings, got shape {x.shape}")
    return x


def _invert_spd(sigma: np.ndarray, reg: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(sigma)
    if vals.min() <= max(vals.max(), 1.0) * 1e-13:
        raise NumericError(
            f"covariance is singular (min eigenvalue {vals.min():.3g}); "
            f"increase reg (currently {reg:.3g})")
    inv = (vecs / vals) @ vecs.T
    if np.abs(inv @ sigma - np.eye(sigma.shape[0])).max() > INVERSE_TOL:
        raise NumericError(
            "covariance inversion failed the identity check; increase reg")
    return inv


def fit_gaussian(embeddings, reg: float | None = None) -> GaussianFit:
    """Centroid + population covariance (+ reg * I) of training embeddings.

    reg=None picks DEFAULT_REG_SCALE * trace(cov)/dim (with an absolute
    floor for zero-variance data); an explicit reg, including 0, is used
    verbatim and singularity then raises NumericError.
    """
    x = _as_matrix(embeddings)
    n, dim = x.shape
    if n < 2:
        raise InsufficientDataError(f"need at least 2 embeddings, got {n}")
    mu = x.mean(axis=0)
    centered = x - mu
    sigma = centered.T @ centered / n
    trace = float(np.trace(sigma))
    degenerate = trace <= 1e-15
    if reg is None:
        reg = DEFAULT_REG_SCALE * trace / dim
        if degenerate:
            reg = DEFAULT_REG_SCALE
    if degenerate:
        sigma = reg * np.eye(dim)
    else:
        sigma = sigma + reg * np.eye(dim)
    sigma_inv = _invert_spd(sigma, reg)
    return GaussianFit(mu=mu, sigma=sigma, sigma_inv=sigma_inv, dim=dim,
                       reg=float(reg), degenerate=degenerate)


def mahalanobis(fit: GaussianFit, h) -> float:
    """Squared Mahalanobis distance of an embedding to the fit centroid."""
    v = np.asarray(h, float)
    if v.shape != (fit.dim,):
        raise ShapeError(f"embedding shape {v.shape} != fit dim ({fit.dim},)")
    d = v - fit.mu
    return max(0.0, float(d @ fit.sigma_inv @ d))


def relative_mahalanobis(fit: GaussianFit, background: GaussianFit, h) -> float:
    """In-domain distance minus general-domain distance."""
    if fit.dim != background.dim:
        raise ShapeError(
            f"fit dims differ: {fit.dim} vs {background.dim}")
    return mahalanobis(fit, h) - mahalanobis(background, h)


def _subset_moments(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = x.mean(axis=0)
    c = x - mu
    return mu, c.T @ c / x.shape[0]


def fit_mcd_gaussian(embeddings, support_fraction: float = DEFAULT_SUPPORT_FRACTION,
                     seed: int = 0, reg: float | None = None,
                     n_restarts: int = MCD_RESTARTS,
                     max_steps: int = MCD_MAX_STEPS) -> GaussianFit:
    """Robust Gaussian fit via fast minimum-covariance-determinant search.

    Repeats from random size-h subsets (h = ceil(support_fraction * N)),
    each refined by concentration steps: refit on the subset, re-select
    the h points of smallest Mahalanobis distance, stop when the
    covariance determinant stops decreasing. The lowest-determinant subset
    wins. support_fraction=1.0 degenerates to the plain empirical fit.
    Deterministic for a given seed.
    """
    x = _as_matrix(embeddings)
    n, dim = x.shape
    if n < 2:
        raise InsufficientDataError(f"need at least 2 embeddings, got {n}")
    h = math.ceil(support_fraction * n)
    h = min(max(h, dim + 1), n)
    if h >= n:
        return fit_gaussian(x, reg)

    rng = np.random.default_rng(seed)
    jitter = 1e-12 * np.eye(dim)

    def log_det(sigma: np.ndarray) -> float:
        sign, val = np.linalg.slogdet(sigma + jitter)
        return val if sign > 0 else math.inf

    best_subset, best_det = None, math.inf
    for _ in range(n_restarts):
        subset = rng.choice(n, size=h, replace=False)
        prev_det = math.inf
        for _ in range(max_steps):
            mu, sigma = _subset_moments(x[subset])
            det = log_det(sigma)
            if det >= prev_det - 1e-12:
                break
            prev_det = det
            try:
                inv = np.linalg.inv(sigma + jitter)
            except np.linalg.LinAlgError:
                break
            d = x - mu
            md = np.einsum("ij,jk,ik->i", d, inv, d)
            subset = np.argsort(md, kind="stable")[:h]
        final_det = log_det(_subset_moments(x[subset])[1])
        if final_det < best_det:
            best_det, best_subset = final_det, np.sort(subset)

    if best_subset is None:
        raise NumericError("all robust-subset fits were singular")
    return fit_gaussian(x[best_subset], reg)


def fit_rde(embeddings, target_dim: int,
            mcd_support_fraction: float = DEFAULT_SUPPORT_FRACTION,
            seed: int = 0, reg: float | None = None) -> RdeFit:
    """PCA projection to target_dim, then a robust fit in reduced space."""
    x = _as_matrix(embeddings)
    n, dim = x.shape
    if not 0 < target_dim < dim:
        raise InputError(f"target_dim must be in (0, {dim}), got {target_dim}")
    if n <= target_dim + 1:
        raise InsufficientDataError(
            f"need more than {target_dim + 1} embeddings, got {n}")
    pca_mean = x.mean(axis=0)
    centered = x - pca_mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    projection = vt[:target_dim].T
    total_var = float((svals ** 2).sum())
    explained = (float((svals[:target_dim] ** 2).sum()) / total_var
                 if total_var > 0 else 1.0)
    reduced = centered @ projection
    reduced_fit = fit_mcd_gaussian(reduced, mcd_support_fraction, seed, reg)
    return RdeFit(projection=projection, pca_mean=pca_mean,
                  reduced_fit=reduced_fit, explained_variance=explained)


def rde_score(fit: RdeFit, h) -> float:
    """Project the embedding and score it in the reduced space."""
    v = np.asarray(h, float)
    if v.shape != fit.pca_mean.shape:
        raise ShapeError(
            f"embedding shape {v.shape} != fit dim {fit.pca_mean.shape}")
    return mahalanobis(fit.reduced_fit, (v - fit.pca_mean) @ fit.projection)


def _quantile_rank(values: tuple[float, ...], score: float) -> float:
    return sum(1 for v in values if v <= score) / len(values)


def huq_combine(cfg: HuqConfig, density_score: float, info_score: float) -> float:
    """Interpolated calibration-quantile ranks of the two scores."""
    r_d = _quantile_rank(cfg.calibration_density, density_score)
    r_i = _quantile_rank(cfg.calibration_info, info_score)
    return cfg.alpha * r_d + (1.0 - cfg.alpha) * r_i


# ---------------------------------------------------------------------------
# Persistence


@dataclass(frozen=True)
class DensityArtifacts:
    """Everything the density estimators need at scoring time."""

    fit: GaussianFit | None = None
    background: GaussianFit | None = None
    rde: RdeFit | None = None


def _pack_gaussian(fit: GaussianFit) -> bytes:
    head = struct.pack("<IBd", fit.dim, int(fit.degenerate), fit.reg)
    return (head + fit.mu.astype("<f8").tobytes()
            + fit.sigma.astype("<f8").tobytes()
            + fit.sigma_inv.astype("<f8").tobytes())


def _unpack_gaussian(buf: bytes, pos: int) -> tuple[GaussianFit, int]:
    dim, degenerate, reg = struct.unpack_from("<IBd", buf, pos)
    pos += struct.calcsize("<IBd")

    def take(count: int) -> np.ndarray:
        nonlocal pos
        arr = np.frombuffer(buf, "<f8", count=count, offset=pos).copy()
        pos += count * 8
        return arr

    mu = take(dim)
    sigma = take(dim * dim).reshape(dim, dim)
    sigma_inv = take(dim * dim).reshape(dim, dim)
    return GaussianFit(mu=mu, sigma=sigma, sigma_inv=sigma_inv, dim=dim,
                       reg=reg, degenerate=bool(degenerate)), pos


def save_density_artifacts(artifacts: DensityArtifacts, path: str) -> None:
    sections: list[bytes] = []
    if artifacts.fit is not None:
        sections.append(b"\x01" + _pack_gaussian(artifacts.fit))
    if artifacts.background is not None:
        sections.append(b"\x02" + _pack_gaussian(artifacts.background))
    if artifacts.rde is not None:
        r = artifacts.rde
        in_dim, t_dim = r.projection.shape
        body = struct.pack("<IId", in_dim, t_dim, r.explained_variance)
        body += r.pca_mean.astype("<f8").tobytes()
        body += r.projection.astype("<f8").tobytes()
        body += _pack_gaussian(r.reduced_fit)
        sections.append(b"\x03" + body)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HH", FORMAT_VERSION, len(sections)))
        for s in sections:
            fh.write(s)


def load_density_artifacts(path: str) -> DensityArtifacts:
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:8] != MAGIC:
        raise InputError(f"{path}: not a density-artifact file")
    version, count = struct.unpack_from("<HH", buf, 8)
    if version != FORMAT_VERSION:
        raise InputError(f"{path}: unsupported format version {version}")
    pos = 12
    fit = background = rde = None
    for _ in range(count):
        role = buf[pos]
        pos += 1
        if role in (1, 2):
            g, pos = _unpack_gaussian(buf, pos)
            if role == 1:
                fit = g
            else:
                background = g
        elif role == 3:
            in_dim, t_dim, explained = struct.unpack_from("<IId", buf, pos)
            pos += struct.calcsize("<IId")
            pca_mean = np.frombuffer(buf, "<f8", count=in_dim, offset=pos).copy()
            pos += in_dim * 8
            projection = np.frombuffer(
                buf, "<f8", count=in_dim * t_dim, offset=pos
            ).copy().reshape(in_dim, t_dim)
            pos += in_dim * t_dim * 8
            reduced, pos = _unpack_gaussian(buf, pos)
            rde = RdeFit(projection=projection, pca_mean=pca_mean,
                         reduced_fit=reduced, explained_variance=explained)
        else:
            raise InputError(f"{path}: unknown section role {role}")
    return DensityArtifacts(fit=fit, background=background, rde=rde)
