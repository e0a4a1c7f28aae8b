"""Inconsistency scoring, percentile fusion, and two-stage selection.

Every unlabeled sample gets a coarse inconsistency (summed per-class
population variance across its augmentation predictions) and a fine
inconsistency (summed KL between coarse and adversarially perturbed
predictions). Both are fused via strict-percentile ranks; the top candidates
are then re-ranked by prediction entropy weighted by mean cosine similarity
to the candidate set.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVectorError, InputShapeError, UsageError
from .model import kl_rows

NORM_FLOOR = 1e-12


@dataclass
class ScoreRecord:
    sample_id: object
    in_coa: float = 0.0
    in_fin: float = 0.0
    phi_coa: float = 0.0
    phi_fin: float = 0.0
    in_total: float = 0.0
    entropy: float = 0.0
    density_entropy: float = None
    representation: np.ndarray = None


def coarse_inconsistency(preds):
    """Summed per-class population variance over the K+1 predictions."""
    P = np.atleast_2d(np.asarray(preds, dtype=float))
    if len(P) < 2:
        raise UsageError("need the original plus at least one augmented prediction")
    return float(P.var(axis=0).sum())


def fine_inconsistency(coarse_preds, perturbed_preds):
    """Sum over variants of KL(coarse prediction || perturbed prediction)."""
    P = np.atleast_2d(np.asarray(coarse_preds, dtype=float))
    Q = np.atleast_2d(np.asarray(perturbed_preds, dtype=float))
    if P.shape != Q.shape:
        raise InputShapeError(f"paired prediction shapes differ: {P.shape} vs {Q.shape}")
    return float(kl_rows(P, Q).sum())


def percentile(value, values):
    """Fraction of the population strictly smaller than value."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise UsageError("empty population")
    return float(np.count_nonzero(values < value)) / values.size


def percentiles(values):
    """Strict-smaller percentile of every element within its own population."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise UsageError("empty population")
    order = np.sort(values)
    ranks = np.searchsorted(order, values, side="left")
    return ranks / values.size


def total_inconsistency(phi_coa, phi_fin, gamma):
    """Convex fusion of the two percentile criteria."""
    if not 0.0 <= gamma <= 1.0:
        raise UsageError(f"gamma {gamma} outside [0, 1]")
    return gamma * phi_coa + (1.0 - gamma) * phi_fin


def entropy(pred):
    """Shannon entropy of a probability vector (natural log)."""
    p = np.asarray(pred, dtype=float)
    if p.ndim != 1 or np.any(p < -1e-9) or abs(p.sum() - 1.0) > 1e-6:
        raise UsageError("not a valid probability simplex")
    p = np.clip(p, 0.0, 1.0)
    terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return float(-terms.sum())


def entropy_rows(P):
    P = np.clip(np.asarray(P, dtype=float), 0.0, 1.0)
    terms = np.where(P > 0, P * np.log(np.where(P > 0, P, 1.0)), 0.0)
    return -terms.sum(axis=-1)


def cosine_similarity(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise InputShapeError("vector dims differ")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu <= NORM_FLOOR or nv <= NORM_FLOOR:
        raise DegenerateVectorError("zero-norm vector has no direction")
    return float(u @ v / (nu * nv))


def density_aware_entropy(target_rep, target_entropy, candidate_reps):
    """Entropy re-weighted by mean cosine similarity to the candidate set.

    The mean runs over all candidates including the target itself; zero-norm
    candidates are dropped (with a warning) and the denominator shrinks.
    """
    reps = np.atleast_2d(np.asarray(candidate_reps, dtype=float))
    if len(reps) < 1:
        raise UsageError("need at least one candidate")
    target = np.asarray(target_rep, dtype=float)
    tn = np.linalg.norm(target)
    if tn <= NORM_FLOOR:
        raise DegenerateVectorError("target representation has zero norm")
    norms = np.linalg.norm(reps, axis=1)
    good = norms > NORM_FLOOR
    if not good.all():
        warnings.warn(
            f"dropping {np.count_nonzero(~good)} zero-norm candidate(s) "
            "from the density sum"
        )
    reps, norms = reps[good], norms[good]
    if len(reps) == 0:
        raise UsageError("no usable candidates in the density sum")
    sims = reps @ target / (norms * tn)
    return float(target_entropy * sims.mean())


def _density_factors(reps):
    """Mean pairwise cosine similarity of each row to the whole set."""
    norms = np.linalg.norm(reps, axis=1)
    good = norms > NORM_FLOOR
    if not good.all():
        warnings.warn(
            f"dropping {np.count_nonzero(~good)} zero-norm representation(s) "
            "from the density sum"
        )
    unit = np.zeros_like(reps)
    unit[good] = reps[good] / norms[good, None]
    m_eff = max(int(good.sum()), 1)
    mean_unit = unit[good].sum(axis=0) / m_eff
    factors = unit @ mean_unit
    factors[~good] = 0.0
    return factors


def select(records, m_cand, budget, use_density=True):
    """Two-stage selection: top-m_cand by fused inconsistency, then top-budget
    by density-aware entropy computed over exactly that candidate set.

    Ties break by ascending sample id at both stages. Mutates the chosen
    records' density_entropy fields. Returns the selected ids in rank order.
    """
    if budget > m_cand:
        raise UsageError(f"budget {budget} exceeds candidate size {m_cand}")
    if m_cand > len(records):
        raise UsageError(f"m_cand {m_cand} exceeds pool size {len(records)}")
    stage1 = sorted(records, key=lambda r: (-r.in_total, r.sample_id))[:m_cand]
    reps = np.stack([np.asarray(r.representation, dtype=float) for r in stage1])
    factors = _density_factors(reps) if use_density else np.ones(len(stage1))
    for r, f in zip(stage1, factors):
        r.density_entropy = float(r.entropy * f)
    stage2 = sorted(stage1, key=lambda r: (-r.density_entropy, r.sample_id))[:budget]
    return [r.sample_id for r in stage2]
