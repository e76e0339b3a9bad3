"""Deterministic imputation baselines: hot deck, PPCA-EM, iterative forest."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.ensemble import RandomForestClassifier, RandomForestRegressor

from .data import Dataset
from .schema import CompleteDesign, FeatureSchema, PartialDesign


def _normalized_matrix(schema: FeatureSchema, rows) -> np.ndarray:
    """Rows as floats: numeric min-max normalized, categoricals as codes."""
    out = np.zeros((len(rows), schema.d))
    for i, row in enumerate(rows):
        for j, spec in enumerate(schema.features):
            v = row.values[j]
            if v is None:
                out[i, j] = np.nan
            elif spec.is_numeric:
                out[i, j] = spec.normalize(float(v))
            else:
                out[i, j] = spec.categories.index(v)
    return out


# --- hot deck ----------------------------------------------------------------


def hotdeck_impute(train: Dataset, partial: PartialDesign) -> CompleteDesign:
    """Copy missing values from the closest donor row.

    Distance is averaged over observed positions: normalized absolute
    difference for numeric features, 0/1 mismatch for categorical ones.
    Ties break toward the lowest row index.
    """
    if len(train) == 0:
        raise ValueError("empty training dataset")
    schema = train.schema
    observed = [j for j, o in enumerate(partial.mask.observed) if o]
    best_idx = 0
    if observed:
        best = None
        for i, row in enumerate(train.rows):
            total = 0.0
            for j in observed:
                spec = schema.features[j]
                if spec.is_numeric:
                    total += abs(spec.normalize(float(partial.values[j])) - spec.normalize(float(row.values[j])))
                else:
                    total += 0.0 if partial.values[j] == row.values[j] else 1.0
            dist = total / len(observed)
            if best is None or dist < best:
                best, best_idx = dist, i
    donor = train.rows[best_idx]
    values = [v if o else donor.values[j] for j, (v, o) in enumerate(zip(partial.values, partial.mask.observed))]
    return CompleteDesign.from_values(schema, values)


# --- PPCA ---------------------------------------------------------------------


@dataclass
class PPCAModel:
    schema: FeatureSchema
    numeric_idx: list[int]
    mean: np.ndarray            # over numeric features, normalized space
    weights: np.ndarray         # [d_num, q]
    sigma2: float
    cat_modes: dict[int, str]   # per categorical feature position
    log_likelihoods: list[float]
    converged: bool


def ppca_fit(train: Dataset, q: int | None = None, tol: float = 1e-6, max_iter: int = 200) -> PPCAModel:
    """EM for probabilistic PCA (x = W z + mu + eps) on the numeric features.

    Categorical features do not enter the latent model; they are imputed by
    per-feature mode. Convergence: log-likelihood change below tol.
    """
    if len(train) == 0:
        raise ValueError("empty training dataset")
    schema = train.schema
    numeric_idx = [j for j, f in enumerate(schema.features) if f.is_numeric]
    x = _normalized_matrix(schema, train.rows)[:, numeric_idx]
    n, d = x.shape
    if q is None:
        q = min(8, d - 1) if d > 1 else 1
    q = max(1, min(q, d))
    mu = x.mean(axis=0)
    xc = x - mu
    s = xc.T @ xc / n
    rng = np.random.default_rng(0)
    w = rng.standard_normal((d, q)) * 0.1
    sigma2 = max(float(np.trace(s)) / d, 1e-6)
    lls: list[float] = []
    converged = False
    for _ in range(max_iter):
        m = w.T @ w + sigma2 * np.eye(q)
        m_inv = np.linalg.inv(m)
        sw = s @ w
        w_new = sw @ np.linalg.inv(sigma2 * np.eye(q) + m_inv @ w.T @ sw)
        sigma2_new = float(np.trace(s - sw @ m_inv @ w_new.T)) / d
        w, sigma2 = w_new, max(sigma2_new, 1e-12)
        c = w @ w.T + sigma2 * np.eye(d)
        sign, logdet = np.linalg.slogdet(c)
        ll = -0.5 * n * (d * np.log(2 * np.pi) + logdet + np.trace(np.linalg.solve(c, s)))
        lls.append(float(ll))
        if len(lls) > 1 and abs(lls[-1] - lls[-2]) < tol:
            converged = True
            break
    if not converged:
        warnings.warn("PPCA EM did not converge; returning the best iterate", RuntimeWarning)
    cat_modes: dict[int, str] = {}
    for j, f in enumerate(schema.features):
        if not f.is_numeric:
            counts = [0] * len(f.categories)
            for row in train.rows:
                counts[f.categories.index(row.values[j])] += 1
            cat_modes[j] = f.categories[int(np.argmax(counts))]
    return PPCAModel(
        schema=schema, numeric_idx=numeric_idx, mean=mu, weights=w, sigma2=sigma2,
        cat_modes=cat_modes, log_likelihoods=lls, converged=converged,
    )


def ppca_impute(model: PPCAModel, partial: PartialDesign) -> CompleteDesign:
    """Posterior-mean reconstruction of missing numeric coordinates."""
    schema = model.schema
    values = list(partial.values)
    pos_of = {j: k for k, j in enumerate(model.numeric_idx)}
    miss_num = [j for j in partial.missing_positions if schema.features[j].is_numeric]
    if miss_num:
        obs_num = [j for j in model.numeric_idx if partial.mask.observed[j]]
        if obs_num:
            c = model.weights @ model.weights.T + model.sigma2 * np.eye(len(model.numeric_idx))
            o = [pos_of[j] for j in obs_num]
            m = [pos_of[j] for j in miss_num]
            x_o = np.array([schema.features[j].normalize(float(partial.values[j])) for j in obs_num])
            cond = model.mean[m] + c[np.ix_(m, o)] @ np.linalg.solve(c[np.ix_(o, o)], x_o - model.mean[o])
        else:
            m = [pos_of[j] for j in miss_num]
            cond = model.mean[m]
        for j, v in zip(miss_num, cond):
            spec = schema.features[j]
            lo, hi = spec.numeric_range
            values[j] = min(hi, max(lo, spec.denormalize(float(v))))
    for j in partial.missing_positions:
        if not schema.features[j].is_numeric:
            values[j] = model.cat_modes[j]
    return CompleteDesign.from_values(schema, values)


# --- iterative random forest ---------------------------------------------------


def forest_impute(
    train: Dataset,
    partials: list[PartialDesign],
    rounds: int = 5,
    trees: int = 25,
    max_depth: int = 8,
    seed: int = 0,
) -> list[CompleteDesign]:
    """MissForest-style iterative imputation of a batch of partial rows.

    Missing cells start at the training column mean/mode; each round refits a
    forest per incomplete column (in increasing-missingness order) on the
    complete training data and re-predicts that column's missing cells. Stops
    early when successive imputations change by < 1e-4 normalized difference.
    """
    if len(train) == 0:
        raise ValueError("empty training dataset")
    schema = train.schema
    x_train = _normalized_matrix(schema, train.rows)
    x = _normalized_matrix(schema, partials)
    miss_mask = np.isnan(x)
    col_means = x_train.mean(axis=0)
    for j, spec in enumerate(schema.features):
        fill = col_means[j]
        if not spec.is_numeric:
            vals, counts = np.unique(x_train[:, j], return_counts=True)
            fill = vals[np.argmax(counts)]
        x[miss_mask[:, j], j] = fill
    incomplete = [int(j) for j in np.argsort(miss_mask.sum(axis=0)) if miss_mask[:, j].any()]
    other = {j: [k for k in range(schema.d) if k != j] for j in incomplete}
    for _ in range(rounds):
        prev = x.copy()
        for j in incomplete:
            spec = schema.features[j]
            if spec.is_numeric:
                model = RandomForestRegressor(
                    n_estimators=trees, max_depth=max_depth, max_features="sqrt", random_state=seed
                )
                model.fit(x_train[:, other[j]], x_train[:, j])
            else:
                model = RandomForestClassifier(
                    n_estimators=trees, max_depth=max_depth, max_features="sqrt", random_state=seed
                )
                model.fit(x_train[:, other[j]], x_train[:, j].astype(int))
            pred = model.predict(x[miss_mask[:, j]][:, other[j]])
            x[miss_mask[:, j], j] = pred
        if np.abs(x - prev)[miss_mask].max(initial=0.0) < 1e-4:
            break
    out = []
    for i, partial in enumerate(partials):
        values = list(partial.values)
        for j in np.flatnonzero(miss_mask[i]):
            spec = schema.features[j]
            if spec.is_numeric:
                lo, hi = spec.numeric_range
                values[j] = min(hi, max(lo, spec.denormalize(float(x[i, j]))))
            else:
                values[j] = spec.categories[int(round(x[i, j]))]
        out.append(CompleteDesign.from_values(schema, values))
    return out
