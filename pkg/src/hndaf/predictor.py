"""UE throughput predictor: ridge-regularised linear autoregression.

The synthetic traces are generated per UE on a common time grid.  Features
are kept in normalised units (location and RAN load in [0, 1], signal
strength around 0..1) while throughput is in Mbps.  Each UE ``u`` follows::

    loc_t    = clip(loc_{t-1} + N(0, loc_step^2), 0, 1)           (x and y)
    ran_t    = clip(0.5 + ran_ar * (ran_{t-1} - 0.5) + N(0, ran_std^2), 0, 1)
    signal_t = sig_bias + sig_x * x_t + sig_y * y_t + N(0, sig_std^2)
    thr_t    = offset_u + base * (1 + gx * x_t + gy * y_t)
               + c_ran * ran_t + c_signal * signal_t
               + sum_i ar[i] * thr_{t-1-i} + N(0, noise^2)

Samples are interleaved by time (index = t * n_ues + u), so the 80/20 split
by index is a split in time that covers every UE.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .engine import Rng


class FeatureSet(enum.Enum):
    D5 = "D5"  # ue id, ran status, ue location, signal strength, past throughput
    D3 = "D3"  # ue id, signal strength, past throughput


@dataclass(frozen=True)
class ThroughputSample:
    ue_id: int
    ran_status: float
    ue_location: tuple[float, float]
    signal_strength: float
    past_throughput: tuple[float, ...]
    current_throughput: float


@dataclass(frozen=True)
class SyntheticParams:
    n_ues: int = 8
    lags: int = 3
    loc_step: float = 0.05
    ran_ar: float = 0.8
    ran_std: float = 0.1
    sig_bias: float = 0.6
    sig_x: float = -0.3
    sig_y: float = 0.2
    sig_std: float = 0.1
    ue_offset_std: float = 3.0
    base: float = 20.0
    gx: float = 0.8
    gy: float = -0.5
    c_ran: float = -15.0
    c_signal: float = 10.0
    ar: tuple[float, ...] = (0.5, 0.2, 0.1)
    noise: float = 2.0
    warmup: int = 50

    def __post_init__(self):
        if self.lags < 1:
            raise ValueError("lags must be >= 1")
        if len(self.ar) != self.lags:
            raise ValueError("need one AR coefficient per lag")


@dataclass(frozen=True)
class Dataset:
    samples: tuple[ThroughputSample, ...]
    n_ues: int
    lags: int
    train_fraction: float = 0.8

    @property
    def split(self) -> int:
        return int(len(self.samples) * self.train_fraction)

    @property
    def train(self) -> tuple[ThroughputSample, ...]:
        return self.samples[: self.split]

    @property
    def test(self) -> tuple[ThroughputSample, ...]:
        return self.samples[self.split :]


def generate_synthetic_dataset(
    n: int, rng: Rng, params: SyntheticParams = SyntheticParams()
) -> Dataset:
    if n < 100:
        raise ValueError(f"need at least 100 samples, got {n}")
    p = params
    steps = math.ceil(n / p.n_ues)
    state = []
    for _ in range(p.n_ues):
        offset = rng.normal(0.0, p.ue_offset_std)
        loc = [rng.random(), rng.random()]
        ran = rng.random()
        hist = [0.0] * p.lags  # most recent first
        state.append([offset, loc, ran, hist])

    samples = []
    for t in range(-p.warmup, steps):
        for u, st in enumerate(state):
            offset, loc, ran, hist = st
            x = min(1.0, max(0.0, loc[0] + rng.normal(0.0, p.loc_step)))
            y = min(1.0, max(0.0, loc[1] + rng.normal(0.0, p.loc_step)))
            ran = min(1.0, max(0.0, 0.5 + p.ran_ar * (ran - 0.5) + rng.normal(0.0, p.ran_std)))
            signal = p.sig_bias + p.sig_x * x + p.sig_y * y + rng.normal(0.0, p.sig_std)
            thr = (
                offset
                + p.base * (1.0 + p.gx * x + p.gy * y)
                + p.c_ran * ran
                + p.c_signal * signal
                + sum(a * h for a, h in zip(p.ar, hist))
                + (rng.normal(0.0, p.noise) if p.noise else 0.0)
            )
            if t >= 0:
                samples.append(
                    ThroughputSample(u, ran, (x, y), signal, tuple(hist), thr)
                )
            st[1], st[2], st[3] = [x, y], ran, [thr] + hist[:-1]
    return Dataset(tuple(samples[:n]), p.n_ues, p.lags)


def feature_names(feature_set: FeatureSet, n_ues: int, lags: int) -> list[str]:
    # ue 0 is the reference category, so the design stays full rank with a bias
    names = [f"ue_{u}" for u in range(1, n_ues)]
    if feature_set is FeatureSet.D5:
        names += ["ran_status", "loc_x", "loc_y"]
    names += ["signal_strength"] + [f"lag_{i + 1}" for i in range(lags)]
    return names


def design_matrix(
    samples, feature_set: FeatureSet, n_ues: int, lags: int
) -> np.ndarray:
    rows = []
    for s in samples:
        row = [1.0 if s.ue_id == u else 0.0 for u in range(1, n_ues)]
        if feature_set is FeatureSet.D5:
            row += [s.ran_status, s.ue_location[0], s.ue_location[1]]
        row.append(s.signal_strength)
        row.extend(s.past_throughput[:lags])
        rows.append(row)
    return np.asarray(rows, dtype=float).reshape(len(rows), -1)


def targets(samples) -> np.ndarray:
    return np.array([s.current_throughput for s in samples], dtype=float)


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # feature weights followed by the bias
    ridge_lambda: float
    feature_set: FeatureSet
    columns: tuple[str, ...] = field(default=())
    n_ues: int = 1
    lags: int = 1

    @property
    def bias(self) -> float:
        return float(self.weights[-1])

    def coef(self, column: str) -> float:
        return float(self.weights[self.columns.index(column)])

    def serialized_size(self) -> int:
        return self.weights.astype(np.float64).nbytes


def fit_ridge(X: np.ndarray, y: np.ndarray, ridge_lambda: float) -> np.ndarray:
    """Solve the ridge normal equations with an unpenalised intercept.

    Returns ``[w..., b]`` minimising ``|Xw + b - y|^2 + lambda |w|^2``.
    """
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be non-negative")
    if len(y) < 2:
        raise ValueError("need at least two training rows")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    A = Xc.T @ Xc + ridge_lambda * np.eye(X.shape[1])
    rhs = Xc.T @ (y - y_mean)
    if ridge_lambda == 0 and np.linalg.matrix_rank(A) < A.shape[0]:
        raise np.linalg.LinAlgError(
            "normal equations are singular with ridge_lambda = 0; use ridge_lambda > 0"
        )
    w = np.linalg.solve(A, rhs)
    return np.append(w, y_mean - x_mean @ w)


def train(dataset: Dataset, feature_set: FeatureSet, ridge_lambda: float = 0.0) -> LinearModel:
    X = design_matrix(dataset.train, feature_set, dataset.n_ues, dataset.lags)
    y = targets(dataset.train)
    weights = fit_ridge(X, y, ridge_lambda)
    cols = tuple(feature_names(feature_set, dataset.n_ues, dataset.lags))
    return LinearModel(weights, ridge_lambda, feature_set, cols, dataset.n_ues, dataset.lags)


def _check(model: LinearModel, feature_set: FeatureSet) -> None:
    if feature_set is not model.feature_set:
        raise ValueError(
            f"model was trained on {model.feature_set.value}, not {feature_set.value}"
        )


def predict_many(model: LinearModel, samples, feature_set: FeatureSet) -> np.ndarray:
    _check(model, feature_set)
    X = design_matrix(samples, feature_set, model.n_ues, model.lags)
    return X @ model.weights[:-1] + model.weights[-1]


def predict(model: LinearModel, sample: ThroughputSample, feature_set: FeatureSet) -> float:
    return float(predict_many(model, [sample], feature_set)[0])


def error_metrics(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[float, float, float]:
    if len(y_true) == 0:
        raise ValueError("empty evaluation split")
    err = np.asarray(y_pred, dtype=float) - np.asarray(y_true, dtype=float)
    mse = float(np.mean(err**2))
    return mse, float(np.mean(np.abs(err))), math.sqrt(mse)


def evaluate(model: LinearModel, test, feature_set: FeatureSet) -> tuple[float, float, float]:
    """Return ``(mse, mae, rmse)`` of ``model`` on ``test``."""
    test = list(test)
    if not test:
        raise ValueError("empty evaluation split")
    return error_metrics(targets(test), predict_many(model, test, feature_set))


def objective(weights: np.ndarray, X: np.ndarray, y: np.ndarray, ridge_lambda: float) -> float:
    """Mean squared error plus the ridge penalty, scaled by 1/n."""
    resid = X @ weights[:-1] + weights[-1] - y
    return float((resid @ resid + ridge_lambda * weights[:-1] @ weights[:-1]) / len(y))


def feature_study(n: int, seeds, ridge_lambda: float = 1e-6, params: SyntheticParams = SyntheticParams()):
    """Test-split errors for D5 and D3 on fresh datasets; one row per (set, seed)."""
    rows = []
    for seed in seeds:
        data = generate_synthetic_dataset(n, Rng(seed), params)
        for fs in (FeatureSet.D5, FeatureSet.D3):
            mse, mae, rmse = evaluate(train(data, fs, ridge_lambda), data.test, fs)
            rows.append({"feature_set": fs.value, "seed": seed, "mse": mse, "mae": mae, "rmse": rmse})
    return rows
