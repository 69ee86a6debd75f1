"""Matrix-product-state Born machine over fixed-length bitstrings.

A model is a chain of order-3 real tensors (left bond, physical bit, right
bond); the probability of a bitstring is the squared contraction amplitude.
Training minimizes weighted negative log-likelihood by two-site gradient
sweeps: adjacent tensors are merged, updated along the gradient, and split
back by a truncated SVD that caps the bond dimension. Sampling is exact and
ancestral using canonical forms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PROB_FLOOR = 1e-300  # guards log of underflowing probabilities
AMP_FLOOR = 1e-150  # sqrt of PROB_FLOOR, guards 1/psi in gradients

MPS_FORMAT = "lineopt-mps/1"


@dataclass(frozen=True)
class TrainParams:
    sweeps: int = 10
    learning_rate: float = 0.05
    chi_max: int = 6
    svd_cutoff: float = 1e-10  # singular values below cutoff * largest are dropped
    init_scale: float = 0.1

    def __post_init__(self):
        if self.chi_max < 1:
            raise ValueError("chi_max must be >= 1")
        if self.sweeps < 1 or self.learning_rate <= 0:
            raise ValueError("sweeps must be >= 1 and learning_rate positive")


@dataclass
class WeightedDataset:
    """Bitstrings with positive weights normalized to sum to one."""

    items: list[tuple[str, float]]

    def __post_init__(self):
        if not self.items:
            raise ValueError("dataset is empty")
        n = len(self.items[0][0])
        total = 0.0
        for bits, w in self.items:
            if len(bits) != n:
                raise ValueError("dataset bitstrings differ in length")
            if set(bits) - {"0", "1"}:
                raise ValueError(f"not a bitstring: {bits!r}")
            if w <= 0:
                raise ValueError("weights must be positive")
            total += w
        if not math.isclose(total, 1.0, rel_tol=1e-9):
            self.items = [(b, w / total) for b, w in self.items]

    @property
    def n_sites(self) -> int:
        return len(self.items[0][0])

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        data = np.array([[int(c) for c in bits] for bits, _ in self.items], dtype=np.int64)
        weights = np.array([w for _, w in self.items])
        return data, weights


class MPSModel:
    """Born machine state: tensors, bond cap, and canonical center."""

    def __init__(self, tensors: list[np.ndarray], chi_max: int, center: int | None = None):
        if not tensors:
            raise ValueError("need at least one tensor")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have dimension 1")
        for a, b in zip(tensors, tensors[1:]):
            if a.shape[2] != b.shape[0]:
                raise ValueError("adjacent tensors disagree on bond dimension")
        self.tensors = tensors
        self.chi_max = chi_max
        self.center = center

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    def bond_dimensions(self) -> tuple[int, ...]:
        return tuple(t.shape[2] for t in self.tensors[:-1])

    def copy(self) -> "MPSModel":
        return MPSModel([t.copy() for t in self.tensors], self.chi_max, self.center)


def init_mps(n_sites: int, params: TrainParams, rng: np.random.Generator) -> MPSModel:
    """Random model, right-canonicalized and normalized (center at site 0)."""
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    dims = [1]
    for k in range(1, n_sites):
        dims.append(min(params.chi_max, 2 ** k, 2 ** (n_sites - k)))
    dims.append(1)
    tensors = [
        rng.uniform(-params.init_scale, params.init_scale, size=(dims[k], 2, dims[k + 1]))
        for k in range(n_sites)
    ]
    model = MPSModel(tensors, params.chi_max)
    right_canonicalize(model)
    return model


# ---------------------------------------------------------------------------
# canonical forms
# ---------------------------------------------------------------------------

def _absorb_left(v: np.ndarray, sel: np.ndarray) -> np.ndarray:
    """(B, l) x (l, B, r) -> (B, r), one site absorbed into left environments."""
    return np.matmul(v[:, None, :], sel.transpose(1, 0, 2))[:, 0, :]


def _absorb_right(sel: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(l, B, r) x (B, r) -> (B, l), one site absorbed into right environments."""
    return np.matmul(sel.transpose(1, 0, 2), v[:, :, None])[:, :, 0]


def right_canonicalize(model: MPSModel) -> None:
    """Make every tensor except site 0 right-isometric; normalize the center."""
    tensors = model.tensors
    for k in range(model.n_sites - 1, 0, -1):
        l, p, r = tensors[k].shape
        mat = tensors[k].reshape(l, p * r)
        # RQ via transposed QR: mat = (q r)^T with orthonormal rows in q^T
        q, rmat = np.linalg.qr(mat.T)
        rank = q.shape[1]
        tensors[k] = q.T.reshape(rank, p, r)
        tensors[k - 1] = np.tensordot(tensors[k - 1], rmat, axes=([2], [1]))
    norm = np.linalg.norm(tensors[0])
    if norm == 0:
        raise ValueError("zero-norm model cannot be normalized")
    tensors[0] = tensors[0] / norm
    model.center = 0


def canonical_residual(model: MPSModel) -> float:
    """Largest deviation from the isometry conditions around the center."""
    if model.center is None:
        return math.inf
    worst = 0.0
    for k, t in enumerate(model.tensors):
        l, p, r = t.shape
        if k < model.center:
            gram = t.reshape(l * p, r)
            worst = max(worst, float(np.abs(gram.T @ gram - np.eye(r)).max()))
        elif k > model.center:
            gram = t.reshape(l, p * r)
            worst = max(worst, float(np.abs(gram @ gram.T - np.eye(l)).max()))
    return worst


def norm_squared(model: MPSModel) -> float:
    """<psi|psi> by full transfer-matrix contraction."""
    env = np.ones((1, 1))
    for t in model.tensors:
        half = np.tensordot(env, t, axes=(0, 0))  # (m, d, r)
        env = np.tensordot(half, t, axes=([0, 1], [0, 1]))  # (r, s)
    return float(env[0, 0])


# ---------------------------------------------------------------------------
# amplitudes, probabilities, loss
# ---------------------------------------------------------------------------

def _bits_array(bits: str, n_sites: int) -> np.ndarray:
    if len(bits) != n_sites:
        raise ValueError(f"bitstring length {len(bits)} != model sites {n_sites}")
    return np.array([int(c) for c in bits], dtype=np.int64)

def amplitude(model: MPSModel, bits: str) -> float:
    x = _bits_array(bits, model.n_sites)
    v = np.ones(1)
    for k, t in enumerate(model.tensors):
        v = v @ t[:, x[k], :]
    return float(v[0])


def amplitudes(model: MPSModel, data: np.ndarray) -> np.ndarray:
    """Amplitudes of many bitstrings, rows of ``data``."""
    B = data.shape[0]
    v = np.ones((B, 1))
    for k, t in enumerate(model.tensors):
        v = _absorb_left(v, t[:, data[:, k], :])
    return v[:, 0]


def probability(model: MPSModel, bits: str) -> float:
    """Born probability of one bitstring (model assumed normalized)."""
    a = amplitude(model, bits)
    return a * a


def loss(model: MPSModel, dataset: WeightedDataset) -> float:
    """Weighted negative log-likelihood; probabilities floored at 1e-300."""
    data, weights = dataset.arrays()
    return _nll(amplitudes(model, data), weights)


def _nll(amps: np.ndarray, weights: np.ndarray) -> float:
    probs = np.maximum(amps * amps, PROB_FLOOR)
    return float(-(weights * np.log(probs)).sum())


# ---------------------------------------------------------------------------
# two-site training
# ---------------------------------------------------------------------------

def merge_pair(model: MPSModel, k: int) -> np.ndarray:
    """Order-4 tensor of sites k and k+1."""
    return np.tensordot(model.tensors[k], model.tensors[k + 1], axes=(2, 0))


def merged_nll_gradient(
    merged: np.ndarray,
    left_env: np.ndarray,
    right_env: np.ndarray,
    x1: np.ndarray,
    x2: np.ndarray,
    weights: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Loss and gradient of the weighted NLL with respect to the merged
    two-site tensor, with the normalization term written explicitly as
    ||merged||^2."""
    sel = merged[:, x1, x2, :]  # (l, B, r)
    psi = (_absorb_left(left_env, sel) * right_env).sum(axis=1)
    znorm = float(np.vdot(merged, merged))
    probs = np.maximum(psi * psi, PROB_FLOOR * znorm)
    value = float(-(weights * (np.log(probs) - math.log(znorm))).sum())

    safe = np.where(np.abs(psi) < AMP_FLOOR, np.where(psi < 0, -AMP_FLOOR, AMP_FLOOR), psi)
    coef = weights / safe
    grad = np.zeros_like(merged)
    for a in (0, 1):
        for b in (0, 1):
            mask = (x1 == a) & (x2 == b)
            if mask.any():
                grad[:, a, b, :] = (left_env[mask] * coef[mask, None]).T @ right_env[mask]
    grad = -2.0 * grad + (2.0 / znorm) * merged
    return value, grad


def _split_pair(
    model: MPSModel, k: int, merged: np.ndarray, going_right: bool, params: TrainParams
) -> None:
    """SVD the merged tensor back into sites k, k+1, truncating to chi_max and
    dropping singular values below cutoff; the canonical center moves one site
    in the sweep direction."""
    l, p1, p2, r = merged.shape
    u, s, vt = np.linalg.svd(merged.reshape(l * p1, p2 * r), full_matrices=False)
    keep = int(min(model.chi_max, (s >= params.svd_cutoff * s[0]).sum(), s.size))
    keep = max(keep, 1)
    u, s, vt = u[:, :keep], s[:keep], vt[:keep]
    s_norm = np.linalg.norm(s)
    s = s / s_norm  # kept weight renormalized so the model stays unit norm
    if going_right:
        model.tensors[k] = u.reshape(l, p1, keep)
        model.tensors[k + 1] = (s[:, None] * vt).reshape(keep, p2, r)
        model.center = k + 1
    else:
        model.tensors[k] = (u * s).reshape(l, p1, keep)
        model.tensors[k + 1] = vt.reshape(keep, p2, r)
        model.center = k


def _sweep_once(
    model: MPSModel,
    data: np.ndarray,
    weights: np.ndarray,
    params: TrainParams,
    lr: float,
) -> None:
    """One full pass: left-to-right then right-to-left over all adjacent pairs."""
    n = model.n_sites
    B = data.shape[0]
    # right environments from current (right-canonical beyond center) tensors
    right_envs: list[np.ndarray | None] = [None] * (n + 1)
    right_envs[n] = np.ones((B, 1))
    for k in range(n - 1, 1, -1):
        sel = model.tensors[k][:, data[:, k], :]
        right_envs[k] = _absorb_right(sel, right_envs[k + 1])
    left_envs: list[np.ndarray | None] = [None] * (n + 1)
    left_envs[0] = np.ones((B, 1))

    def step(k: int, going_right: bool) -> None:
        merged = merge_pair(model, k)
        _, grad = merged_nll_gradient(
            merged, left_envs[k], right_envs[k + 2], data[:, k], data[:, k + 1], weights
        )
        merged = merged - lr * grad
        norm = np.linalg.norm(merged)
        if norm == 0 or not np.isfinite(norm):
            raise FloatingPointError("merged tensor became degenerate during training")
        merged /= norm
        _split_pair(model, k, merged, going_right, params)

    for k in range(n - 1):
        step(k, going_right=True)
        sel = model.tensors[k][:, data[:, k], :]
        left_envs[k + 1] = _absorb_left(left_envs[k], sel)
    for k in range(n - 2, -1, -1):
        step(k, going_right=False)
        sel = model.tensors[k + 1][:, data[:, k + 1], :]
        right_envs[k + 1] = _absorb_right(sel, right_envs[k + 2])


def train(
    model: MPSModel, dataset: WeightedDataset, params: TrainParams
) -> tuple[MPSModel, list[float]]:
    """Gradient-sweep training on a weighted dataset.

    Runs up to ``params.sweeps`` accepted passes. A pass that raises the
    loss is reverted and retried with the learning rate halved, so the
    recorded history is non-increasing; training stops early once the rate
    underflows. Returns the model (mutated in place) and the loss history,
    whose first entry is the pre-training loss.
    """
    if model.n_sites < 2:
        raise ValueError("training needs at least 2 sites")
    if dataset.n_sites != model.n_sites:
        raise ValueError("dataset bitstring length differs from model sites")
    if model.center != 0:
        right_canonicalize(model)
    data, weights = dataset.arrays()
    history = [_nll(amplitudes(model, data), weights)]
    if not math.isfinite(history[0]):
        raise FloatingPointError("non-finite loss before training")
    lr = params.learning_rate
    accepted = 0
    attempts = 0
    while accepted < params.sweeps and attempts < 20 * params.sweeps:
        attempts += 1
        snapshot = [t.copy() for t in model.tensors]
        center = model.center
        _sweep_once(model, data, weights, params, lr)
        value = _nll(amplitudes(model, data), weights)
        if not math.isfinite(value):
            raise FloatingPointError("non-finite loss during training")
        if value <= history[-1] + 1e-12:
            history.append(value)
            accepted += 1
        else:
            model.tensors = snapshot
            model.center = center
            lr *= 0.5
            if lr < 1e-12:
                break
    return model, history


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample(model: MPSModel, count: int, rng: np.random.Generator) -> list[str]:
    """Exact ancestral samples from the Born distribution.

    Sites are sampled left to right from conditional marginals; draws are
    one uniform batch per site, so a fixed seed reproduces the sample list.
    """
    if count < 1:
        return []
    work = model
    if work.center != 0:
        work = model.copy()
        right_canonicalize(work)
    S = count
    v = np.ones((S, 1))
    bits = np.empty((S, work.n_sites), dtype=np.int64)
    for k, t in enumerate(work.tensors):
        v0 = v @ t[:, 0, :]
        v1 = v @ t[:, 1, :]
        w0 = (v0 * v0).sum(axis=1)
        w1 = (v1 * v1).sum(axis=1)
        p1 = w1 / (w0 + w1)
        choose1 = rng.random(S) < p1
        bits[:, k] = choose1
        v = np.where(choose1[:, None], v1, v0)
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        v = v / np.maximum(norms, 1e-300)
    return ["".join("1" if b else "0" for b in row) for row in bits]


# ---------------------------------------------------------------------------
# serialization (structured text, bit-exact for float64)
# ---------------------------------------------------------------------------

def dumps_mps(model: MPSModel) -> str:
    doc = {
        "format": MPS_FORMAT,
        "n_sites": model.n_sites,
        "chi_max": model.chi_max,
        "center": model.center,
        "tensors": [
            {"shape": list(t.shape), "data": t.reshape(-1).tolist()}
            for t in model.tensors
        ],
    }
    # json renders float64 via repr, which round-trips bit-exactly
    return json.dumps(doc, indent=1)


def loads_mps(text: str) -> MPSModel:
    doc = json.loads(text)
    if doc.get("format") != MPS_FORMAT:
        raise ValueError(f"not a {MPS_FORMAT} document")
    tensors = []
    for entry in doc["tensors"]:
        shape = tuple(entry["shape"])
        data = np.array(entry["data"], dtype=np.float64).reshape(shape)
        tensors.append(data)
    if len(tensors) != doc["n_sites"]:
        raise ValueError("tensor count differs from n_sites")
    return MPSModel(tensors, int(doc["chi_max"]), doc.get("center"))


def save_mps(model: MPSModel, path: str | Path) -> None:
    Path(path).write_text(dumps_mps(model))


def load_mps(path: str | Path) -> MPSModel:
    return loads_mps(Path(path).read_text())
