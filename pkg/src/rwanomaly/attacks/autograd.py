"""Differentiable forward passes for the attack surrogate losses.

The optimization loops live elsewhere and work on numpy vectors; this module
rebuilds the surrogate loss in torch (float64) each epoch and hands back the
gradient with respect to the free perturbation entries (graph space) or the
controlled feature rows (feature space).

Two refresh strategies are supported everywhere:

* ``"alterI"`` - one walk-propagation step per epoch, with the previous
  epoch's similarity vector(s) treated as a constant;
* ``"cf"`` - a full closed-form stationary solve inside every epoch.
"""

from __future__ import annotations

import numpy as np
import torch

VARIANTS = ("alterI", "cf")

_EPS = 1e-300  # guards 0/0 in normalizations; never perturbs finite rows


def _t(x) -> torch.Tensor:
    arr = np.asarray(x, dtype=np.float64)
    if not arr.flags.writeable:  # frozen graph arrays; torch wants writable memory
        arr = arr.copy()
    return torch.as_tensor(arr, dtype=torch.float64)


def row_normalize_t(w: torch.Tensor) -> torch.Tensor:
    row_sums = w.sum(dim=1, keepdim=True)
    return torch.where(row_sums > 0, w / row_sums.clamp_min(_EPS), torch.zeros_like(w))


def propagate_t(p: torch.Tensor, s: torch.Tensor, r: torch.Tensor, alpha: float) -> torch.Tensor:
    return alpha * r + (1.0 - alpha) * (p.T @ s)


def stationary_t(p: torch.Tensor, r: torch.Tensor, alpha: float) -> torch.Tensor:
    n = p.shape[0]
    a = torch.eye(n, dtype=torch.float64) - (1.0 - alpha) * p.T
    return alpha * torch.linalg.solve(a, r)


def bigraph_scores_t(block: torch.Tensor, sources: torch.Tensor, k: int) -> torch.Tensor:
    """Anomaly scores over part V from the weighted U x V block.

    ``sources`` holds one per-source stationary vector per column (shape
    (k+n, k)); the mean neighbor similarity generalizes the binary formula
    by weighting each ordered neighbor pair (i, j) with ``m_iv * m_jv``.
    """
    cross = sources[:k, :].T  # cross[i, j] = similarity of u_j seen from source u_i
    cross = cross - torch.diag(torch.diagonal(cross))
    num = (block * (cross @ block)).sum(dim=0)
    col = block.sum(dim=0)
    den = col**2 - (block**2).sum(dim=0)
    mean_sim = torch.where(den > 0, num / den.clamp_min(_EPS), torch.zeros_like(den))
    return 1.0 - mean_sim


class GraphLoss:
    """Surrogate attack loss over the free perturbation vector.

    Parameters mirror the attack configuration: ``model`` is "prox" or
    "bigraph" (``k`` required for the latter), ``carry`` is the similarity
    state reused by the alterI refresh (a vector for prox, a (k+n, k) matrix
    of per-source vectors for bigraph).
    """

    def __init__(
        self,
        weights: np.ndarray,
        pairs: tuple[np.ndarray, np.ndarray],
        targets,
        alpha: float,
        model: str,
        variant: str,
        lam: float = 0.0,
        carry: np.ndarray | None = None,
        k: int | None = None,
    ):
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if model not in ("prox", "bigraph"):
            raise ValueError("model must be 'prox' or 'bigraph'")
        if model == "bigraph" and k is None:
            raise ValueError("bigraph loss needs the size k of part U")
        self.w0 = _t(weights)
        self.n_total = self.w0.shape[0]
        self.iu = torch.as_tensor(pairs[0], dtype=torch.long)
        self.iv = torch.as_tensor(pairs[1], dtype=torch.long)
        self.targets = torch.as_tensor(np.asarray(list(targets)), dtype=torch.long)
        self.alpha = float(alpha)
        self.model = model
        self.variant = variant
        self.lam = float(lam)
        self.k = k
        if model == "prox":
            self.restart = torch.full((self.n_total,), 1.0 / self.n_total, dtype=torch.float64)
        else:
            self.restart = torch.zeros((self.n_total, k), dtype=torch.float64)
            self.restart[torch.arange(k), torch.arange(k)] = 1.0
        self.carry = None if carry is None else _t(carry)

    def _forward(self, b_vec: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """Returns (loss, refreshed similarity state)."""
        b_full = torch.zeros((self.n_total, self.n_total), dtype=torch.float64)
        b_full = b_full.index_put((self.iu, self.iv), b_vec)
        b_full = b_full + b_full.T
        w = (self.w0 - b_full).abs()
        p = row_normalize_t(w)
        if self.variant == "alterI":
            if self.carry is None:
                raise ValueError("alterI refresh needs a carried similarity state")
            sim = propagate_t(p, self.carry, self.restart, self.alpha)
        else:
            sim = stationary_t(p, self.restart, self.alpha)
        if self.model == "prox":
            scores = 1.0 - sim  # indexed by node
        else:
            block = w[: self.k, self.k :]
            scores = bigraph_scores_t(block, sim, self.k)  # indexed by part-V position
        loss = scores[self.targets].sum() + self.lam * b_vec.sum()
        return loss, sim

    def value(self, b_vec: np.ndarray) -> float:
        """Surrogate loss value only (used by finite-difference oracles)."""
        with torch.no_grad():
            loss, _ = self._forward(_t(b_vec))
        return float(loss)

    def loss_and_grad(self, b_vec: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        """Loss, gradient over the support, and the refreshed similarity state."""
        b_t = _t(b_vec).requires_grad_(True)
        loss, sim = self._forward(b_t)
        (grad,) = torch.autograd.grad(loss, b_t)
        return float(loss.detach()), grad.numpy(), sim.detach().numpy()

    def advance(self, sim_state: np.ndarray) -> None:
        """Install the similarity state produced by the last epoch (alterI)."""
        self.carry = _t(sim_state)

    def scores(self, b_vec: np.ndarray) -> np.ndarray:
        """Anomaly scores under the current surrogate (no gradient)."""
        with torch.no_grad():
            b_full = torch.zeros((self.n_total, self.n_total), dtype=torch.float64)
            b_full = b_full.index_put((self.iu, self.iv), _t(b_vec))
            b_full = b_full + b_full.T
            w = (self.w0 - b_full).abs()
            p = row_normalize_t(w)
            if self.variant == "alterI":
                sim = propagate_t(p, self.carry, self.restart, self.alpha)
            else:
                sim = stationary_t(p, self.restart, self.alpha)
            if self.model == "prox":
                return (1.0 - sim).numpy()
            return bigraph_scores_t(w[: self.k, self.k :], sim, self.k).numpy()


def proximity_weights_t(
    x: torch.Tensor, metric: str, epsilon: float, band: float = 0.05
) -> torch.Tensor:
    """Differentiable epsilon-graph weights with a straight-through band.

    The threshold gate is frozen per evaluation: gradient flows through the
    similarity wherever the gate is open, and additionally through pairs
    whose similarity sits within ``band`` below the threshold (their forward
    weight stays 0, but the pass-through lets the optimizer push them over).
    """
    if metric == "correlation":
        x = x - x.mean(dim=1, keepdim=True)
    norms = torch.linalg.norm(x, dim=1)
    unit = x / norms.clamp_min(_EPS).unsqueeze(1)
    unit = torch.where((norms > 0).unsqueeze(1), unit, torch.zeros_like(unit))
    sims = unit @ unit.T
    gate = (sims > epsilon).double().detach()
    near = ((sims > epsilon - band) & (sims <= epsilon)).double().detach()
    w = sims.clamp(0.0, 1.0) * gate + (sims - sims.detach()) * near
    w = w - torch.diag(torch.diagonal(w))
    return w


class FeatureLoss:
    """Surrogate loss over the features of the controlled rows.

    ``objective="anomaly"`` rebuilds the proximity graph and scores the
    targets (alterI or cf refresh); ``objective="graph"`` matches the
    similarities of guided pairs against their prescribed attacked weights
    and involves no inner walk at all.
    """

    def __init__(
        self,
        x_clean: np.ndarray,
        attack_nodes,
        targets,
        metric: str,
        epsilon: float,
        alpha: float,
        objective: str = "anomaly",
        variant: str = "cf",
        band: float = 0.05,
        carry: np.ndarray | None = None,
        guided_pairs: np.ndarray | None = None,
        guided_weights: np.ndarray | None = None,
    ):
        if objective not in ("anomaly", "graph"):
            raise ValueError("objective must be 'anomaly' or 'graph'")
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        self.x0 = _t(x_clean)
        self.n = self.x0.shape[0]
        self.rows = torch.as_tensor(np.asarray(list(attack_nodes)), dtype=torch.long)
        self.targets = torch.as_tensor(np.asarray(list(targets)), dtype=torch.long)
        self.metric = metric
        self.epsilon = float(epsilon)
        self.alpha = float(alpha)
        self.objective = objective
        self.variant = variant
        self.band = float(band)
        self.carry = None if carry is None else _t(carry)
        self.restart = torch.full((self.n,), 1.0 / self.n, dtype=torch.float64)
        if objective == "graph":
            if guided_pairs is None or guided_weights is None:
                raise ValueError("graph objective needs guided pairs and weights")
            self.guided_pairs = torch.as_tensor(guided_pairs, dtype=torch.long)
            self.guided_weights = _t(guided_weights)

    def _assemble(self, x_free: torch.Tensor) -> torch.Tensor:
        x = self.x0.clone()
        x = x.index_put((self.rows,), x_free)
        return x

    def _forward(self, x_free: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor | None]:
        x = self._assemble(x_free)
        if self.objective == "graph":
            if self.metric == "correlation":
                xc = x - x.mean(dim=1, keepdim=True)
            else:
                xc = x
            norms = torch.linalg.norm(xc, dim=1)
            unit = xc / norms.clamp_min(_EPS).unsqueeze(1)
            unit = torch.where((norms > 0).unsqueeze(1), unit, torch.zeros_like(unit))
            sims = (unit[self.guided_pairs[:, 0]] * unit[self.guided_pairs[:, 1]]).sum(dim=1)
            return (sims - self.guided_weights).abs().sum(), None
        w = proximity_weights_t(x, self.metric, self.epsilon, self.band)
        p = row_normalize_t(w)
        if self.variant == "alterI":
            if self.carry is None:
                raise ValueError("alterI refresh needs a carried similarity state")
            sim = propagate_t(p, self.carry, self.restart, self.alpha)
        else:
            sim = stationary_t(p, self.restart, self.alpha)
        scores = 1.0 - sim
        return scores[self.targets].sum(), sim

    def value(self, x_free: np.ndarray) -> float:
        with torch.no_grad():
            loss, _ = self._forward(_t(x_free))
        return float(loss)

    def loss_and_grad(self, x_free: np.ndarray) -> tuple[float, np.ndarray, np.ndarray | None]:
        x_t = _t(x_free).requires_grad_(True)
        loss, sim = self._forward(x_t)
        (grad,) = torch.autograd.grad(loss, x_t)
        return float(loss.detach()), grad.numpy(), None if sim is None else sim.detach().numpy()

    def advance(self, sim_state: np.ndarray) -> None:
        self.carry = _t(sim_state)
