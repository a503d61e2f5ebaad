"""Multi-task dictionary learning with a shared low-dimensional structure.

K tasks with feature matrices X_k (n_k x m) are factorized jointly:

    J = sum_k ||X_k - C_k D_k||_F^2  +  l1 * sum_k ||C_k||_1
      + l2 * sum_k sum_{a,b} W_ab ||(C_k)_a - (C_k)_b||^2
      + l3 * sum_k ||X_k Q - C_k D||_F^2

subject to Q'Q = I and every row of D and D_k inside the unit ball. D_k is
the per-task dictionary, D the dictionary shared across tasks in the
sd-dimensional subspace spanned by Q's columns, C_k the sparse codes, and W
the cosine-affinity matrix of the task's samples. Minimized by alternating
over C_k, D_k, D, Q; the per-variable solvers below double as standalone ops.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse as sp
from scipy.linalg import eigh
from scipy.sparse import linalg as sp_linalg

from .errors import CodeSolverError, InvalidInputError, NumericalError

logger = logging.getLogger(__name__)

CODE_MAX_ITER = 20_000
DICT_MAX_SWEEPS = 500
RIDGE = 1e-8

MODEL_FORMAT_VERSION = 1


@dataclass
class Hyperparams:
    lambda1: float = 0.1
    lambda2: float = 0.01
    lambda3: float = 1.0
    d: int = 20
    sd: int = 5
    max_sweeps: int = 50
    tol_rel_J: float = 1e-5
    code_tol: float = 1e-6
    seed: int = 0

    def validate(self, m: int | None = None) -> None:
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise InvalidInputError("penalty weights must be nonnegative")
        if self.d < 1 or self.sd < 1:
            raise InvalidInputError("d and sd must be positive integers")
        if self.max_sweeps < 0:
            raise InvalidInputError("max_sweeps must be >= 0")
        if self.tol_rel_J <= 0 or self.code_tol <= 0:
            raise InvalidInputError("tolerances must be > 0")
        if m is not None:
            if self.sd >= m:
                raise InvalidInputError(f"sd ({self.sd}) must be < feature dim m ({m})")
            if self.d > m:
                raise InvalidInputError(f"d ({self.d}) must be <= feature dim m ({m})")

    def to_dict(self) -> dict:
        return {
            "lambda1": self.lambda1, "lambda2": self.lambda2, "lambda3": self.lambda3,
            "d": self.d, "sd": self.sd, "max_sweeps": self.max_sweeps,
            "tol_rel_J": self.tol_rel_J, "code_tol": self.code_tol, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Hyperparams":
        return cls(**{k: data[k] for k in cls().to_dict() if k in data})


@dataclass
class TaskDataset:
    """Per-task feature matrices sharing one feature dimension m.

    Task k (0-based here) carries matrix ``tasks[k]``; ``label_names[k]`` is
    its human-readable class name when known.
    """

    tasks: list[np.ndarray]
    label_names: list[str] | None = None

    def __post_init__(self):
        if not self.tasks:
            raise InvalidInputError("need at least one task")
        self.tasks = [np.asarray(x, dtype=float) for x in self.tasks]
        m = self.tasks[0].shape[1] if self.tasks[0].ndim == 2 else -1
        for i, x in enumerate(self.tasks):
            if x.ndim != 2 or x.shape[0] < 1:
                raise InvalidInputError(f"task {i} must be a nonempty 2-d matrix")
            if x.shape[1] != m:
                raise InvalidInputError(
                    f"task {i} has {x.shape[1]} columns, expected {m}")
        if self.label_names is not None and len(self.label_names) != len(self.tasks):
            raise InvalidInputError("one label name per task required")

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def m(self) -> int:
        return int(self.tasks[0].shape[1])

    @classmethod
    def from_labeled(cls, features: np.ndarray, label_ids, label_names=None) -> "TaskDataset":
        """Group rows of ``features`` by 1-based label id into per-task matrices."""
        features = np.asarray(features, dtype=float)
        ids = np.asarray(label_ids, dtype=int)
        if ids.shape[0] != features.shape[0]:
            raise InvalidInputError("one label per feature row required")
        uniq = sorted(set(int(i) for i in ids))
        if uniq != list(range(1, len(uniq) + 1)):
            raise InvalidInputError(f"label ids must be 1..K without gaps, got {uniq}")
        tasks = [features[ids == k] for k in uniq]
        return cls(tasks, label_names=list(label_names) if label_names else None)


@dataclass
class SparseCodes:
    codes: list[np.ndarray]        # C_k, each n_k x d
    affinities: list[np.ndarray]   # W_k, each n_k x n_k

    def __post_init__(self):
        for c, w in zip(self.codes, self.affinities):
            if c.shape[0] != w.shape[0] or w.shape[0] != w.shape[1]:
                raise InvalidInputError("affinity shape must match code rows")


@dataclass
class Model:
    shared: np.ndarray             # D, d x sd
    task_dicts: list[np.ndarray]   # D_k, each d x m
    projection: np.ndarray         # Q, m x sd, orthonormal columns
    hyper: Hyperparams
    j_trace: list[float]
    label_names: list[str] | None = None
    step_trace: list[tuple[int, str, float]] = field(default_factory=list, repr=False)

    @property
    def n_tasks(self) -> int:
        return len(self.task_dicts)

    @property
    def m(self) -> int:
        return int(self.task_dicts[0].shape[1])


# ---------------------------------------------------------------------------
# Affinity and objective
# ---------------------------------------------------------------------------

def build_affinity(x: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity of the rows of ``x``.

    Zero rows get affinity 0 to everything and 1 to themselves.
    """
    x = np.asarray(x, dtype=float)
    norms = np.linalg.norm(x, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = x / safe[:, None]
    w = unit @ unit.T
    w = (w + w.T) / 2.0
    np.clip(w, -1.0, 1.0, out=w)
    zero = norms == 0
    w[zero, :] = 0.0
    w[:, zero] = 0.0
    np.fill_diagonal(w, 1.0)
    return w


def laplacian(w: np.ndarray) -> np.ndarray:
    return np.diag(w.sum(axis=1)) - w


def smoothness_penalty(c: np.ndarray, w: np.ndarray) -> float:
    """sum_{a,b} W_ab ||c_a - c_b||^2, via the identity 2*tr(C'LC)."""
    return 2.0 * float(np.sum(c * (laplacian(w) @ c)))


def smoothness_penalty_direct(c: np.ndarray, w: np.ndarray) -> float:
    """Same penalty by the literal double sum; oracle counterpart."""
    total = 0.0
    n = c.shape[0]
    for a in range(n):
        for b in range(n):
            diff = c[a] - c[b]
            total += w[a, b] * float(diff @ diff)
    return total


def objective(data: TaskDataset, codes: SparseCodes, model: Model) -> float:
    """Evaluate J for the given dataset, codes, and model factors."""
    h = model.hyper
    if len(codes.codes) != data.n_tasks or model.n_tasks != data.n_tasks:
        raise InvalidInputError("task counts disagree")
    total = 0.0
    for x, c, w, d_k in zip(data.tasks, codes.codes, codes.affinities, model.task_dicts):
        if c.shape != (x.shape[0], model.shared.shape[0]):
            raise InvalidInputError(f"codes must be {x.shape[0]} x {model.shared.shape[0]}")
        if d_k.shape[1] != x.shape[1]:
            raise InvalidInputError("task dictionary and data disagree on m")
        total += float(np.sum((x - c @ d_k) ** 2))
        total += h.lambda1 * float(np.abs(c).sum())
        total += h.lambda2 * smoothness_penalty(c, w)
        total += h.lambda3 * float(np.sum((x @ model.projection - c @ model.shared) ** 2))
    return total


# ---------------------------------------------------------------------------
# Dictionary updates (rows constrained to the unit ball)
# ---------------------------------------------------------------------------

def _project_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    return mat / np.maximum(norms, 1.0)


def _fit_dictionary(y: np.ndarray, c: np.ndarray, d_init: np.ndarray,
                    max_sweeps: int = DICT_MAX_SWEEPS, tol: float = 1e-12) -> np.ndarray:
    """min_D ||Y - C D||_F^2 with each row of D in the unit ball.

    Block coordinate descent over rows. The objective restricted to one row
    is an isotropic quadratic, so projecting its unconstrained minimizer onto
    the ball gives the exact row-wise constrained optimum and the objective
    never increases. Rows whose code column is identically zero stay put.
    """
    a = c.T @ c
    b = c.T @ y
    diag = np.diag(a).copy()
    active = np.nonzero(diag > 0)[0]
    if active.size == 0:
        logger.warning("all-zero codes: dictionary left unchanged")
        return d_init.copy()
    d = d_init.copy()
    prev_obj = None
    for _ in range(max_sweeps):
        for j in active:
            u = d[j] + (b[j] - a[j] @ d) / diag[j]
            nrm = np.linalg.norm(u)
            if nrm > 1.0:
                u = u / nrm
            d[j] = u
        obj = float(np.sum(d * (a @ d)) - 2.0 * np.sum(d * b))
        if prev_obj is not None and prev_obj - obj <= tol * max(1.0, abs(prev_obj)):
            break
        prev_obj = obj
    return d


def update_task_dictionary(x_k: np.ndarray, c_k: np.ndarray,
                           d_init: np.ndarray) -> np.ndarray:
    """Solve min_{D_k} ||X_k - C_k D_k||_F^2 with rows of D_k in the unit ball."""
    return _fit_dictionary(np.asarray(x_k, float), np.asarray(c_k, float), d_init)


def update_shared_dictionary(data: TaskDataset, codes: SparseCodes, q: np.ndarray,
                             d_init: np.ndarray) -> np.ndarray:
    """Solve min_D sum_k ||X_k Q - C_k D||_F^2 with rows of D in the unit ball."""
    stacked_c = np.vstack(codes.codes)
    stacked_y = np.vstack([x @ q for x in data.tasks])
    return _fit_dictionary(stacked_y, stacked_c, d_init)


# ---------------------------------------------------------------------------
# Projection update
# ---------------------------------------------------------------------------

def _canonical_signs(q: np.ndarray) -> np.ndarray:
    """Flip column signs so the largest-magnitude entry is positive."""
    q = q.copy()
    for j in range(q.shape[1]):
        i = int(np.argmax(np.abs(q[:, j])))
        if q[i, j] < 0:
            q[:, j] = -q[:, j]
    return q


def projection_target(data: TaskDataset, codes: SparseCodes,
                      ridge: float = RIDGE) -> np.ndarray:
    """M = sum_k X_k' (I - C_k (C_k'C_k + ridge I)^-1 C_k') X_k, symmetrized."""
    m = data.m
    total = np.zeros((m, m))
    for x, c in zip(data.tasks, codes.codes):
        gram = c.T @ c + ridge * np.eye(c.shape[1])
        ctx = c.T @ x
        total += x.T @ x - ctx.T @ np.linalg.solve(gram, ctx)
    return (total + total.T) / 2.0


def update_projection(data: TaskDataset, codes: SparseCodes, sd: int,
                      ridge: float = RIDGE) -> np.ndarray:
    """Orthonormal Q spanning the sd smallest-eigenvalue directions of M.

    Minimizes tr(Q'MQ) over Q'Q = I; column signs are canonicalized so the
    result is reproducible.
    """
    if sd >= data.m:
        raise InvalidInputError(f"sd ({sd}) must be < m ({data.m})")
    target = projection_target(data, codes, ridge)
    _, vecs = eigh(target)
    return _canonical_signs(vecs[:, :sd])


# ---------------------------------------------------------------------------
# Sparse code update
# ---------------------------------------------------------------------------

def _soft_threshold(mat: np.ndarray, thresh: float) -> np.ndarray:
    return np.sign(mat) * np.maximum(np.abs(mat) - thresh, 0.0)


def _active_set_solve(support, signs, a, b, lap, l1, l2):
    """Exact stationary point for a fixed sign pattern, or None.

    On the support S with signs s the objective is a quadratic; its KKT
    system is solved directly. The caller verifies optimality afterwards, so
    a wrong sign guess is harmless.
    """
    n, nd = b.shape
    rhs = 2.0 * b - l1 * signs
    out = np.zeros((n, nd))
    if lap is None or l2 == 0.0:
        # rows decouple: one small solve per row (lstsq handles collapsed atoms)
        for i in range(n):
            idx = np.nonzero(support[i])[0]
            if idx.size == 0:
                continue
            sub = 2.0 * a[np.ix_(idx, idx)]
            try:
                out[i, idx] = np.linalg.solve(sub, rhs[i, idx])
            except np.linalg.LinAlgError:
                out[i, idx] = np.linalg.lstsq(sub, rhs[i, idx], rcond=None)[0]
        return out if np.all(np.isfinite(out)) else None
    flat = support.ravel()
    if not np.any(flat):
        return out
    system = (sp.kron(sp.eye(n, format="csr"), 2.0 * a, format="csr")
              + sp.kron(4.0 * l2 * lap, sp.eye(nd, format="csr"), format="csr"))
    sub = system[flat][:, flat].tocsc()
    try:
        with np.errstate(all="ignore"):
            sol = sp_linalg.spsolve(sub, rhs.ravel()[flat])
    except RuntimeError:
        return None
    if not np.all(np.isfinite(sol)):
        if sub.shape[0] > 2000:
            return None
        sol = np.linalg.lstsq(sub.toarray(), rhs.ravel()[flat], rcond=None)[0]
        if not np.all(np.isfinite(sol)):
            return None
    out.ravel()[flat] = sol
    return out


def _stationarity_residual(c: np.ndarray, grad: np.ndarray, lambda1: float) -> float:
    """Max violation of the L1 subgradient optimality conditions."""
    nonzero = c != 0
    res = 0.0
    if np.any(nonzero):
        res = float(np.max(np.abs(grad[nonzero] + lambda1 * np.sign(c[nonzero]))))
    zero = ~nonzero
    if np.any(zero):
        res = max(res, float(np.max(np.maximum(np.abs(grad[zero]) - lambda1, 0.0))))
    return res


def _solve_codes(x, d_k, d, q, lap, hyper, c_init=None, lambda3=None,
                 max_iter=CODE_MAX_ITER):
    """Monotone accelerated proximal gradient for the code subproblem.

    Smooth part g(C) = ||X - C D_k||^2 + 2*l2*tr(C'LC) + l3*||XQ - C D||^2,
    plus l1*||C||_1. Iterates until every entry meets the subgradient
    condition within ``hyper.code_tol``. The accepted iterate never has a
    larger objective than the previous one, so a warm start cannot regress.
    """
    l1, l2 = hyper.lambda1, hyper.lambda2
    l3 = hyper.lambda3 if lambda3 is None else lambda3
    n = x.shape[0]
    nd = d_k.shape[0]

    a = d_k @ d_k.T
    if l3 > 0:
        a = a + l3 * (d @ d.T)
        b = x @ d_k.T + l3 * (x @ q) @ d.T
        const = float(np.sum(x * x)) + l3 * float(np.sum((x @ q) ** 2))
    else:
        b = x @ d_k.T
        const = float(np.sum(x * x))

    use_lap = l2 > 0 and lap is not None and np.any(lap)
    a_norm = float(np.max(np.abs(np.linalg.eigvalsh(a)))) if nd > 0 else 0.0
    lap_norm = float(np.max(np.abs(np.linalg.eigvalsh(lap)))) if use_lap else 0.0
    lipschitz = max(2.0 * a_norm + 4.0 * l2 * lap_norm, 1e-12)
    step = 1.0 / lipschitz

    def grad(c):
        g = 2.0 * (c @ a) - 2.0 * b
        if use_lap:
            g += 4.0 * l2 * (lap @ c)
        return g

    def value(c):
        v = float(np.sum((c @ a) * c)) - 2.0 * float(np.sum(c * b)) + const
        if use_lap:
            v += 2.0 * l2 * float(np.sum(c * (lap @ c)))
        return v + l1 * float(np.abs(c).sum())

    x = np.zeros((n, nd)) if c_init is None else np.array(c_init, dtype=float)
    f_x = value(x)
    exit_slack = 1e-12 * max(1.0, abs(f_x))
    y = x.copy()
    t = 1.0
    residual = np.inf
    lap_for_solve = lap if use_lap else None
    for it in range(max_iter):
        z = _soft_threshold(y - step * grad(y), step * l1)
        f_z = value(z)
        if np.isfinite(f_z) and (it % 5 == 0 or it >= max_iter - 2):
            residual = _stationarity_residual(z, grad(z), l1)
            if residual <= hyper.code_tol and f_z <= f_x + exit_slack:
                return z

        # periodically jump to the exact stationary point of the current sign
        # pattern (active-set step); keep it only if it verifies. Skipped when
        # the graph coupling would make the restricted system too large.
        refine = (it + 1) % 25 == 0 and np.all(np.isfinite(z))
        if refine and lap_for_solve is not None and np.count_nonzero(z) > 2000:
            refine = False
        if refine:
            cand = _active_set_solve(z != 0, np.sign(z), a, b,
                                     lap_for_solve, l1, l2)
            if cand is not None:
                f_cand = value(cand)
                if np.isfinite(f_cand):
                    res_cand = _stationarity_residual(cand, grad(cand), l1)
                    if res_cand <= hyper.code_tol and f_cand <= f_x + exit_slack:
                        return cand
                    if f_cand < f_x:
                        x, f_x = cand, f_cand
                        y, t = cand.copy(), 1.0
                        continue

        # monotone acceleration: the incumbent x never worsens, while the
        # momentum keeps following the prox point z
        if np.isfinite(f_z) and f_z <= f_x:
            x_new, f_new = z, f_z
        else:
            x_new, f_new = x, f_x
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        if np.all(np.isfinite(z)):
            y = x_new + (t / t_next) * (z - x_new) + ((t - 1.0) / t_next) * (x_new - x)
            t = t_next
        else:
            y = x_new.copy()
            t = 1.0
        x, f_x = x_new, f_new
    residual = _stationarity_residual(x, grad(x), l1)
    if residual <= hyper.code_tol:
        return x
    raise CodeSolverError(
        f"code solver did not reach tolerance {hyper.code_tol} in {max_iter} "
        f"iterations (residual {residual:.3e})", best=x, residual=residual)


def update_codes(x_k: np.ndarray, d_k: np.ndarray, d: np.ndarray, q: np.ndarray,
                 w_k: np.ndarray, hyper: Hyperparams, c_init: np.ndarray | None = None,
                 max_iter: int = CODE_MAX_ITER) -> np.ndarray:
    """Solve the sparse-code subproblem for one task (see _solve_codes)."""
    x_k = np.asarray(x_k, dtype=float)
    lap = laplacian(np.asarray(w_k, dtype=float)) if hyper.lambda2 > 0 else None
    return _solve_codes(x_k, np.asarray(d_k, float), np.asarray(d, float),
                        np.asarray(q, float), lap, hyper, c_init=c_init,
                        max_iter=max_iter)


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

def _init_factors(data: TaskDataset, hyper: Hyperparams):
    rng = np.random.default_rng(hyper.seed)
    shared = _project_rows(rng.uniform(-1.0, 1.0, size=(hyper.d, hyper.sd)))
    task_dicts = [_project_rows(rng.uniform(-1.0, 1.0, size=(hyper.d, data.m)))
                  for _ in range(data.n_tasks)]
    stacked = np.vstack(data.tasks)
    _, _, vt = np.linalg.svd(stacked, full_matrices=False)
    q = _canonical_signs(vt[:hyper.sd].T)
    codes = [np.zeros((x.shape[0], hyper.d)) for x in data.tasks]
    return shared, task_dicts, q, codes


def train(data: TaskDataset, hyper: Hyperparams,
          affinity_from_codes: bool = False, on_step=None) -> tuple[Model, SparseCodes]:
    """Alternating minimization of J: codes, task dictionaries, shared
    dictionary, then projection, per sweep.

    The projection candidate (smallest-eigenvector update) optimizes a
    surrogate that assumes the shared dictionary re-fits immediately, so it
    is accepted only when it does not increase J; everything else decreases
    J by construction. Stops when the relative J drop falls below
    ``tol_rel_J`` or after ``max_sweeps``. ``affinity_from_codes=True``
    rebuilds each task's affinity from its current codes at the start of
    every sweep (experimental) instead of fixing it from the data.
    ``on_step(sweep, stage, model, codes)`` is invoked after every subproblem
    update, for instrumentation.
    """
    hyper.validate(m=data.m)
    shared, task_dicts, q, code_list = _init_factors(data, hyper)
    affinities = [build_affinity(x) for x in data.tasks]
    laps = [laplacian(w) for w in affinities]

    codes = SparseCodes(code_list, affinities)
    model = Model(shared, task_dicts, q, hyper, j_trace=[], label_names=data.label_names)

    j_cur = objective(data, codes, model)
    model.j_trace.append(j_cur)
    model.step_trace.append((0, "init", j_cur))

    def record(sweep, stage):
        nonlocal j_cur
        j_new = objective(data, codes, model)
        if not np.isfinite(j_new):
            raise NumericalError(f"objective became non-finite at sweep {sweep} ({stage})")
        j_cur = j_new
        model.step_trace.append((sweep, stage, j_new))
        if on_step is not None:
            on_step(sweep, stage, model, codes)

    for sweep in range(1, hyper.max_sweeps + 1):
        if affinity_from_codes and sweep > 1:
            codes.affinities = [build_affinity(c) for c in codes.codes]
            laps = [laplacian(w) for w in codes.affinities]
            j_cur = objective(data, codes, model)

        try:
            for k, x in enumerate(data.tasks):
                codes.codes[k] = _solve_codes(x, model.task_dicts[k], model.shared,
                                              model.projection, laps[k], hyper,
                                              c_init=codes.codes[k])
                record(sweep, f"codes[{k}]")
            for k, x in enumerate(data.tasks):
                model.task_dicts[k] = update_task_dictionary(x, codes.codes[k],
                                                             model.task_dicts[k])
                record(sweep, f"task_dict[{k}]")
        except CodeSolverError as exc:
            raise NumericalError(f"sweep {sweep}: {exc}") from exc

        model.shared = update_shared_dictionary(data, codes, model.projection,
                                                model.shared)
        record(sweep, "shared_dict")

        q_candidate = update_projection(data, codes, hyper.sd)
        j_candidate = objective(data, codes, replace(model, projection=q_candidate))
        if np.isfinite(j_candidate) and j_candidate <= j_cur:
            model.projection = q_candidate
            j_cur = j_candidate
        model.step_trace.append((sweep, "projection", j_cur))
        if on_step is not None:
            on_step(sweep, "projection", model, codes)

        j_prev = model.j_trace[-1]
        model.j_trace.append(j_cur)
        if (j_prev - j_cur) < hyper.tol_rel_J * max(1.0, abs(j_prev)):
            break

    return model, codes


def code_for_samples(x_new: np.ndarray, task: int, model: Model,
                     max_iter: int = CODE_MAX_ITER) -> np.ndarray:
    """Sparse-code new rows against task ``task`` (0-based) of a trained model.

    The affinity is built over the given rows; a single row therefore has no
    smoothness coupling.
    """
    x_new = np.atleast_2d(np.asarray(x_new, dtype=float))
    if x_new.shape[1] != model.m:
        raise InvalidInputError(f"expected {model.m} features, got {x_new.shape[1]}")
    if not 0 <= task < model.n_tasks:
        raise InvalidInputError(f"task index {task} out of range [0, {model.n_tasks})")
    w = build_affinity(x_new)
    return update_codes(x_new, model.task_dicts[task], model.shared,
                        model.projection, w, model.hyper, max_iter=max_iter)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def model_to_dict(model: Model) -> dict:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "hyper": model.hyper.to_dict(),
        "Q": model.projection.tolist(),
        "D": model.shared.tolist(),
        "D_k": [d.tolist() for d in model.task_dicts],
        "j_trace": [float(v) for v in model.j_trace],
    }
    if model.label_names is not None:
        doc["labels"] = list(model.label_names)
    return doc


def model_from_dict(doc: dict) -> Model:
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise InvalidInputError(f"unsupported model version {doc.get('version')!r}")
    return Model(
        shared=np.array(doc["D"], dtype=float),
        task_dicts=[np.array(d, dtype=float) for d in doc["D_k"]],
        projection=np.array(doc["Q"], dtype=float),
        hyper=Hyperparams.from_dict(doc["hyper"]),
        j_trace=list(doc["j_trace"]),
        label_names=list(doc["labels"]) if "labels" in doc else None,
    )


def save_model(path, model: Model) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path) -> Model:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
