"""Benchmark problems.

The main benchmark factorizes a nonnegative matrix V into inner products of
symmetric factors held near the semidefinite cone: minimize

    sum_ij (V_ij - <A_i, B_j>)^2   subject to  A_i + r*I >= 0,  B_j + r*I >= 0.

The origin (all factors zero) is a stationary point and, for V != 0, a strict
saddle, which makes the problem a sharp test for negative-curvature steps.
Variables pack the upper triangles of all A blocks then all B blocks; the
constraint is one block-diagonal matrix of order q*(m+n) and is affine in x,
so its second derivatives vanish.

Randomness uses the counter-based Philox generator keyed by the seed, so
instances and starting points are reproducible across platforms.

A one-variable analytic problem (linear objective, scalar constraint) with
exact smoothness constants backs the closed-form tests.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import GenerationFailed, InvalidInput
from .linalg import SymMat, spectral_decompose
from .merit import is_strictly_interior
from .problem import Iterate, LipschitzConstants, NsdpProblem

__all__ = [
    "PsfConfig",
    "PsfInstance",
    "generate_psf",
    "PsfProblem",
    "psf_as_nsdp",
    "psf_initial_point",
    "psf_box_lipschitz",
    "ScalarProblem",
    "analytic_scalar_problem",
    "scalar_merit_minimum",
    "save_instance",
    "load_instance",
    "dumps_instance",
    "loads_instance",
]

# Fraction of each block's eigenvalues pushed onto the shifted cone boundary.
_RESET_FRACTION = 0.2

_FORMAT_HEADER = "ncsdp-psf 1"


@dataclass(frozen=True)
class PsfConfig:
    """Instance shape: m row factors, n column factors, block order q,
    cone shift r > 0."""

    m: int = 5
    n: int = 5
    q: int = 4
    r: float = 0.3
    max_attempts: int = 1000

    def __post_init__(self):
        if self.m < 1 or self.n < 1 or self.q < 1:
            raise InvalidInput("m, n, q must all be at least 1")
        if self.q >= min(self.m, self.n):
            raise InvalidInput(
                f"q must be smaller than min(m, n), got q={self.q} "
                f"with m={self.m}, n={self.n}"
            )
        if not (np.isfinite(self.r) and self.r > 0.0):
            raise InvalidInput(f"r must be positive, got {self.r}")
        if self.max_attempts < 1:
            raise InvalidInput("max_attempts must be at least 1")


@dataclass(frozen=True)
class PsfInstance:
    """Generated target matrix with the factors that produced it."""

    config: PsfConfig
    V: np.ndarray  # (m, n), entrywise nonnegative
    truth_A: tuple[np.ndarray, ...] | None
    truth_B: tuple[np.ndarray, ...] | None
    seed: int | None
    attempts: int


def _draw_factor(rng: np.random.Generator, q: int, r: float) -> np.ndarray:
    base = rng.uniform(0.0, 1.0, size=(q, q))
    gram = base @ base.T
    reset = round(_RESET_FRACTION * q)
    if reset == 0:
        return gram
    s = spectral_decompose(gram)
    idx = rng.choice(q, size=reset, replace=False)
    w = s.eigenvalues.copy()
    w[idx] = -r
    u = s.eigenvectors
    return (u * w) @ u.T


def generate_psf(config: PsfConfig, seed: int = 1) -> PsfInstance:
    """Draw factor blocks until the induced target matrix is nonnegative."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    for attempt in range(1, config.max_attempts + 1):
        blocks = [
            _draw_factor(rng, config.q, config.r) for _ in range(config.m + config.n)
        ]
        a_blocks = blocks[: config.m]
        b_blocks = blocks[config.m :]
        v = np.array(
            [[float(np.sum(a * b)) for b in b_blocks] for a in a_blocks]
        )
        if np.all(v >= 0.0):
            return PsfInstance(
                config=config,
                V=v,
                truth_A=tuple(a_blocks),
                truth_B=tuple(b_blocks),
                seed=seed,
                attempts=attempt,
            )
    raise GenerationFailed(
        f"no nonnegative target matrix in {config.max_attempts} attempts (seed {seed})"
    )


def _triangle_indices(q: int) -> list[tuple[int, int]]:
    return [(p, t) for p in range(q) for t in range(p, q)]


def _pack_weights(q: int) -> np.ndarray:
    # Frobenius inner product of symmetric matrices through packed triangles:
    # diagonal entries count once, off-diagonal twice.
    return np.array([1.0 if p == t else 2.0 for (p, t) in _triangle_indices(q)])


def pack_sym(mat: np.ndarray) -> np.ndarray:
    q = mat.shape[0]
    return np.array([mat[p, t] for (p, t) in _triangle_indices(q)])


def unpack_sym(vec: np.ndarray, q: int) -> np.ndarray:
    out = np.zeros((q, q))
    for k, (p, t) in enumerate(_triangle_indices(q)):
        out[p, t] = vec[k]
        out[t, p] = vec[k]
    return out


class PsfProblem(NsdpProblem):
    """The factorization benchmark as a nonlinear semidefinite program.

    The stored L0 is the exact slope of the (affine, block-diagonal)
    constraint map, sqrt(2): it is what the interiority caps and the
    post-step eigenvalue sandwich rely on.  No global L1/L2 exist (the
    objective is a quartic), so fixed step-size mode needs box constants
    from ``psf_box_lipschitz``.
    """

    constraint_is_affine = True

    def __init__(self, instance: PsfInstance):
        cfg = instance.config
        self.instance = instance
        self.q = cfg.q
        self.rows = cfg.m
        self.cols = cfg.n
        self.r = cfg.r
        self.block_size = cfg.q * (cfg.q + 1) // 2
        self.n = self.block_size * (cfg.m + cfg.n)
        self.m = cfg.q * (cfg.m + cfg.n)
        self.V = instance.V
        self.lipschitz = LipschitzConstants(L0=math.sqrt(2.0), L1=None, L2=None)
        self._w = _pack_weights(cfg.q)
        self._stack = self._build_stack()

    def _build_stack(self) -> np.ndarray:
        stack = np.zeros((self.n, self.m, self.m))
        pairs = _triangle_indices(self.q)
        for block in range(self.rows + self.cols):
            off = block * self.q
            for k, (p, t) in enumerate(pairs):
                var = block * self.block_size + k
                stack[var, off + p, off + t] = 1.0
                stack[var, off + t, off + p] = 1.0
        return stack

    def _split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = self.block_size
        a = x[: self.rows * s].reshape(self.rows, s)
        b = x[self.rows * s :].reshape(self.cols, s)
        return a, b

    def _residual(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a, b = self._split(x)
        wb = b * self._w
        return a @ wb.T - self.V, a, b

    def eval_f(self, x: np.ndarray) -> float:
        res, _, _ = self._residual(self.check_x(x))
        return float(np.sum(res**2))

    def eval_grad_f(self, x: np.ndarray) -> np.ndarray:
        res, a, b = self._residual(self.check_x(x))
        wa = a * self._w
        wb = b * self._w
        grad_a = 2.0 * res @ wb
        grad_b = 2.0 * res.T @ wa
        return np.concatenate([grad_a.ravel(), grad_b.ravel()])

    def eval_hess_f(self, x: np.ndarray) -> np.ndarray:
        res, a, b = self._residual(self.check_x(x))
        wa = a * self._w
        wb = b * self._w
        s = self.block_size
        na = self.rows * s
        hess = np.zeros((self.n, self.n))
        blk_a = 2.0 * wb.T @ wb  # shared a_i/a_i diagonal block
        blk_b = 2.0 * wa.T @ wa
        for i in range(self.rows):
            hess[i * s : (i + 1) * s, i * s : (i + 1) * s] = blk_a
        for j in range(self.cols):
            hess[na + j * s : na + (j + 1) * s, na + j * s : na + (j + 1) * s] = blk_b
        w_diag = np.diag(self._w)
        for i in range(self.rows):
            for j in range(self.cols):
                cross = 2.0 * np.outer(wb[j], wa[i]) + 2.0 * res[i, j] * w_diag
                hess[i * s : (i + 1) * s, na + j * s : na + (j + 1) * s] = cross
                hess[na + j * s : na + (j + 1) * s, i * s : (i + 1) * s] = cross.T
        return hess

    def eval_X(self, x: np.ndarray) -> SymMat:
        x = self.check_x(x)
        out = np.zeros((self.m, self.m))
        s = self.block_size
        for block in range(self.rows + self.cols):
            off = block * self.q
            piece = unpack_sym(x[block * s : (block + 1) * s], self.q)
            out[off : off + self.q, off : off + self.q] = piece + self.r * np.eye(self.q)
        return SymMat(out)

    def eval_dX(self, x: np.ndarray, i: int) -> SymMat:
        return SymMat(self._stack[i])

    def eval_d2X(self, x: np.ndarray, i: int, j: int) -> SymMat:
        return SymMat.zeros(self.m)

    def eval_dX_stack(self, x: np.ndarray) -> np.ndarray:
        return self._stack


def psf_as_nsdp(instance: PsfInstance) -> PsfProblem:
    return PsfProblem(instance)


def psf_initial_point(
    prob: PsfProblem, seed: int = 1, mu1: float = 0.3, max_attempts: int = 1000
) -> Iterate:
    """Starting point drawn uniformly from [0, 1e-6) per coordinate, resampled
    until strictly feasible, with the dual on the central path at mu1."""
    if not (np.isfinite(mu1) and mu1 > 0.0):
        raise InvalidInput(f"mu1 must be positive, got {mu1}")
    rng = np.random.Generator(np.random.Philox(key=seed).jumped(1))
    for _ in range(max_attempts):
        x1 = rng.uniform(0.0, 1e-6, size=prob.n)
        x_mat = prob.eval_X(x1)
        if is_strictly_interior(x_mat):
            z1 = SymMat(mu1 * x_mat.inv().mat)
            return Iterate(x=x1, X=x_mat, Z=z1)
    raise GenerationFailed(f"no feasible starting point in {max_attempts} attempts")


def psf_box_lipschitz(prob: PsfProblem, radius: float) -> LipschitzConstants:
    """Smoothness constants valid on the ball ||x||_2 <= radius.

    L0 sums the Frobenius norms of the constant constraint derivatives (the
    form every fixed-mode bound consumes).  The objective is a sum of squared
    bilinear residuals R_ij with constant curvature of operator norm at most
    c = max packing weight, so on the ball: |R| <= c*rho^2/2 + |V_ij| and
    ||grad R|| <= c*rho, giving the quartic's Hessian bound (L1) and
    third-derivative bound (L2) below.
    """
    if not (np.isfinite(radius) and radius > 0.0):
        raise InvalidInput(f"radius must be positive, got {radius}")
    q, s = prob.q, prob.block_size
    blocks = prob.rows + prob.cols
    l0 = blocks * (q + math.sqrt(2.0) * (s - q))
    c = float(prob._w.max())
    mn = prob.rows * prob.cols
    abs_v_sum = float(np.sum(np.abs(prob.V)))
    l1 = 3.0 * mn * c**2 * radius**2 + 2.0 * c * abs_v_sum
    l2 = 6.0 * mn * c**2 * radius
    return LipschitzConstants(L0=l0, L1=l1, L2=l2)


class ScalarProblem(NsdpProblem):
    """minimize c*x subject to x >= 0, with exact constants (1, 0, 0)."""

    n = 1
    m = 1
    constraint_is_affine = True
    lipschitz = LipschitzConstants(L0=1.0, L1=0.0, L2=0.0)

    def __init__(self, c: float):
        if not (np.isfinite(c) and c > 0.0):
            raise InvalidInput(f"c must be positive, got {c}")
        self.c = float(c)

    def eval_f(self, x):
        return self.c * float(self.check_x(x)[0])

    def eval_grad_f(self, x):
        return np.array([self.c])

    def eval_hess_f(self, x):
        return np.zeros((1, 1))

    def eval_X(self, x):
        return SymMat(np.array([[float(self.check_x(x)[0])]]))

    def eval_dX(self, x, i):
        return SymMat(np.ones((1, 1)))

    def eval_d2X(self, x, i, j):
        return SymMat.zeros(1)


def analytic_scalar_problem(c: float = 1.0) -> ScalarProblem:
    return ScalarProblem(c)


def scalar_merit_minimum(c: float, mu: float, nu: float) -> float:
    """Global minimum of the scalar problem's merit: attained at
    x = mu/c, z = c (minimize over z first, then the convex remainder)."""
    if not (c > 0.0 and mu > 0.0 and nu >= 0.0):
        raise InvalidInput("need c > 0, mu > 0, nu >= 0")
    return mu * (1.0 + nu) - mu * math.log(mu / c) - nu * mu * math.log(mu)


# --- portable text serialization ---------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps_instance(inst: PsfInstance) -> str:
    cfg = inst.config
    out = io.StringIO()
    out.write(_FORMAT_HEADER + "\n")
    out.write(f"{cfg.m} {cfg.n} {cfg.q} {_fmt(cfg.r)}\n")
    for row in inst.V:
        out.write(" ".join(_fmt(v) for v in row) + "\n")
    if inst.truth_A is not None and inst.truth_B is not None:
        out.write("ground-truth\n")
        for block in list(inst.truth_A) + list(inst.truth_B):
            for row in block:
                out.write(" ".join(_fmt(v) for v in row) + "\n")
    return out.getvalue()


def loads_instance(text: str) -> PsfInstance:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _FORMAT_HEADER:
        raise InvalidInput(f"not a psf instance file (expected '{_FORMAT_HEADER}')")
    try:
        m_s, n_s, q_s, r_s = lines[1].split()
        cfg = PsfConfig(m=int(m_s), n=int(n_s), q=int(q_s), r=float(r_s))
    except (IndexError, ValueError) as exc:
        raise InvalidInput(f"bad dimensions header: {exc}") from exc
    pos = 2
    try:
        v_rows = [
            np.array([float(tok) for tok in lines[pos + i].split()])
            for i in range(cfg.m)
        ]
        v = np.vstack(v_rows)
    except (IndexError, ValueError) as exc:
        raise InvalidInput(f"bad target matrix row: {exc}") from exc
    if v.shape != (cfg.m, cfg.n):
        raise InvalidInput(f"target matrix has shape {v.shape}, expected {(cfg.m, cfg.n)}")
    if np.any(v < 0.0):
        raise InvalidInput("target matrix must be entrywise nonnegative")
    pos += cfg.m
    truth_a = truth_b = None
    if pos < len(lines) and lines[pos] == "ground-truth":
        pos += 1
        blocks = []
        for _ in range(cfg.m + cfg.n):
            try:
                rows = [
                    np.array([float(tok) for tok in lines[pos + i].split()])
                    for i in range(cfg.q)
                ]
                block = np.vstack(rows)
            except (IndexError, ValueError) as exc:
                raise InvalidInput(f"bad ground-truth block: {exc}") from exc
            if block.shape != (cfg.q, cfg.q):
                raise InvalidInput("ground-truth block has wrong shape")
            blocks.append(block)
            pos += cfg.q
        truth_a = tuple(blocks[: cfg.m])
        truth_b = tuple(blocks[cfg.m :])
    return PsfInstance(
        config=cfg, V=v, truth_A=truth_a, truth_B=truth_b, seed=None, attempts=0
    )


def save_instance(inst: PsfInstance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_instance(inst))


def load_instance(path: str) -> PsfInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_instance(fh.read())
