"""Bilevel problem data: upper objective, parametric lower-level smooth part,
extra regularizers, and the synthetic elastic-net instance family.

A problem bundles
    f(w)                       upper objective (value/grad/hess),
    G(w, lam_bar) = g(w) + sum_{j>=2} lam_j R_j(w)   smooth lower-level part,
    R_2 .. R_r                 the differentiable regularizers,
and optionally a default RegSpec for the nonsmooth R_1.  Solvers receive the
RegSpec separately so one problem can be swept over smoothing kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .penalties import Penalty
from .regularizer import RegSpec

__all__ = [
    "SmoothFn",
    "BilevelProblem",
    "ElasticNetInstance",
    "make_elastic_net",
    "problem_from_instance",
    "gen_synthetic",
    "derive_instance_seed",
    "save_instance",
    "load_instance",
]


@dataclass(frozen=True)
class SmoothFn:
    """A twice differentiable function given by callables."""

    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class BilevelProblem:
    """Problem data for the smoothing bilevel solver.

    regs holds R_2 .. R_r (length r - 1); lam_bar passed to the G callables
    is the vector (lam_2, ..., lam_r).
    """

    n: int
    r: int
    f: SmoothFn
    G_value: Callable[[np.ndarray, np.ndarray], float]
    G_grad: Callable[[np.ndarray, np.ndarray], np.ndarray]
    G_hess: Callable[[np.ndarray, np.ndarray], np.ndarray]
    regs: tuple[SmoothFn, ...] = ()
    reg_spec: Optional[RegSpec] = None

    def __post_init__(self):
        if self.r < 1:
            raise ValueError(f"need r >= 1 regularizers, got r={self.r}")
        if len(self.regs) != self.r - 1:
            raise ValueError(
                f"regs must hold r-1={self.r - 1} entries, got {len(self.regs)}"
            )


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ElasticNetInstance:
    """Synthetic validation/training split for the elastic-net bilevel problem.

    Upper objective is half the squared validation residual on (A1, b1);
    the lower level fits (A2, b2) under an lp-quasi-norm plus ridge penalty.
    theta is the planted coefficient vector whose first floor(n/2) entries
    are zero.  Arrays are frozen after construction.
    """

    A1: np.ndarray
    b1: np.ndarray
    A2: np.ndarray
    b2: np.ndarray
    theta: np.ndarray
    p: float
    seed: int = 0

    def __post_init__(self):
        for name in ("A1", "b1", "A2", "b2", "theta"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        m1, n = self.A1.shape
        m2, n2 = self.A2.shape
        if n != n2 or self.b1.shape != (m1,) or self.b2.shape != (m2,):
            raise ValueError("instance arrays have inconsistent shapes")
        if self.theta.shape != (n,):
            raise ValueError("theta length must match the column count")

    @property
    def n(self) -> int:
        return self.A1.shape[1]

    @property
    def m1(self) -> int:
        return self.A1.shape[0]

    @property
    def m2(self) -> int:
        return self.A2.shape[0]


def make_elastic_net(
    A1: np.ndarray,
    b1: np.ndarray,
    A2: np.ndarray,
    b2: np.ndarray,
    p: float,
    penalty: Penalty,
    smooth=None,
) -> BilevelProblem:
    """Assemble the elastic-net bilevel problem (r = 2, R_2 = ||w||^2).

    f(w) = 0.5 ||A1 w - b1||^2,  G(w, lam2) = 0.5 ||A2 w - b2||^2 + lam2 ||w||^2.
    Gram matrices are precomputed once.
    """
    A1 = np.asarray(A1, dtype=float)
    b1 = np.asarray(b1, dtype=float)
    A2 = np.asarray(A2, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    m1, n = A1.shape
    if A2.ndim != 2 or A2.shape[1] != n:
        raise ValueError("A1 and A2 must have the same number of columns")
    if b1.shape != (m1,) or b2.shape != (A2.shape[0],):
        raise ValueError("right-hand side length must match the row count")

    gram1 = A1.T @ A1
    A1tb1 = A1.T @ b1
    gram2 = A2.T @ A2
    A2tb2 = A2.T @ b2
    eye = np.eye(n)

    f = SmoothFn(
        value=lambda w: 0.5 * float(np.sum((A1 @ w - b1) ** 2)),
        grad=lambda w: gram1 @ w - A1tb1,
        hess=lambda w: gram1,
    )
    r2 = SmoothFn(
        value=lambda w: float(w @ w),
        grad=lambda w: 2.0 * w,
        hess=lambda w: 2.0 * eye,
    )

    def g_value(w, lam_bar):
        return 0.5 * float(np.sum((A2 @ w - b2) ** 2)) + lam_bar[0] * float(w @ w)

    def g_grad(w, lam_bar):
        return gram2 @ w - A2tb2 + 2.0 * lam_bar[0] * w

    def g_hess(w, lam_bar):
        return gram2 + 2.0 * lam_bar[0] * eye

    reg_spec = None
    if smooth is not None:
        reg_spec = RegSpec(p=p, penalty=penalty, smooth=smooth)
    return BilevelProblem(
        n=n,
        r=2,
        f=f,
        G_value=g_value,
        G_grad=g_grad,
        G_hess=g_hess,
        regs=(r2,),
        reg_spec=reg_spec,
    )


def problem_from_instance(
    instance: ElasticNetInstance, penalty: Penalty, smooth=None
) -> BilevelProblem:
    return make_elastic_net(
        instance.A1, instance.b1, instance.A2, instance.b2, instance.p, penalty, smooth
    )


def derive_instance_seed(seed: int, index: int) -> int:
    """Deterministic per-instance seed: SeedSequence hash of (seed, index)."""
    return int(np.random.SeedSequence((int(seed), int(index))).generate_state(1, np.uint64)[0])


def gen_synthetic(
    n: int, m1: int, m2: int, noise: float = 0.01, seed: int = 0, p: float = 1.0
) -> ElasticNetInstance:
    """Generate a synthetic instance with a half-sparse planted vector.

    Entries of A1 and A2 are uniform on (0, 1); theta has floor(n/2) zeros
    followed by entries 10 * uniform(0, 1); b1 = A1 theta is noiseless and
    b2 = A2 theta + noise * uniform(-1, 1).  Draws come from a Philox
    counter-based generator keyed by the 64-bit seed, in the fixed order
    A1, A2, theta, noise vector.
    """
    if min(n, m1, m2) < 1:
        raise ValueError("dimensions must be positive")
    rng = np.random.Generator(np.random.Philox(seed))
    A1 = rng.random((m1, n))
    A2 = rng.random((m2, n))
    theta = np.concatenate([np.zeros(n // 2), 10.0 * rng.random(n - n // 2)])
    b1 = A1 @ theta
    b2 = A2 @ theta + noise * (2.0 * rng.random(m2) - 1.0)
    return ElasticNetInstance(A1=A1, b1=b1, A2=A2, b2=b2, theta=theta, p=p, seed=int(seed))


# --- flat CSV serialization --------------------------------------------

_FORMAT_TAG = "elastic-net-instance-v1"


def _write_matrix(lines: list[str], name: str, arr: np.ndarray) -> None:
    lines.append(name)
    mat = np.atleast_2d(arr)
    for row in mat:
        lines.append(",".join(format(v, ".17g") for v in row))


def save_instance(instance: ElasticNetInstance, path: Union[str, Path]) -> None:
    """Write an instance as flat CSV: a header line with dims, p and seed,
    then each array row-major with full float precision."""
    lines = [
        f"# {_FORMAT_TAG}",
        "n,m1,m2,p,seed",
        f"{instance.n},{instance.m1},{instance.m2},{format(instance.p, '.17g')},{instance.seed}",
    ]
    _write_matrix(lines, "A1", instance.A1)
    _write_matrix(lines, "b1", instance.b1)
    _write_matrix(lines, "A2", instance.A2)
    _write_matrix(lines, "b2", instance.b2)
    _write_matrix(lines, "theta", instance.theta)
    Path(path).write_text("\n".join(lines) + "\n")


def load_instance(path: Union[str, Path]) -> ElasticNetInstance:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != f"# {_FORMAT_TAG}":
        raise ValueError(f"not a {_FORMAT_TAG} file: {path}")
    if lines[1] != "n,m1,m2,p,seed":
        raise ValueError("malformed instance header")
    n_s, m1_s, m2_s, p_s, seed_s = lines[2].split(",")
    n, m1, m2 = int(n_s), int(m1_s), int(m2_s)

    pos = 3

    def read_block(name: str, rows: int, cols: int) -> np.ndarray:
        nonlocal pos
        if lines[pos] != name:
            raise ValueError(f"expected block {name!r} at line {pos + 1}")
        pos += 1
        block = np.array(
            [[float(v) for v in lines[pos + i].split(",")] for i in range(rows)]
        )
        pos += rows
        return block if rows > 1 or name.startswith("A") else block[0]

    A1 = read_block("A1", m1, n)
    b1 = np.ravel(read_block("b1", 1, m1))
    A2 = read_block("A2", m2, n)
    b2 = np.ravel(read_block("b2", 1, m2))
    theta = np.ravel(read_block("theta", 1, n))
    return ElasticNetInstance(
        A1=A1, b1=b1, A2=A2, b2=b2, theta=theta, p=float(p_s), seed=int(seed_s)
    )
