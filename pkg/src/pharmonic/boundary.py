"""Named families of Dirichlet data ``phi : R^2 -> R^N``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True, eq=False)
class BoundaryData:
    family: str
    func: Callable[[np.ndarray], np.ndarray]
    N: int
    params: dict = field(default_factory=dict)

    def __call__(self, points) -> np.ndarray:
        out = np.asarray(self.func(np.atleast_2d(np.asarray(points, dtype=float))), dtype=float)
        return out.reshape(len(out), -1)

    def to_json(self) -> dict:
        return {"family": self.family, "params": dict(self.params)}


def affine(A=((1.0, 0.0),), b=None) -> BoundaryData:
    """``x -> A x + b`` with ``A`` of shape (N, 2)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float).reshape(-1)
    return BoundaryData("affine", lambda x: x @ A.T + b, A.shape[0],
                        {"A": A.tolist(), "b": b.tolist()})


def constant(value=(0.0,)) -> BoundaryData:
    c = np.asarray(value, dtype=float).reshape(-1)
    return BoundaryData("constant", lambda x: np.broadcast_to(c, (len(x), len(c))).copy(), len(c),
                        {"value": c.tolist()})


def radial_pfundamental(p=4.0, n=2, center=(0.0, 0.0), scale=1.0) -> BoundaryData:
    """Radial p-harmonic profile ``|x - center|^((p-n)/(p-1))`` (``log`` when p = n).

    It solves the p-Laplace equation away from ``center``.
    """
    c = np.asarray(center, dtype=float)
    if p == n:
        def func(x):
            return scale * np.log(np.linalg.norm(x - c, axis=1))
    else:
        expo = (p - n) / (p - 1.0)

        def func(x):
            return scale * np.linalg.norm(x - c, axis=1) ** expo
    return BoundaryData("radial_pfundamental", func, 1,
                        {"p": p, "n": n, "center": c.tolist(), "scale": scale})


def radial_exponent(p: float, n: int = 2) -> float:
    return (p - n) / (p - 1.0)


def circle_valued() -> BoundaryData:
    """``x -> x / |x|``: the identity of the unit circle on the boundary."""
    def func(x):
        r = np.linalg.norm(x, axis=1, keepdims=True)
        return x / np.where(r > 0, r, 1.0)
    return BoundaryData("circle_valued", func, 2, {})


def kink(axis=0) -> BoundaryData:
    """``x -> |x_axis|``, Lipschitz with a gradient jump across a line."""
    return BoundaryData("kink", lambda x: np.abs(x[:, axis]), 1, {"axis": axis})


def random_trig(seed=0, N=1, degree=3, amplitude=1.0) -> BoundaryData:
    """Random trigonometric polynomial in the polar angle, one per component."""
    rng = np.random.default_rng(seed)
    coef = rng.normal(size=(N, degree + 1, 2)) * amplitude / (1.0 + np.arange(degree + 1))[None, :, None]

    def func(x):
        th = np.arctan2(x[:, 1], x[:, 0])
        k = np.arange(degree + 1)
        cos, sin = np.cos(np.outer(th, k)), np.sin(np.outer(th, k))
        return cos @ coef[:, :, 0].T + sin @ coef[:, :, 1].T

    return BoundaryData("random_trig", func, N,
                        {"seed": seed, "N": N, "degree": degree, "amplitude": amplitude})


FAMILIES = {
    "affine": affine,
    "circle_valued": circle_valued,
    "constant": constant,
    "kink": kink,
    "radial_pfundamental": radial_pfundamental,
    "random_trig": random_trig,
}


def boundary_from_json(doc: dict) -> BoundaryData:
    family = doc.get("family")
    if family not in FAMILIES:
        raise ValueError(f"unknown boundary-data family {family!r}")
    return FAMILIES[family](**doc.get("params", {}))


def boundary_families() -> list[str]:
    return sorted(FAMILIES)
