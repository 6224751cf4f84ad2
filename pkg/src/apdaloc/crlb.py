"""Ranging CRLB and the single-position (no tracking) position error bound."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, GeometryError
from .types import Anchor

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class CrlbContext:
    c: float = SPEED_OF_LIGHT
    beta: float = 1e8

    def __post_init__(self):
        if not (self.c > 0 and self.beta > 0):
            raise ValueError("c and beta must be positive")


def sigma_from_amplitude(u_hat, ctx: CrlbContext = CrlbContext()):
    """Distance standard deviation [m] attained by a component with amplitude ``u_hat``."""
    u_hat = np.asarray(u_hat, dtype=float)
    if np.any(u_hat <= 0):
        raise DomainError("u_hat must be positive")
    out = ctx.c / (np.sqrt(8.0) * np.pi * ctx.beta * u_hat)
    return out if out.ndim else float(out)


def fisher_information(p, anchors: Sequence[Anchor], sigmas) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    fim = np.zeros((2, 2))
    for anchor, sigma in zip(anchors, sigmas, strict=True):
        diff = p - anchor.position
        dist = np.hypot(*diff)
        if dist == 0:
            raise GeometryError(f"position coincides with anchor {anchor.id}")
        e = diff / dist
        fim += np.outer(e, e) / sigma**2
    return fim


def sp_crlb(p, anchors: Sequence[Anchor], sigmas) -> float:
    """Position error bound sqrt(trace(F^-1)) from LOS ranges only."""
    if len(anchors) < 2:
        raise GeometryError("need at least two anchors")
    fim = fisher_information(p, anchors, sigmas)
    # rank-1 FIM means all bearings are parallel
    if np.linalg.cond(fim) > 1e12:
        raise GeometryError("singular Fisher information (collinear bearings)")
    return float(np.sqrt(np.trace(np.linalg.inv(fim))))
