"""Shared error types, RNG substreams and a deterministic chunked map."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")


class ArtifactError(Exception):
    """Base class for all package errors."""


class ValidationError(ArtifactError, ValueError):
    """Input violates a documented precondition or invariant.

    Parameters
    ----------
    message : str
        Human readable description.
    key : str, optional
        Name of the offending parameter, used by the CLI.
    """

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class InvalidStateError(ValidationError):
    """A quantum state is not physical (non-Hermitian, bad trace, outside the Bloch ball)."""


class NumericalError(ArtifactError, ArithmeticError):
    """A numerical procedure failed: step size too large, no convergence, degenerate fit."""


def require(cond: bool, message: str, key: str | None = None) -> None:
    if not cond:
        raise ValidationError(message, key)


def substreams(seed: int | None, n: int) -> list[np.random.Generator]:
    """One independent generator per item index, derived from a master seed."""
    return [np.random.default_rng(s) for s in spawn(seed, n)]


def spawn(seed: int | None, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n)


def stacked_normals(seqs: Sequence[np.random.SeedSequence], shape: tuple[int, ...]) -> np.ndarray:
    """Standard normals of shape ``(len(seqs), *shape)``; row ``i`` comes from ``seqs[i]``.

    Row content depends only on its own seed sequence, so any chunking of the
    trajectory index range reproduces the same numbers.
    """
    out = np.empty((len(seqs), *shape))
    for i, s in enumerate(seqs):
        out[i] = np.random.default_rng(s).standard_normal(shape)
    return out


def stacked_uniforms(seqs: Sequence[np.random.SeedSequence], shape: tuple[int, ...]) -> np.ndarray:
    out = np.empty((len(seqs), *shape))
    for i, s in enumerate(seqs):
        out[i] = np.random.default_rng(s).random(shape)
    return out


def chunked_map(
    fn: Callable[[slice], T], n: int, threads: int = 1, chunk: int = 1024
) -> list[T]:
    """Apply ``fn`` to consecutive index slices of ``range(n)``.

    Results come back in index order whatever the worker count, so callers
    that concatenate them get identical output for any ``threads``.
    """
    slices: Sequence[slice] = [slice(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    if threads <= 1 or len(slices) <= 1:
        return [fn(s) for s in slices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, slices))
