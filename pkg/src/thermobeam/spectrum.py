"""Eigenvalues of the generators, spectral abscissa and distance to iR."""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from thermobeam.errors import SingularSystemError
from thermobeam.model import Generator

MAX_DENSE_DIM = 3000

_cache: "weakref.WeakKeyDictionary[Generator, np.ndarray]" = weakref.WeakKeyDictionary()


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray
    abscissa: float
    axis_gap: float


def eigenvalues(gen: Generator) -> np.ndarray:
    """All ``6n`` eigenvalues, computed on the G-similar matrix ``C B C^-1``.

    Sorted by decreasing real part, ties broken by imaginary part.
    """
    cached = _cache.get(gen)
    if cached is not None:
        return cached
    if gen.dim > MAX_DENSE_DIM:
        raise ValueError(f"dense eigensolve limited to dimension {MAX_DENSE_DIM}, got {gen.dim}")
    try:
        ev = np.linalg.eigvals(gen.similar)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"eigensolver did not converge: {exc}") from exc
    ev = ev[np.lexsort((ev.imag, -ev.real))]
    ev.setflags(write=False)
    _cache[gen] = ev
    return ev


def spectral_abscissa(gen: Generator) -> float:
    return float(np.max(eigenvalues(gen).real))


def axis_gap(gen: Generator) -> float:
    """Smallest ``|Re lambda|`` over the spectrum; positive means no eigenvalue on iR."""
    return float(np.min(np.abs(eigenvalues(gen).real)))


def lambda_max_resolved(gen: Generator) -> float:
    """Half the imaginary extent of the discrete spectrum.

    Beyond the spectrum every finite-dimensional resolvent decays like
    ``1/lambda``, so frequency scans are confined below this value.
    """
    return 0.5 * float(np.max(np.abs(eigenvalues(gen).imag)))


def conjugation_defect(ev) -> float:
    """Largest distance from an eigenvalue's conjugate to the spectrum."""
    ev = np.asarray(ev)
    d = np.abs(np.conj(ev)[:, None] - ev[None, :])
    return float(np.max(np.min(d, axis=1)))


def spectrum_report(gen: Generator) -> SpectrumReport:
    ev = eigenvalues(gen)
    return SpectrumReport(eigenvalues=ev, abscissa=spectral_abscissa(gen), axis_gap=axis_gap(gen))
