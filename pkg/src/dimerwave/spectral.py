"""Truncated Fourier representation of real two-component periodic fields.

A field f(x) = sum_k fhat(k) e^{ikx}, |k| <= N, is stored through its
non-negative modes only: an array of shape (2, N + 1). Negative modes follow
from Hermitian symmetry fhat(-k) = conj(fhat(k)). With these synthesis
coefficients the inner product is

    <f, g> = sum_k fhat(k) . conj(ghat(k)) = (1 / 2 pi) int_0^{2 pi} f . g dx.

Grid samples live on x_j = 2 pi j / G. Pseudospectral products are exact as
long as G exceeds the bandwidth of the product plus N (see ``min_grid``).
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.fft import next_fast_len

from .errors import ConfigurationError, InvariantError

__all__ = [
    "PeriodicField",
    "MultiplierSymbol",
    "inner_product",
    "sobolev_norm",
    "shift",
    "derivative",
    "apply_symbol",
    "apply_pointwise",
    "min_grid",
    "grid_points",
]

_HERMITIAN_RTOL = 1e-12


class PeriodicField:
    """Immutable real two-component 2*pi-periodic band-limited function.

    Parameters
    ----------
    coeffs : array_like, shape (2, N + 1)
        Complex synthesis coefficients for modes k = 0..N. The imaginary
        part of mode 0 must vanish (up to roundoff, it is then dropped).
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[0] != 2 or c.shape[1] < 1:
            raise ValueError("coeffs must have shape (2, N + 1)")
        scale = np.abs(c[:, 0]).max(initial=0.0)
        if np.abs(c[:, 0].imag).max() > _HERMITIAN_RTOL * (1.0 + scale):
            raise InvariantError(
                "Hermitian symmetry violated at mode 0 (imaginary mean)")
        c[:, 0] = c[:, 0].real
        c.flags.writeable = False
        self._c = c

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, N: int) -> "PeriodicField":
        return cls(np.zeros((2, N + 1), dtype=complex))

    @classmethod
    def constant(cls, v1: float, v2: float, N: int) -> "PeriodicField":
        c = np.zeros((2, N + 1), dtype=complex)
        c[:, 0] = v1, v2
        return cls(c)

    @classmethod
    def from_modes(cls, N: int, modes: dict) -> "PeriodicField":
        """Build from ``{k: (c1, c2)}`` with k >= 0."""
        c = np.zeros((2, N + 1), dtype=complex)
        for k, val in modes.items():
            if not 0 <= k <= N:
                raise ValueError(f"mode {k} outside [0, {N}]")
            c[:, k] = val
        return cls(c)

    @classmethod
    def from_samples(cls, samples, N: int) -> "PeriodicField":
        """Project grid samples of shape (2, G) onto modes |k| <= N."""
        samples = np.asarray(samples, dtype=float)
        G = samples.shape[-1]
        if G < 2 * N + 1:
            raise ConfigurationError(f"grid {G} too small for N={N}; need >= {2 * N + 1}")
        c = np.fft.rfft(samples, axis=-1)[:, : N + 1] / G
        return cls(c)

    @classmethod
    def from_function(cls, fn: Callable, N: int, grid: int | None = None):
        """Interpolate ``fn(x) -> (2, len(x))`` at the grid points."""
        G = grid or max(4 * N, 2 * N + 1)
        return cls.from_samples(fn(grid_points(G)), N)

    @classmethod
    def random(cls, N: int, rng: np.random.Generator, decay: float = 1.0,
               bandwidth: int | None = None, mean: bool = True):
        """Random smooth field with coefficients decaying like (1+k^2)^-decay."""
        K = N if bandwidth is None else min(bandwidth, N)
        k = np.arange(K + 1)
        c = np.zeros((2, N + 1), dtype=complex)
        c[:, : K + 1] = (rng.standard_normal((2, K + 1))
                         + 1j * rng.standard_normal((2, K + 1))) * (1.0 + k ** 2) ** (-decay)
        c[:, 0] = c[:, 0].real if mean else 0.0
        return cls(c)

    # access -------------------------------------------------------------
    @property
    def coeffs(self) -> np.ndarray:
        """Read-only array of shape (2, N + 1)."""
        return self._c

    @property
    def N(self) -> int:
        return self._c.shape[1] - 1

    def full_coeffs(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(k, c)`` for all modes -N..N, c of shape (2, 2N + 1)."""
        N = self.N
        k = np.arange(-N, N + 1)
        c = np.concatenate([np.conj(self._c[:, :0:-1]), self._c], axis=1)
        return k, c

    def resize(self, N: int) -> "PeriodicField":
        """Zero-pad or truncate to truncation ``N``."""
        c = np.zeros((2, N + 1), dtype=complex)
        n = min(N, self.N) + 1
        c[:, :n] = self._c[:, :n]
        return PeriodicField(c)

    def to_samples(self, grid: int) -> np.ndarray:
        """Values on the grid x_j = 2 pi j / grid, shape (2, grid)."""
        if grid < 2 * self.N + 1:
            raise ConfigurationError(
                f"grid {grid} too small for N={self.N}; need >= {2 * self.N + 1}")
        return np.fft.irfft(self._c, n=grid, axis=-1) * grid

    def evaluate(self, x, order: int = 0) -> np.ndarray:
        """Evaluate the ``order``-th derivative at arbitrary points.

        Returns an array of shape (2,) + shape(x).
        """
        x = np.asarray(x, dtype=float)
        k = np.arange(1, self.N + 1)
        phase = np.exp(1j * np.multiply.outer(x, k))
        weights = self._c[:, 1:] * (1j * k) ** order
        out = 2.0 * np.real(phase @ weights.T)
        if order == 0:
            out = out + self._c[:, 0].real
        return np.moveaxis(out, -1, 0)

    # arithmetic ---------------------------------------------------------
    def _binary(self, other, op):
        if not isinstance(other, PeriodicField):
            return NotImplemented
        N = max(self.N, other.N)
        return PeriodicField(op(self.resize(N)._c, other.resize(N)._c))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return PeriodicField(-self._c)

    def __mul__(self, s):
        if isinstance(s, PeriodicField) or np.iscomplexobj(s):
            return NotImplemented
        return PeriodicField(self._c * float(s))

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / float(s))

    def __repr__(self):
        return f"PeriodicField(N={self.N})"

    def allclose(self, other: "PeriodicField", atol: float = 1e-13) -> bool:
        return bool(np.max(np.abs((self - other)._c), initial=0.0) <= atol)

    # serialization ------------------------------------------------------
    def to_records(self) -> list:
        return [{"k": int(k), "re1": float(c1.real), "im1": float(c1.imag),
                 "re2": float(c2.real), "im2": float(c2.imag)}
                for k, (c1, c2) in enumerate(self._c.T)]

    @classmethod
    def from_records(cls, records: Sequence[dict]) -> "PeriodicField":
        N = max(int(r["k"]) for r in records)
        c = np.zeros((2, N + 1), dtype=complex)
        for r in records:
            c[:, int(r["k"])] = (r["re1"] + 1j * r["im1"], r["re2"] + 1j * r["im2"])
        return cls(c)


def grid_points(G: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(G) / G


def min_grid(N: int, degree: int) -> int:
    """Smallest grid that evaluates a degree-``degree`` polynomial of a
    band-N field exactly on the modes |k| <= N."""
    return (degree + 1) * N + 1


def inner_product(f: PeriodicField, g: PeriodicField) -> float:
    """Real L2 inner product sum_k fhat(k) . conj(ghat(k))."""
    N = min(f.N, g.N)  # modes beyond the smaller truncation pair with zeros
    a, b = f.coeffs[:, : N + 1], g.coeffs[:, : N + 1]
    prod = a * np.conj(b)
    return float(np.sum(prod[:, 0].real) + 2.0 * np.sum(prod[:, 1:].real))


def sobolev_norm(f: PeriodicField, r: float = 0.0) -> float:
    """H^r norm (sum_k (1 + k^2)^r |fhat(k)|^2)^(1/2)."""
    k = np.arange(f.N + 1)
    w = (1.0 + k ** 2) ** r
    w[1:] *= 2.0
    return float(np.sqrt(np.sum(w * np.sum(np.abs(f.coeffs) ** 2, axis=0))))


@lru_cache(maxsize=256)
def _phase(theta: float, N: int) -> np.ndarray:
    out = np.exp(1j * theta * np.arange(N + 1))
    out.flags.writeable = False
    return out


def shift(f: PeriodicField, theta: float) -> PeriodicField:
    """(S^theta f)(x) = f(x + theta); multiplies mode k by exp(i k theta)."""
    return PeriodicField(f.coeffs * _phase(float(theta), f.N))


def derivative(f: PeriodicField, order: int = 1) -> PeriodicField:
    """Multiply mode k by (ik)^order."""
    k = np.arange(f.N + 1)
    return PeriodicField(f.coeffs * (1j * k) ** order)


class MultiplierSymbol:
    """Matrix Fourier multiplier K -> Mtilde(K), a 2x2 complex matrix.

    ``fn`` receives an integer array of modes and returns an array of shape
    (len(k), 2, 2). The operator acts on mode k by Mtilde(k).
    """

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], name: str = ""):
        self.fn = fn
        self.name = name

    def __call__(self, k) -> np.ndarray:
        k = np.atleast_1d(np.asarray(k))
        return np.asarray(self.fn(k), dtype=complex).reshape(k.shape + (2, 2))

    def __matmul__(self, other: "MultiplierSymbol") -> "MultiplierSymbol":
        return MultiplierSymbol(lambda k: self(k) @ other(k),
                                f"({self.name})({other.name})")

    def adjoint(self, weight: Callable | None = None) -> "MultiplierSymbol":
        """Symbol of the adjoint. With a scalar weight w(k) (such as the
        H^r-to-L2 pairing factor) returns w(k) * Mtilde(k)^*."""
        def fn(k):
            out = np.conj(np.swapaxes(self(k), -1, -2))
            if weight is not None:
                out = out * np.asarray(weight(k))[:, None, None]
            return out
        return MultiplierSymbol(fn, f"({self.name})*")

    @classmethod
    def diagonal(cls, scalar: Callable, name: str = "") -> "MultiplierSymbol":
        def fn(k):
            s = np.asarray(scalar(k), dtype=complex)
            out = np.zeros(k.shape + (2, 2), dtype=complex)
            out[..., 0, 0] = s
            out[..., 1, 1] = s
            return out
        return cls(fn, name)


def _check_hermitian(sym: MultiplierSymbol, table: np.ndarray, N: int):
    if N == 0:
        return
    k = np.arange(1, N + 1)
    neg = sym(-k)
    err = np.abs(neg - np.conj(table[1:])).reshape(N, -1).max(axis=1)
    scale = 1.0 + np.abs(table[1:]).reshape(N, -1).max(axis=1)
    bad = np.nonzero(err > _HERMITIAN_RTOL * scale)[0]
    if bad.size:
        raise InvariantError(
            f"symbol {sym.name!r} breaks Hermitian symmetry at mode {int(k[bad[0]])}")


def apply_symbol(sym, f: PeriodicField, check: bool = True) -> PeriodicField:
    """Apply a multiplier: fhat(k) <- Mtilde(k) fhat(k).

    ``sym`` is a MultiplierSymbol or a precomputed table of shape
    (N + 1, 2, 2) indexed by k = 0..N. For symbols, Hermitian symmetry
    Mtilde(-k) = conj(Mtilde(k)) is asserted when ``check`` is true.
    """
    N = f.N
    if isinstance(sym, MultiplierSymbol):
        table = sym(np.arange(N + 1))
        if check:
            _check_hermitian(sym, table, N)
    else:
        table = np.asarray(sym)
        if table.shape != (N + 1, 2, 2):
            raise ValueError(f"symbol table shape {table.shape} != {(N + 1, 2, 2)}")
    out = np.einsum("kij,jk->ik", table, f.coeffs)
    return PeriodicField(out)


def _as_poly(m) -> tuple[Callable, int | None]:
    if m is None:
        return (lambda r: r), 1
    if callable(m):
        return m, None
    cs = np.asarray(m, dtype=float)
    return (lambda r: P.polyval(r, cs)), max(len(cs) - 1, 0)


def apply_pointwise(f: PeriodicField, map1=None, map2=None, *,
                    degree: int | None = None, grid: int | None = None,
                    N_out: int | None = None) -> PeriodicField:
    """Apply scalar maps to each component on a dealiased grid.

    Parameters
    ----------
    f : PeriodicField
    map1, map2 : callable or ascending polynomial coefficients, optional
        Map for component 1 and 2. ``None`` means the identity. If only
        ``map1`` is given it is used for both components.
    degree : int, optional
        Polynomial degree of callable maps. Inferred for coefficient input.
    grid : int, optional
        Grid size; must be at least ``(degree + 1) * N + 1`` so that the
        retained modes are free of aliasing.
    N_out : int, optional
        Truncation of the result (default ``f.N``).
    """
    if map2 is None and map1 is not None:
        map2 = map1
    g1, d1 = _as_poly(map1)
    g2, d2 = _as_poly(map2)
    inferred = [d for d in (d1, d2) if d is not None]
    if degree is None:
        if d1 is None or d2 is None:
            raise ConfigurationError("degree is required for callable maps")
        degree = max(inferred)
    degree = max(degree, 1)
    N = f.N
    N_out = N if N_out is None else N_out
    need = degree * N + N_out + 1
    if grid is None:
        grid = next_fast_len(need, real=True)
    elif grid < need:
        raise ConfigurationError(
            f"grid {grid} too small for exact degree-{degree} evaluation at "
            f"N={N}; need >= {need}")
    s = f.to_samples(grid)
    out = np.stack([g1(s[0]), g2(s[1])])
    return PeriodicField.from_samples(out, N_out)
