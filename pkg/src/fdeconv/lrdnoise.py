"""Long-range dependent noise on the unit square.

The error field is anisotropic: a long-memory sequence along each axis,
combined into a separable two-dimensional structure. Memory strength is
parametrized by ``alpha in (0, 1]`` per axis, where ``alpha = 1`` is white
noise and smaller values mean slower correlation decay. Equivalent
parametrizations: fractional differencing ``d = (1 - alpha) / 2`` and Hurst
index ``H = 1 - alpha / 2``; directional autocorrelations decay like
``h ** (-alpha)``.

Generators return zero-mean fields, so the sample statistics here do not
subtract the sample mean by default; removing it would bias every
autocorrelation downward by O(N^-alpha), which is far from negligible for
strong memory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import DegenerateInputError, ParameterError

_CONSTRUCTIONS = ("farima-product", "exact-fgn-product")


@dataclass(frozen=True)
class LongMemoryParams:
    """Memory parameters (alpha1, alpha2) of the two axes.

    alpha1 applies along axis 0 (the convolution direction t), alpha2 along
    axis 1 (the location direction x).
    """

    alpha1: float
    alpha2: float

    def __post_init__(self):
        for name, a in (("alpha1", self.alpha1), ("alpha2", self.alpha2)):
            if not 0.0 < a <= 1.0:
                raise ParameterError(f"{name} must lie in (0, 1], got {a}")

    @property
    def alpha(self) -> tuple[float, float]:
        return (self.alpha1, self.alpha2)

    @property
    def alpha_bar(self) -> float:
        """Average memory parameter, the exponent the noise level scales with."""
        return 0.5 * (self.alpha1 + self.alpha2)

    @property
    def d(self) -> tuple[float, float]:
        """Fractional differencing orders d_i = (1 - alpha_i) / 2."""
        return ((1.0 - self.alpha1) / 2.0, (1.0 - self.alpha2) / 2.0)

    @property
    def hurst(self) -> tuple[float, float]:
        """Hurst indices H_i = 1 - alpha_i / 2."""
        return (1.0 - self.alpha1 / 2.0, 1.0 - self.alpha2 / 2.0)


@dataclass(frozen=True)
class NoiseSheet:
    """A generated N x N error field plus the recipe that made it."""

    values: np.ndarray
    params: LongMemoryParams
    construction: str = "farima-product"

    @property
    def n(self) -> int:
        return self.values.shape[0]


def farima_weights(d: float, count: int) -> np.ndarray:
    """First ``count`` MA(inf) weights of a fARIMA(0, d, 0) process.

    w_0 = 1 and w_k = w_{k-1} (k - 1 + d) / k, i.e. the binomial series of
    (1 - B)^{-d} applied to white noise.
    """
    if not 0.0 <= d < 0.5:
        raise ParameterError(f"d must lie in [0, 0.5), got {d}")
    if count < 1:
        raise ParameterError(f"need at least one weight, got {count}")
    k = np.arange(1, count, dtype=float)
    return np.cumprod(np.concatenate(([1.0], (k - 1.0 + d) / k)))


def farima_path(d: float, N: int, seed=None, taps: int | None = None) -> np.ndarray:
    """Sample a length-N fARIMA(0, d, 0) path with unit innovations.

    Args:
        d: fractional differencing order in [0, 0.5). d = 0 reproduces the
           innovations exactly (white noise).
        N: path length.
        seed: anything ``numpy.random.default_rng`` accepts.
        taps: MA truncation length; defaults to 4 N, which keeps the
            truncated autocovariance within a few percent of the exact one
            even at d = 0.4.

    Every output sample is a full ``taps``-term moving average of fresh
    innovations, so the path is stationary without a burn-in.
    """
    if N < 1:
        raise ParameterError(f"path length must be positive, got {N}")
    taps = 4 * N if taps is None else taps
    w = farima_weights(d, taps)
    z = np.random.default_rng(seed).standard_normal(N + taps - 1)
    if d == 0.0:
        return z[taps - 1 :].copy()
    return fftconvolve(z, w, mode="valid")


def fgn_autocovariance(H: float, max_lag: int) -> np.ndarray:
    """Exact fractional Gaussian noise autocovariance at lags 0..max_lag."""
    h = np.arange(max_lag + 1, dtype=float)
    return 0.5 * (
        np.abs(h + 1) ** (2 * H) - 2 * np.abs(h) ** (2 * H) + np.abs(h - 1) ** (2 * H)
    )


def _fgn_embedding_eigenvalues(H: float, N: int) -> np.ndarray:
    r = fgn_autocovariance(H, N)
    circulant_row = np.concatenate((r, r[-2:0:-1]))
    lam = np.fft.fft(circulant_row).real
    if lam.min() < -1e-8 * lam.max():
        raise ParameterError(
            f"circulant embedding not nonnegative for H={H}, N={N}"
        )
    return np.clip(lam, 0.0, None)


def exact_fgn_path(H: float, N: int, seed=None) -> np.ndarray:
    """Sample fractional Gaussian noise with the exact autocovariance.

    Circulant embedding of the (N+1)-term covariance into a 2N circle; the
    returned Gaussian vector has autocovariance exactly
    ``fgn_autocovariance(H, .)``, not an approximation.
    """
    if not 0.0 < H < 1.0:
        raise ParameterError(f"H must lie in (0, 1), got {H}")
    if N < 1:
        raise ParameterError(f"path length must be positive, got {N}")
    lam = _fgn_embedding_eigenvalues(H, N)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(2 * N) + 1j * rng.standard_normal(2 * N)
    return np.fft.fft(np.sqrt(lam / (2 * N)) * z).real[:N]


def noise_sheet(
    params: LongMemoryParams,
    N: int,
    seed=None,
    construction: str = "farima-product",
) -> NoiseSheet:
    """Generate an N x N anisotropic long-memory error sheet.

    Constructions:

    * ``"farima-product"``: outer product of two independent fARIMA paths
      (the axis-0 path uses d1, the axis-1 path d2). Separable covariance,
      non-Gaussian marginals (product of normals).
    * ``"exact-fgn-product"``: a Gaussian field whose covariance is the exact
      product of the two directional fGn autocovariances, built by filtering
      complex white noise with the separable circulant symbol.

    Either way the sheet is rescaled to unit empirical root mean square, so
    ``mean(values**2) == 1`` holds exactly; the sample mean is left alone
    (the construction is already centered).
    """
    if construction not in _CONSTRUCTIONS:
        raise ParameterError(
            f"unknown construction {construction!r}; options are {_CONSTRUCTIONS}"
        )
    if N < 2:
        raise ParameterError(f"sheet size must be at least 2, got {N}")
    d1, d2 = params.d
    entropy = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    child1, child2 = entropy.spawn(2)
    if construction == "farima-product":
        u = farima_path(d1, N, seed=child1)
        v = farima_path(d2, N, seed=child2)
        values = np.outer(u, v)
    else:
        H1, H2 = params.hurst
        lam = np.outer(
            _fgn_embedding_eigenvalues(H1, N), _fgn_embedding_eigenvalues(H2, N)
        )
        rng = np.random.default_rng(child1)
        z = rng.standard_normal((2 * N, 2 * N)) + 1j * rng.standard_normal((2 * N, 2 * N))
        values = np.fft.fft2(np.sqrt(lam) / (2 * N) * z).real[:N, :N]
    scale = np.sqrt(np.mean(values**2))
    if scale == 0.0:
        raise DegenerateInputError("generated sheet is identically zero")
    return NoiseSheet(values / scale, params, construction)


def partial_sum_diagnostic(sheet: NoiseSheet) -> float:
    """Normalized corner partial sum of the sheet.

    Returns ``N^-(2 - (alpha1 + alpha2)/2) * sum(values)``. For white noise
    (alpha = (1, 1)) this is a product of two standard normals, so its
    variance is ~1; under long memory the same normalization keeps the
    variance of order one as N grows, which is the scaling signature the
    continuous noise model requires.
    """
    N = sheet.n
    exponent = 2.0 - (sheet.params.alpha1 + sheet.params.alpha2) / 2.0
    return float(N**-exponent * np.sum(sheet.values))


def sample_acf(x: np.ndarray, max_lag: int, center: bool = False) -> np.ndarray:
    """Sample autocorrelation r(0..max_lag) of a 1-d array, via FFT.

    Uses the biased autocovariance estimate (divisor N) and no mean removal
    unless asked; see the module docstring for why.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size <= max_lag:
        raise ParameterError(
            f"need a 1-d array longer than max_lag={max_lag}, got shape {x.shape}"
        )
    if center:
        x = x - x.mean()
    spec = np.fft.rfft(x, 2 * x.size)
    acov = np.fft.irfft(spec * np.conj(spec))[: max_lag + 1] / x.size
    if acov[0] == 0.0:
        raise DegenerateInputError("zero-variance input has no autocorrelation")
    return acov / acov[0]


def sample_acf_2d(values: np.ndarray, lags: list[tuple[int, int]]) -> np.ndarray:
    """Sample autocorrelation of a sheet at the given (h1, h2) lag pairs."""
    v = np.asarray(values, dtype=float)
    denom = np.mean(v**2)
    if denom == 0.0:
        raise DegenerateInputError("zero-variance sheet has no autocorrelation")
    out = []
    for h1, h2 in lags:
        a = v[: v.shape[0] - h1, : v.shape[1] - h2]
        b = v[h1:, h2:]
        out.append(np.mean(a * b) / denom)
    return np.array(out)


def acf_log_slope(r: np.ndarray, lags: np.ndarray) -> float:
    """Least-squares slope of log |r(h)| against log h over the given lags.

    For a long-memory sequence with parameter alpha the population slope is
    -alpha. Lags where the estimate has crossed zero are dropped (they carry
    no magnitude information).
    """
    lags = np.asarray(lags, dtype=int)
    vals = np.asarray(r, dtype=float)[lags]
    keep = vals > 0
    if keep.sum() < 2:
        raise DegenerateInputError("not enough positive autocorrelations to fit a slope")
    return float(np.polyfit(np.log(lags[keep]), np.log(vals[keep]), 1)[0])
