"""Damped-sinusoid fitting of hopping traces.

Fits a * exp(-b t) * sin(c t + d) + f t to a measured or simulated
trace by damped least squares with an analytic Jacobian, produces an
automatic initial guess from the discrete Fourier transform, and turns
the fitted parameters into decay time, hopping frequency and number of
oscillations with first-order uncertainty propagation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .constants import TWO_PI

#: Levenberg-Marquardt damping schedule: start value, rejected-step
#: multiplier and accepted-step divisor.
LM_DAMPING_START = 1e-3
LM_DAMPING_FACTOR = 10.0
LM_DAMPING_MAX = 1e12

# largest per-iteration move of log b / log c: when the decay (or frequency)
# is unidentifiable the normal equations are flat in that direction and an
# uncapped step underflows exp(log b) to zero
_LOG_STEP_LIMIT = 5.0
_LOG_FLOOR = math.log(1e-150)


class GuessQualityWarning(UserWarning):
    """Initial guess drawn from a record with too little oscillation content."""


@dataclass(frozen=True)
class TimeSeries:
    """Trace to be fitted: times in s, dimensionless values, optional sigmas."""

    times: np.ndarray
    values: np.ndarray
    sigma: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.times.size < 8:
            raise ValueError(
                f"need at least 8 points for a 5-parameter fit, got {self.times.size}"
            )
        if self.times.size != self.values.size:
            raise ValueError("times and values must have equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.sigma is not None:
            if self.sigma.size != self.times.size:
                raise ValueError("sigma must match times in length")
            if np.any(self.sigma <= 0):
                raise ValueError("sigma values must be positive")

    @property
    def weights(self) -> np.ndarray:
        if self.sigma is None:
            return np.ones_like(self.values)
        return 1.0 / self.sigma**2


@dataclass(frozen=True)
class DampedSineFit:
    """Result of fitting a exp(-b t) sin(c t + d) + f t.

    ``covariance`` is the 5x5 parameter covariance in the (a, b, c, d, f)
    order, scaled by the residual variance; ``degenerate`` marks a
    singular normal matrix at the solution.
    """

    a: float
    b: float
    c: float
    d: float
    f: float
    covariance: np.ndarray
    residual_rms: float
    converged: bool
    iterations: int
    degenerate: bool = False
    cost_history: tuple[float, ...] = ()

    @property
    def parameters(self) -> tuple[float, float, float, float, float]:
        return (self.a, self.b, self.c, self.d, self.f)


@dataclass(frozen=True)
class FitMetrics:
    """Coherence metrics derived from a fit, with propagated uncertainties."""

    decay_time: float
    hopping_frequency_hz: float
    num_oscillations: float
    decay_time_err: float
    hopping_frequency_hz_err: float
    num_oscillations_err: float


def damped_sine(
    t: np.ndarray, a: float, b: float, c: float, d: float, f: float
) -> np.ndarray:
    """Model function a exp(-b t) sin(c t + d) + f t."""
    return a * np.exp(-b * t) * np.sin(c * t + d) + f * t


def damped_sine_jacobian(
    t: np.ndarray, a: float, b: float, c: float, d: float, f: float
) -> np.ndarray:
    """Analytic Jacobian of the model, columns in (a, b, c, d, f) order."""
    decay = np.exp(-b * t)
    sin = np.sin(c * t + d)
    cos = np.cos(c * t + d)
    jac = np.empty((t.size, 5))
    jac[:, 0] = decay * sin
    jac[:, 1] = -a * t * decay * sin
    jac[:, 2] = a * t * decay * cos
    jac[:, 3] = a * decay * cos
    jac[:, 4] = t
    return jac


def _wrap_phase(d: float) -> float:
    return (d + math.pi) % TWO_PI - math.pi


def initial_guess(data: TimeSeries) -> tuple[float, float, float, float, float]:
    """Automatic starting point for the damped-sine fit.

    The drift slope and constant offset come from a linear fit; the
    frequency and phase from the dominant nonzero bin of the DFT of the
    mean-subtracted, detrended values (linearly resampled to a uniform
    grid if necessary); the amplitude from twice the rms of the
    detrended values; the decay rate from a log-linear fit to the
    per-period peaks of their absolute value.

    Emits :class:`GuessQualityWarning` when the record holds fewer than
    two observable oscillation periods (the fit is still attempted).
    """
    t, y = data.times, data.values
    span = t[-1] - t[0]
    design = np.column_stack([np.ones_like(t), t])
    (offset, slope), *_ = np.linalg.lstsq(design, y, rcond=None)
    detrended = y - (offset + slope * t)

    n = t.size
    uniform_t = np.linspace(t[0], t[-1], n)
    resampled = np.interp(uniform_t, t, detrended)
    spectrum = np.fft.rfft(resampled - resampled.mean())
    magnitudes = np.abs(spectrum[1:])
    amplitude = 2.0 * math.sqrt(float(np.mean(detrended**2)))

    # detrended residual at rounding level: constant or purely linear record
    data_scale = max(float(np.max(np.abs(y))), abs(float(offset)), 1e-300)
    if amplitude <= 1e-12 * data_scale:
        warnings.warn(
            "no dominant frequency bin in the record", GuessQualityWarning, stacklevel=2
        )
        return (amplitude, 0.01 / span, TWO_PI / span, 0.0, float(slope))

    peak_bin = 1 + int(np.argmax(magnitudes))
    freq = np.fft.rfftfreq(n, uniform_t[1] - uniform_t[0])[peak_bin]
    c0 = TWO_PI * float(freq)
    if c0 * span / TWO_PI < 2.0:
        warnings.warn(
            "fewer than 2 oscillation periods in the record; the initial "
            "guess may be poor",
            GuessQualityWarning,
            stacklevel=2,
        )

    # decay rate from per-period envelope peaks
    period = TWO_PI / c0
    peak_times, peak_values = [], []
    for k in range(max(1, int(span / period))):
        mask = (t >= t[0] + k * period) & (t < t[0] + (k + 1) * period)
        if mask.any():
            idx = np.argmax(np.abs(detrended[mask]))
            peak_times.append(t[mask][idx])
            peak_values.append(abs(detrended[mask][idx]))
    peak_times = np.asarray(peak_times)
    peak_values = np.asarray(peak_values)
    usable = peak_values > 0
    b0 = 0.0
    if usable.sum() >= 2:
        slope_log, _ = np.polyfit(peak_times[usable], np.log(peak_values[usable]), 1)
        b0 = -float(slope_log)
    if b0 <= 0:
        b0 = 0.01 / span

    phase = float(np.angle(spectrum[peak_bin]))
    d0 = _wrap_phase(phase + math.pi / 2.0 - c0 * uniform_t[0])
    return (amplitude, b0, c0, d0, float(slope))


def _unpack(p: np.ndarray) -> tuple[float, float, float, float, float]:
    return p[0], math.exp(p[1]), math.exp(p[2]), p[3], p[4]


def fit_damped_sine(
    data: TimeSeries,
    guess: tuple[float, float, float, float, float] | None = None,
    max_iter: int = 200,
    tol: float = 1e-10,
) -> DampedSineFit:
    """Weighted least-squares fit of the damped sinusoid to a trace.

    Uses a Levenberg-Marquardt schedule on the analytic Jacobian: the
    damping starts at 1e-3, is multiplied by 10 on a rejected step and
    divided by 10 on an accepted one. The decay rate and frequency are
    optimised as log b and log c so they stay positive; the covariance
    is mapped back to (a, b, c, d, f) by the chain rule and scaled by
    the residual variance. Convergence is declared when the relative
    cost decrease or the step norm falls below ``tol``.

    Parameters
    ----------
    data : TimeSeries
        Trace to fit; per-point sigmas weight the residuals as 1/sigma^2.
    guess : tuple, optional
        Starting (a, b, c, d, f); computed by :func:`initial_guess` when
        omitted. b and c must be positive.
    max_iter : int
        Iteration budget; exceeding it returns converged=False with the
        best parameters found.
    tol : float
        Convergence threshold for relative cost decrease and step norm.
    """
    if max_iter < 1 or tol <= 0:
        raise ValueError("max_iter must be >= 1 and tol > 0")
    if guess is None:
        guess = initial_guess(data)
    a0, b0, c0, d0, f0 = (float(v) for v in guess)
    if not all(math.isfinite(v) for v in (a0, b0, c0, d0, f0)):
        raise ValueError(f"guess must be finite, got {guess}")
    if b0 <= 0 or c0 <= 0:
        raise ValueError("guess must have b > 0 and c > 0")

    t, y = data.times, data.values
    sqrt_w = np.sqrt(data.weights)
    params = np.array([a0, math.log(b0), math.log(c0), d0, f0])

    def weighted_residuals(p: np.ndarray) -> np.ndarray:
        return (y - damped_sine(t, *_unpack(p))) * sqrt_w

    residuals = weighted_residuals(params)
    cost = float(residuals @ residuals)
    history = [cost]
    damping = LM_DAMPING_START
    converged = False
    degenerate = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        a, b, c, d, f = _unpack(params)
        jac = damped_sine_jacobian(t, a, b, c, d, f)
        jac[:, 1] *= b  # d/d(log b)
        jac[:, 2] *= c  # d/d(log c)
        jac *= sqrt_w[:, None]
        normal = jac.T @ jac
        gradient = jac.T @ weighted_residuals(params)
        # guard collapsed directions so the damped system stays solvable
        scale = np.maximum(np.diag(normal), 1e-12 * np.max(np.diag(normal)))
        diagonal = np.diag(scale)
        while True:
            try:
                step = np.linalg.solve(normal + damping * diagonal, gradient)
            except np.linalg.LinAlgError:
                degenerate = True
                break
            step[1] = np.clip(step[1], -_LOG_STEP_LIMIT, _LOG_STEP_LIMIT)
            step[2] = np.clip(step[2], -_LOG_STEP_LIMIT, _LOG_STEP_LIMIT)
            trial = params + step
            trial[1] = max(trial[1], _LOG_FLOOR)
            trial[2] = max(trial[2], _LOG_FLOOR)
            trial_residuals = weighted_residuals(trial)
            trial_cost = float(trial_residuals @ trial_residuals)
            if trial_cost <= cost:
                relative_decrease = (cost - trial_cost) / cost if cost > 0 else 0.0
                params, cost = trial, trial_cost
                history.append(cost)
                damping = max(damping / LM_DAMPING_FACTOR, 1e-15)
                if relative_decrease < tol or np.linalg.norm(step) < tol:
                    converged = True
                break
            damping *= LM_DAMPING_FACTOR
            if damping > LM_DAMPING_MAX:
                # no downhill step remains; at the floor of the cost surface
                if np.linalg.norm(step) < tol:
                    converged = True
                break
        if converged or degenerate or damping > LM_DAMPING_MAX:
            break

    a, b, c, d, f = _unpack(params)
    jac = damped_sine_jacobian(t, a, b, c, d, f)
    jac[:, 1] *= b
    jac[:, 2] *= c
    jac *= sqrt_w[:, None]
    normal = jac.T @ jac
    degrees = max(t.size - 5, 1)
    scale = cost / degrees
    try:
        covariance_internal = scale * np.linalg.inv(normal)
    except np.linalg.LinAlgError:
        covariance_internal = np.full((5, 5), np.nan)
        degenerate = True
    chain = np.diag([1.0, b, c, 1.0, 1.0])
    covariance = chain @ covariance_internal @ chain.T

    if a < 0:
        a, d = -a, d + math.pi
    d = _wrap_phase(d)
    residual_rms = float(np.sqrt(np.mean((y - damped_sine(t, a, b, c, d, f)) ** 2)))
    return DampedSineFit(
        a=a, b=b, c=c, d=d, f=f,
        covariance=covariance,
        residual_rms=residual_rms,
        converged=converged,
        iterations=iterations,
        degenerate=degenerate,
        cost_history=tuple(history),
    )


def metrics_from_fit(fit: DampedSineFit) -> FitMetrics:
    """Decay time 1/b, frequency c/2pi and oscillation count c/(2 pi b).

    Uncertainties are propagated to first order from the covariance,
    including the b-c correlation in the oscillation count. A decay rate
    of zero yields unbounded markers with no uncertainty.
    """
    if fit.b < 0:
        raise ValueError(f"decay rate must be >= 0, got {fit.b}")
    frequency_hz = fit.c / TWO_PI
    var_b = float(fit.covariance[1, 1])
    var_c = float(fit.covariance[2, 2])
    cov_bc = float(fit.covariance[1, 2])
    frequency_err = math.sqrt(max(var_c, 0.0)) / TWO_PI
    if fit.b == 0:
        return FitMetrics(math.inf, frequency_hz, math.inf, math.inf, frequency_err, math.inf)
    decay_time = 1.0 / fit.b
    oscillations = fit.c / (TWO_PI * fit.b)
    decay_err = math.sqrt(max(var_b, 0.0)) / fit.b**2
    rel_var = var_c / fit.c**2 + var_b / fit.b**2 - 2.0 * cov_bc / (fit.c * fit.b)
    oscillations_err = oscillations * math.sqrt(max(rel_var, 0.0))
    return FitMetrics(
        decay_time=decay_time,
        hopping_frequency_hz=frequency_hz,
        num_oscillations=oscillations,
        decay_time_err=decay_err,
        hopping_frequency_hz_err=frequency_err,
        num_oscillations_err=oscillations_err,
    )


class DampedSineFitter(RegressorMixin, BaseEstimator):
    """Scikit-learn style wrapper around the damped-sine fit.

    ``fit(X, y)`` takes sample times as X (shape (n,) or (n, 1)) and
    trace values as y; fitted parameters are exposed as ``result_`` and
    ``metrics_``, and ``predict`` evaluates the fitted model.

    Examples
    --------
    >>> fitter = DampedSineFitter().fit(times, values)
    >>> fitter.result_.b
    >>> fitter.predict(times)
    """

    def __init__(self, max_iter: int = 200, tol: float = 1e-10):
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y, sigma: np.ndarray | None = None) -> "DampedSineFitter":
        times = check_array(X, ensure_2d=False, dtype=float)
        if times.ndim == 2:
            if times.shape[1] != 1:
                raise ValueError("X must be a single column of sample times")
            times = times.ravel()
        values = check_array(y, ensure_2d=False, dtype=float)
        data = TimeSeries(
            times=times,
            values=values,
            sigma=None if sigma is None else np.asarray(sigma, dtype=float),
        )
        self.result_ = fit_damped_sine(data, max_iter=self.max_iter, tol=self.tol)
        self.metrics_ = metrics_from_fit(self.result_) if self.result_.converged else None
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "result_")
        times = check_array(X, ensure_2d=False, dtype=float)
        if times.ndim == 2:
            times = times.ravel()
        return damped_sine(times, *self.result_.parameters)
