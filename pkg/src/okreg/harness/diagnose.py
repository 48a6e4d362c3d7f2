"""Spectrum diagnostics on a dataset and (mu, alpha) suggestions from the decay fit."""

from dataclasses import dataclass
from typing import Optional

from ..errors import InputError
from ..kernels import gram, spectrum_diagnostics
from ..nons import exponential_decay_schedule, polynomial_decay_schedule
from .experiment import fisher_yates


@dataclass
class Suggestion:
    model: str
    T: int
    mu: float
    alpha: float
    p: Optional[float] = None

    def to_dict(self):
        return {"model": self.model, "T": self.T, "mu": self.mu, "alpha": self.alpha, "p": self.p}


def suggest_parameters(fit, T):
    """Regularizer and ALD threshold for horizon ``T`` given a decay fit."""
    if fit is None:
        return None
    if fit.model == "exponential":
        mu, alpha = exponential_decay_schedule(T)
        return Suggestion("exponential", T, mu, alpha)
    p = fit.polynomial.rate
    if not p > 0:
        return None
    mu, alpha = polynomial_decay_schedule(T, p)
    return Suggestion("polynomial", T, mu, alpha, p)


@dataclass
class DiagnoseResult:
    diagnostics: object
    suggestion: Optional[Suggestion]
    sample_size: int

    def to_dict(self):
        return {
            "sample_size": self.sample_size,
            "diagnostics": self.diagnostics.to_dict(),
            "suggestion": self.suggestion.to_dict() if self.suggestion else None,
        }


def diagnose_spectrum(data, kernel, sample_size=None, seed=0):
    """Spectrum of the Gram matrix of a uniform subsample; suggestions use the full T."""
    T = data.T
    n = T if sample_size is None else int(sample_size)
    if not 1 <= n <= T:
        raise InputError(f"sample size must lie in [1, {T}]")
    idx = sorted(fisher_yates(T, seed)[:n]) if n < T else list(range(T))
    diag = spectrum_diagnostics(gram(kernel, data.X[idx]))
    return DiagnoseResult(diag, suggest_parameters(diag.decay_fit, max(T, 2)), n)
