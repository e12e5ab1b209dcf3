"""Finite-sample statistical battery for bit and symbol streams.

These are classical distributional checks (frequency, multinomial chi-square,
runs, serial correlation, entropy, bias). They bound how far a finite stream
drifts from uniform i.i.d. behavior at a configured significance level; they
are surrogates, not certificates.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2 as _chi2

from .extract import BitStream, SymbolStream, pack_bits

__all__ = [
    "DEFAULT_SIGNIFICANCE",
    "TestReport",
    "SuiteResult",
    "monobit",
    "chi_square_multinomial",
    "runs_test",
    "serial_correlation",
    "entropy_rate",
    "bias_estimate",
    "stream_digest",
    "run_suite",
    "DEFAULT_BIT_TESTS",
    "DEFAULT_SYMBOL_TESTS",
]

DEFAULT_SIGNIFICANCE = 1e-3


@dataclass(frozen=True)
class TestReport:
    """Outcome of one statistical test or descriptive measure.

    `p_value` is None for purely descriptive measures. A report may be marked
    not-applicable in `params` when its preconditions fail; descriptive and
    not-applicable reports never fail a suite on their own, with one
    exception: a runs test whose frequency precondition fails reports p = 0
    and fails, following the usual gating convention.
    """

    name: str
    statistic: float | None
    p_value: float | None
    passed: bool
    params: dict = field(default_factory=dict)

    @property
    def not_applicable(self) -> bool:
        return bool(self.params.get("not_applicable"))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": None if self.statistic is None else float(self.statistic),
            "p_value": None if self.p_value is None else float(self.p_value),
            "passed": bool(self.passed),
            "params": {k: _plain(v) for k, v in self.params.items()},
        }


@dataclass(frozen=True)
class SuiteResult:
    reports: tuple[TestReport, ...]
    overall: bool
    input_digest: str

    def to_dict(self) -> dict:
        return {
            "overall": bool(self.overall),
            "input_digest": self.input_digest,
            "reports": [r.to_dict() for r in self.reports],
        }


def _plain(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def monobit(bits: BitStream, significance: float = DEFAULT_SIGNIFICANCE) -> TestReport:
    """Two-sided frequency test.

    Statistic |#1 - #0| / sqrt(N); p-value erfc(statistic / sqrt(2)).
    """
    n = len(bits)
    if n < 100:
        raise ValueError("monobit: need at least 100 bits")
    ones = int(np.count_nonzero(bits.bits))
    stat = abs(2 * ones - n) / math.sqrt(n)
    p = math.erfc(stat / math.sqrt(2.0))
    return TestReport(
        name="monobit",
        statistic=stat,
        p_value=p,
        passed=p >= significance,
        params={"n": n, "ones": ones, "significance": significance},
    )


def chi_square_multinomial(
    stream: SymbolStream, significance: float = DEFAULT_SIGNIFICANCE
) -> TestReport:
    """Pearson chi-square test against the uniform distribution.

    Uses alphabet_size - 1 degrees of freedom; requires N >= 5 * alphabet_size.
    """
    n = len(stream)
    k = stream.alphabet_size
    if n < 5 * k:
        raise ValueError(f"chi_square_multinomial: need at least {5 * k} symbols")
    counts = np.bincount(stream.symbols, minlength=k).astype(np.float64)
    expected = n / k
    stat = float(np.sum((counts - expected) ** 2) / expected)
    p = float(_chi2.sf(stat, k - 1))
    return TestReport(
        name="chi_square_multinomial",
        statistic=stat,
        p_value=p,
        passed=p >= significance,
        params={
            "n": n,
            "alphabet_size": k,
            "counts": [int(c) for c in counts],
            "significance": significance,
        },
    )


def runs_test(bits: BitStream, significance: float = DEFAULT_SIGNIFICANCE) -> TestReport:
    """Total-runs test under the normal approximation.

    Compares the number of runs against the expectation 2*N*pi*(1-pi) + 1.
    If the bit proportion deviates from 1/2 by more than 2/sqrt(N) the
    frequency precondition fails: the report is marked not-applicable and
    carries p = 0 (fail), matching the monobit gating convention.
    """
    n = len(bits)
    if n < 100:
        raise ValueError("runs_test: need at least 100 bits")
    pi = float(np.count_nonzero(bits.bits)) / n
    if abs(pi - 0.5) > 2.0 / math.sqrt(n):
        return TestReport(
            name="runs",
            statistic=None,
            p_value=0.0,
            passed=False,
            params={
                "n": n,
                "proportion": pi,
                "not_applicable": True,
                "reason": "bit proportion too far from 1/2 for the runs approximation",
                "significance": significance,
            },
        )
    runs = 1 + int(np.count_nonzero(np.diff(bits.bits)))
    expected = 2.0 * n * pi * (1.0 - pi) + 1.0
    denom = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    p = math.erfc(abs(runs - expected) / denom)
    return TestReport(
        name="runs",
        statistic=float(runs),
        p_value=p,
        passed=p >= significance,
        params={"n": n, "proportion": pi, "expected_runs": expected, "significance": significance},
    )


def serial_correlation(
    bits: BitStream,
    lag: int = 1,
    significance: float = DEFAULT_SIGNIFICANCE,
) -> TestReport:
    """Sample autocorrelation at the given lag (Pearson correlation between
    the stream and its shifted copy), with a normal-approximation p-value.

    Degenerate streams (zero variance on either slice) are reported
    not-applicable.
    """
    n = len(bits)
    if lag < 1:
        raise ValueError("serial_correlation: lag must be >= 1")
    if n <= lag + 1:
        raise ValueError("serial_correlation: stream too short for this lag")
    x = bits.bits.astype(np.float64)
    head, tail = x[:-lag], x[lag:]
    if head.std() == 0.0 or tail.std() == 0.0:
        return TestReport(
            name="serial_correlation",
            statistic=None,
            p_value=None,
            passed=True,
            params={
                "lag": lag,
                "not_applicable": True,
                "reason": "zero variance, correlation undefined",
                "significance": significance,
            },
        )
    rho = float(np.clip(np.corrcoef(head, tail)[0, 1], -1.0, 1.0))
    pairs = n - lag
    p = math.erfc(abs(rho) * math.sqrt(pairs) / math.sqrt(2.0))
    return TestReport(
        name="serial_correlation",
        statistic=rho,
        p_value=p,
        passed=p >= significance,
        params={"lag": lag, "pairs": pairs, "significance": significance},
    )


def entropy_rate(stream) -> float:
    """Empirical Shannon entropy of the symbol histogram, in bits per symbol.

    Accepts a SymbolStream or a BitStream (treated as alphabet size 2);
    0 * log 0 counts as 0.
    """
    if isinstance(stream, BitStream):
        k, values = 2, stream.bits
    elif isinstance(stream, SymbolStream):
        k, values = stream.alphabet_size, stream.symbols
    else:
        raise TypeError("entropy_rate: expected a BitStream or SymbolStream")
    n = values.size
    if n < 1:
        raise ValueError("entropy_rate: stream must be nonempty")
    counts = np.bincount(values, minlength=k)
    freqs = counts[counts > 0] / n
    return float(-(freqs * np.log2(freqs)).sum())


def bias_estimate(bits: BitStream) -> float:
    """Empirical P(1) - 1/2."""
    if len(bits) < 1:
        raise ValueError("bias_estimate: stream must be nonempty")
    return float(np.count_nonzero(bits.bits)) / len(bits) - 0.5


def stream_digest(stream) -> str:
    """SHA-256 over a canonical encoding of the stream contents."""
    h = hashlib.sha256()
    if isinstance(stream, BitStream):
        h.update(b"bits")
        h.update(len(stream).to_bytes(8, "big"))
        h.update(pack_bits(stream))
    elif isinstance(stream, SymbolStream):
        h.update(b"symbols")
        h.update(int(stream.alphabet_size).to_bytes(8, "big"))
        h.update(len(stream).to_bytes(8, "big"))
        h.update(stream.symbols.astype("<u4").tobytes())
    else:
        raise TypeError("stream_digest: expected a BitStream or SymbolStream")
    return h.hexdigest()


DEFAULT_BIT_TESTS = ("monobit", "runs", "serial_correlation", "entropy_rate", "bias")
DEFAULT_SYMBOL_TESTS = ("chi_square_multinomial", "entropy_rate")


def _entropy_report(stream, significance: float) -> TestReport:
    k = 2 if isinstance(stream, BitStream) else stream.alphabet_size
    h = entropy_rate(stream)
    return TestReport(
        name="entropy_rate",
        statistic=h,
        p_value=None,
        passed=True,
        params={"descriptive": True, "alphabet_size": k, "max_entropy": math.log2(k)},
    )


def _bias_report(stream, significance: float) -> TestReport:
    return TestReport(
        name="bias",
        statistic=bias_estimate(stream),
        p_value=None,
        passed=True,
        params={"descriptive": True},
    )


def _serial_lag1(stream, significance: float) -> TestReport:
    return serial_correlation(stream, lag=1, significance=significance)


_TEST_REGISTRY = {
    "monobit": monobit,
    "runs": runs_test,
    "serial_correlation": _serial_lag1,
    "chi_square_multinomial": chi_square_multinomial,
    "entropy_rate": _entropy_report,
    "bias": _bias_report,
}


def run_suite(
    stream,
    significance: float = DEFAULT_SIGNIFICANCE,
    tests: tuple[str, ...] | None = None,
) -> SuiteResult:
    """Run the selected tests on a stream and aggregate into a SuiteResult.

    Defaults to the bit battery for BitStream inputs and the symbol battery
    for SymbolStream inputs. Tests whose preconditions reject the stream
    (for example, too short) are reported not-applicable instead of raising;
    `overall` is the conjunction of all report passes.
    """
    if isinstance(stream, BitStream):
        size = len(stream)
        default = DEFAULT_BIT_TESTS
    elif isinstance(stream, SymbolStream):
        size = len(stream)
        default = DEFAULT_SYMBOL_TESTS
    else:
        raise TypeError("run_suite: expected a BitStream or SymbolStream")
    if size == 0:
        raise ValueError("run_suite: stream must be nonempty")
    selection = default if tests is None else tuple(tests)
    reports = []
    for name in selection:
        try:
            fn = _TEST_REGISTRY[name]
        except KeyError:
            raise ValueError(f"run_suite: unknown test {name!r}") from None
        try:
            reports.append(fn(stream, significance))
        except (ValueError, TypeError) as exc:
            reports.append(
                TestReport(
                    name=name,
                    statistic=None,
                    p_value=None,
                    passed=True,
                    params={"not_applicable": True, "reason": str(exc)},
                )
            )
    overall = all(r.passed for r in reports)
    return SuiteResult(tuple(reports), overall, stream_digest(stream))
