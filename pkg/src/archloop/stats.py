"""Per-cycle statistics, confidence intervals, and report emission.

Normal and Student-t quantiles are computed in-house (rational
approximation plus incomplete-beta inversion) so confidence intervals do
not depend on a statistics library; both are validated against tabulated
values in the test suite.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from statistics import mean, median, stdev

from .errors import EmptyCycleError, InsufficientDataError, UndefinedIntervalError

# -- quantiles ---------------------------------------------------------------

# Acklam's rational approximation to the inverse normal CDF,
# absolute error < 1.15e-9 over (0, 1)
_ACKLAM_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_ACKLAM_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_ACKLAM_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_ACKLAM_D = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
    3.754408661907416e00,
)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    p_low, p_high = 0.02425, 1 - 0.02425
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    if p < p_low:
        q = math.sqrt(-2 * math.log(p))
        return (
            ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
        ) / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1)
    if p > p_high:
        q = math.sqrt(-2 * math.log(1 - p))
        return -(
            ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
        ) / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1)
    q = p - 0.5
    r = q * q
    return (
        ((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]
    ) * q / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta function."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def _reg_inc_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    x = df / (df + t * t)
    tail = 0.5 * _reg_inc_beta(df / 2.0, 0.5, x)
    return 1.0 - tail if t >= 0 else tail


def t_quantile(p: float, df: float) -> float:
    """Inverse Student-t CDF via bisection on the CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    if p == 0.5:
        return 0.0
    lo, hi = -1.0, 1.0
    while t_cdf(lo, df) > p:
        lo *= 2
    while t_cdf(hi, df) < p:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- intervals ---------------------------------------------------------------


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion k/n."""
    if n == 0:
        raise UndefinedIntervalError("Wilson interval undefined for n = 0")
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    z = normal_quantile(0.5 + confidence / 2.0)
    p_hat = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p_hat + z2 / (2 * n)) / denom
    margin = (z / denom) * math.sqrt(p_hat * (1 - p_hat) / n + z2 / (4 * n * n))
    # boundary endpoints are exact; avoid floating-point residue there
    lo = 0.0 if k == 0 else max(0.0, center - margin)
    hi = 1.0 if k == n else min(1.0, center + margin)
    return lo, hi


def t_interval(
    samples: list[float], confidence: float = 0.95
) -> tuple[float, float, float]:
    """(mean, lo, hi) using the t-based interval with n-1 denominator."""
    n = len(samples)
    if n < 2:
        raise InsufficientDataError(f"t interval needs >= 2 samples, got {n}")
    m = mean(samples)
    s = stdev(samples)
    t = t_quantile(0.5 + confidence / 2.0, n - 1)
    half = t * s / math.sqrt(n)
    return m, m - half, m + half


# -- cycle summaries ---------------------------------------------------------


@dataclass(frozen=True)
class CycleStats:
    cycle: int
    n_gen: int
    n_valid: int
    valid_rate: float
    valid_rate_ci: tuple[float, float]
    best_acc: float | None
    mean_acc: float | None
    median_acc: float | None
    std_acc: float | None
    mean_acc_ci: tuple[float, float] | None
    frac_above_threshold: float | None
    frac_above_threshold_ci: tuple[float, float] | None
    n_unique_accepted: int
    corpus_size_after: int


def summarize_cycle(
    records,
    threshold: float,
    corpus_size_after: int = 0,
    confidence: float = 0.95,
) -> CycleStats:
    """Aggregate one cycle's candidate records into a stats row.

    Accuracy statistics cover valid candidates only; the above-threshold
    fraction uses a Wilson interval over the valid count.
    """
    if not records:
        raise EmptyCycleError("cannot summarize an empty cycle")
    cycles = {r.cycle for r in records}
    if len(cycles) != 1:
        raise ValueError(f"records span multiple cycles: {sorted(cycles)}")
    cycle = cycles.pop()
    n_gen = len(records)
    accuracies = [
        r.eval.accuracy for r in records if r.is_valid and r.eval is not None
    ]
    n_valid = sum(1 for r in records if r.is_valid)
    valid_ci = wilson_interval(n_valid, n_gen, confidence)
    n_accepted = sum(1 for r in records if r.disposition == "accepted")

    if accuracies:
        n_above = sum(1 for a in accuracies if a >= threshold)
        best = max(accuracies)
        mean_a = mean(accuracies)
        median_a = median(accuracies)
        std_a = stdev(accuracies) if len(accuracies) >= 2 else 0.0
        try:
            _, lo, hi = t_interval(accuracies, confidence)
            mean_ci = (max(0.0, lo), min(1.0, hi))
        except InsufficientDataError:
            mean_ci = None
        frac_above = n_above / len(accuracies)
        frac_ci = wilson_interval(n_above, len(accuracies), confidence)
    else:
        best = mean_a = median_a = std_a = None
        mean_ci = frac_above = frac_ci = None

    return CycleStats(
        cycle=cycle,
        n_gen=n_gen,
        n_valid=n_valid,
        valid_rate=n_valid / n_gen,
        valid_rate_ci=valid_ci,
        best_acc=best,
        mean_acc=mean_a,
        median_acc=median_a,
        std_acc=std_a,
        mean_acc_ci=mean_ci,
        frac_above_threshold=frac_above,
        frac_above_threshold_ci=frac_ci,
        n_unique_accepted=n_accepted,
        corpus_size_after=corpus_size_after,
    )


def pooled_accuracy(all_records, confidence: float = 0.95):
    """Mean accuracy with CI over the union of valid records of all cycles."""
    accuracies = [
        r.eval.accuracy for r in all_records if r.is_valid and r.eval is not None
    ]
    if len(accuracies) < 2:
        raise InsufficientDataError("pooled accuracy needs >= 2 valid records")
    return t_interval(accuracies, confidence)


# -- report emission ---------------------------------------------------------

REPORT_COLUMNS = (
    "Cycle", "Valid(%)", "Best(%)", "Mean(%)", ">=thr(%)", "Unique", "Total-train",
)


def _pct(value: float | None) -> float | None:
    return None if value is None else value * 100.0


def emit_report(stats: list[CycleStats], fmt: str = "csv") -> str:
    """Render the per-cycle table as CSV (full precision) or markdown."""
    if not stats:
        raise ValueError("no cycle stats to report")
    rows = [
        (
            s.cycle,
            _pct(s.valid_rate),
            _pct(s.best_acc),
            _pct(s.mean_acc),
            _pct(s.frac_above_threshold),
            s.n_unique_accepted,
            s.corpus_size_after,
        )
        for s in stats
    ]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in rows:
            writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()
    if fmt == "md":
        lines = [
            "| " + " | ".join(REPORT_COLUMNS) + " |",
            "|" + "|".join("---:" for _ in REPORT_COLUMNS) + "|",
        ]
        for row in rows:
            cells = []
            for i, v in enumerate(row):
                if v is None:
                    cells.append("-")
                elif isinstance(v, float):
                    cells.append(f"{v:.1f}" if i == 1 else f"{v:.2f}")
                else:
                    cells.append(str(v))
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format: {fmt!r}")


def parse_report_csv(text: str) -> list[dict]:
    """Parse emit_report CSV back into typed rows (lossless round-trip)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != REPORT_COLUMNS:
        raise ValueError(f"unexpected report header: {header}")
    out = []
    for row in reader:
        parsed: dict = {}
        for name, value in zip(REPORT_COLUMNS, row):
            if value == "":
                parsed[name] = None
            elif name in ("Cycle", "Unique", "Total-train"):
                parsed[name] = int(value)
            else:
                parsed[name] = float(value)
        out.append(parsed)
    return out


PLOT_METRICS = ("valid_rate", "best_acc", "mean_acc", "frac_above_threshold", "corpus_size")


def emit_plot_data(stats: list[CycleStats]) -> str:
    """Per-metric (cycle, value, ci_lo, ci_hi) rows for external plotting."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("metric", "cycle", "value", "ci_lo", "ci_hi"))
    for s in stats:
        series = [
            ("valid_rate", s.valid_rate, s.valid_rate_ci),
            ("best_acc", s.best_acc, None),
            ("mean_acc", s.mean_acc, s.mean_acc_ci),
            ("frac_above_threshold", s.frac_above_threshold, s.frac_above_threshold_ci),
            ("corpus_size", float(s.corpus_size_after), None),
        ]
        for metric, value, ci in series:
            if value is None:
                continue
            lo, hi = ("", "") if ci is None else (repr(ci[0]), repr(ci[1]))
            writer.writerow((metric, s.cycle, repr(float(value)), lo, hi))
    return buf.getvalue()
