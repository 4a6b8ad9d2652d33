from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from banachmc.common_values import CostCase, RecordLayout
from banachmc.modules.sampling import fit_rate_loglog
from banachmc.modules.systems.run_record import RunRecord


@dataclass(frozen=True)
class Series:
    name: str
    x: tuple[float, ...]
    y: tuple[float, ...]
    reference: bool = False


@dataclass
class PlotData:
    """Log-log series of one record, ready for any plotting front end."""

    x_label: str
    y_label: str
    series: list[Series] = field(default_factory=list)
    fitted_slopes: dict[str, float] = field(default_factory=dict)

    def by_name(self, name: str) -> Series:
        for series in self.series:
            if series.name == name:
                return series
        raise KeyError(name)


def _anchored_reference(name: str, x: np.ndarray, anchor_y: float, exponent: float) -> Series:
    """Reference line y = anchor_y (x / x_0)^-exponent through the first point."""
    return Series(name, tuple(x), tuple(anchor_y * (x / x[0]) ** -exponent), reference=True)


def _recorded_exponent(record: RunRecord, key: str) -> float | None:
    fit = record.fits.get(key)
    return float(fit[0]) if fit else None


def sweep_plot_data(record: RunRecord, cost_exponent: float | None = None) -> list[PlotData]:
    """Error, cost and wall time against eps, one series per case label.

    Cost reference lines default to the exponents stored in the record fits;
    the `fixed_r` series follows the baseline exponent.
    """
    if cost_exponent is None:
        cost_exponent = _recorded_exponent(record, "predicted_cost_exponent")
    fixed_r_exponent = _recorded_exponent(record, "fixed_r_cost_exponent")
    groups = defaultdict(list)
    for row in record.rows:
        groups[row["case_label"]].append(row)

    error_plot = PlotData("eps", "error")
    cost_plot = PlotData("eps", "cost")
    time_plot = PlotData("eps", "wall seconds")
    all_eps = sorted({row["eps"] for row in record.rows}, reverse=True)
    if all_eps:
        error_plot.series.append(Series("eps", tuple(all_eps), tuple(all_eps), reference=True))

    for label, rows in groups.items():
        eps = np.array([row["eps"] for row in rows])
        measured = [(row["eps"], row["err_measured"]) for row in rows if row["err_measured"] is not None]
        if measured:
            error_plot.series.append(
                Series(label, tuple(e for e, _ in measured), tuple(v for _, v in measured))
            )
        error_plot.series.append(
            Series(f"{label} bound", tuple(eps), tuple(row["err_bound"] for row in rows))
        )
        cost = np.array([row["cost_units"] for row in rows])
        cost_plot.series.append(Series(label, tuple(eps), tuple(cost)))
        if eps.size >= 2 and np.unique(eps).size >= 2:
            _, slope = fit_rate_loglog(eps, cost)
            cost_plot.fitted_slopes[label] = slope
        exponent = fixed_r_exponent if label == CostCase.FIXED_R.value else cost_exponent
        if exponent is not None and eps.size:
            cost_plot.series.append(
                _anchored_reference(f"{label} eps^-{exponent:.3g}", eps, cost[0], exponent)
            )
        time_plot.series.append(
            Series(label, tuple(eps), tuple(row["wall_seconds"] or 0.0 for row in rows))
        )
    return [error_plot, cost_plot, time_plot]


def rates_plot_data(record: RunRecord) -> list[PlotData]:
    """Error against M per (p, q) pair, with the M^-rate reference line."""
    groups = defaultdict(list)
    for row in record.rows:
        groups[(row["param_p"], row["param_q"])].append(row)
    plot = PlotData("M", "error")
    for (p, q), rows in groups.items():
        sizes = np.array([float(row["M"]) for row in rows])
        errors = np.array([row["err"] for row in rows])
        name = f"p={p:g}, q={q:g}"
        plot.series.append(Series(name, tuple(sizes), tuple(errors)))
        plot.series.append(
            _anchored_reference(f"{name} theory", sizes, errors[0], rows[0]["theory_rate"])
        )
        plot.fitted_slopes[name] = rows[0]["fitted_rate"]
    return [plot]


def plot_data(record: RunRecord, cost_exponent: float | None = None) -> list[PlotData]:
    if record.layout == RecordLayout.SWEEP:
        return sweep_plot_data(record, cost_exponent)
    if record.layout == RecordLayout.RATES:
        return rates_plot_data(record)
    raise ValueError(f"No plot data for the {record.layout.value} layout")
