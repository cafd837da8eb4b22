"""Figures of variable, guard and termination trajectories."""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .sos import TrajectoryBundle  # noqa: E402


def plot_bundle(
    bundle: TrajectoryBundle,
    path,
    variables: Optional[Sequence[str]] = None,
    title: str = "",
) -> None:
    """Write a two-panel figure: ρ on top, θ and ω as step rows below."""
    times = bundle.times
    if variables is None:
        first = bundle.rho[0]
        variables = [k for k in first.variables() if k not in first.discrete]
    actions = sorted(set().union(*bundle.theta))

    fig, (top, bottom) = plt.subplots(
        2, 1, sharex=True, figsize=(7, 5), gridspec_kw={"height_ratios": [3, 2]}
    )
    for name in variables:
        top.plot(times, [r[name] for r in bundle.rho], label=name)
    top.set_ylabel("value")
    if variables:
        top.legend(loc="best")
    if title:
        top.set_title(title)

    rows = actions + ["ω"]
    for i, name in enumerate(rows):
        if name == "ω":
            on = bundle.omega
        else:
            on = [name in th for th in bundle.theta]
        # off sits just below the row's tick, on just above
        bottom.step(times, [i - 0.3 + 0.6 * v for v in on], where="post")
    bottom.set_yticks(range(len(rows)))
    bottom.set_yticklabels(rows)
    bottom.set_ylim(-0.6, len(rows) - 0.4)
    bottom.grid(axis="y", alpha=0.3)
    bottom.set_xlabel("time")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
