"""Render figures next to the delimited output of each report.

Every report writer calls into this module after the CSV is on disk, so a
sweep produces ``<out>.csv`` plus ``<out>.png`` with the same stem. The Agg
backend keeps rendering headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_SYSTEM_STYLE = {
    "udd": dict(color="tab:blue", marker="o", label="UDD"),
    "cdd": dict(color="tab:orange", marker="s", label="CDD"),
    "qdd": dict(color="tab:green", marker="^", label="QDD"),
}


def _fig_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".png")


def _column(rows: list[dict], name: str):
    xs, ys = [], []
    for row in rows:
        v = row.get(name)
        if v is None or (isinstance(v, float) and v != v):
            continue
        xs.append(row["sigma_c"])
        ys.append(v)
    return xs, ys


def render_sweep(csv_path: Path, columns: list[str], rows: list[dict], cfg, rho: float) -> Path:
    """Error curves plus, when rule parameters are present, a parameter panel."""
    param_cols = [c for c in columns if ("_t1" in c or "_m0_" in c or "_m1_" in c or c.endswith("_t_z"))]
    have_params = any(any(row.get(c) is not None for row in rows) for c in param_cols)
    n_panels = 2 if have_params else 1
    fig, axes = plt.subplots(1, n_panels, figsize=(6.0 * n_panels, 4.2))
    axes = [axes] if n_panels == 1 else list(axes)

    ax = axes[0]
    for sysname in ("udd", "cdd", "qdd"):
        xs, ys = _column(rows, f"{sysname}_pe")
        if xs:
            ax.semilogy(xs, ys, markersize=4, **_SYSTEM_STYLE[sysname])
    title = f"pi1={cfg.pi1:g}, mu={cfg.mu:g}, sigma_s={cfg.sigma_s:g}, N={cfg.n_sensors}"
    if cfg.channel == "correlated":
        title += f", rho={rho:g}"
    ax.set_title(title, fontsize=10)
    ax.set_xlabel("channel noise sigma_c")
    ax.set_ylabel("Bayes error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()

    if have_params:
        ax = axes[1]
        styles = iter(["-", "--", "-.", ":"] * 6)
        for col in param_cols:
            xs, ys = _column(rows, col)
            if xs:
                ax.plot(xs, ys, next(styles), label=col)
        ax.set_xlabel("channel noise sigma_c")
        ax.set_ylabel("optimal rule parameters")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=7, ncol=2)

    fig.tight_layout()
    out = _fig_path(csv_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_boundary(csv_path: Path, rows: list[dict], cfg) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for regime, color in (("one_sensor", "tab:blue"), ("asymptotic", "tab:red")):
        pts = [(r["sigma_s"], r["sigma_c_star"]) for r in rows
               if r["regime"] == regime and r.get("crossed")]
        if pts:
            xs, ys = zip(*sorted(pts))
            ax.plot(xs, ys, "o-", color=color, markersize=3, label=regime)
    ax.set_xlabel("sensing noise sigma_s")
    ax.set_ylabel("equal-performance sigma_c*")
    ax.set_title("UDD / QDD equal-performance boundaries", fontsize=10)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out = _fig_path(csv_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_chernoff(csv_path: Path, rows: list[dict], cfg) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    sigma_s_values = sorted({r["sigma_s"] for r in rows})
    for sigma_s in sigma_s_values[:8]:
        pts = [(r["sigma_c"], r["qdd_advantage"]) for r in rows if r["sigma_s"] == sigma_s]
        xs, ys = zip(*sorted(pts))
        ax.plot(xs, ys, label=f"sigma_s={sigma_s:g}")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("channel noise sigma_c")
    ax.set_ylabel("C_qdd - C_udd (nats)")
    ax.set_title("Chernoff-information advantage of quantized reporting", fontsize=10)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = _fig_path(csv_path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
